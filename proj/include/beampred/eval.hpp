#pragma once

// Normalized-gain evaluation over trajectories whose snapshots are kept next to
// the oracle trace, plus closed-loop tracking with periodic neighbourhood scans.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "beampred/baselines.hpp"
#include "beampred/channel.hpp"
#include "beampred/forecaster.hpp"
#include "beampred/parallel.hpp"
#include "beampred/scenario.hpp"

namespace beampred {

/// One prediction query: the raw 2 x U window, the codebook size, and the true
/// trace from the first predicted slot onward (only the oracle reads it).
struct PredictRequest {
    std::span<const float> window;
    std::size_t q_count = 0;
    std::span<const TraceRecord> future;
};

class Predictor {
   public:
    virtual ~Predictor() = default;
    virtual std::string name() const = 0;
    virtual std::size_t u_len() const = 0;
    virtual std::size_t h_len() const = 0;
    /// Must be safe to call concurrently on disjoint request sets.
    virtual std::vector<std::vector<std::size_t>> predict(std::span<const PredictRequest> requests) const = 0;
};

class OraclePredictor : public Predictor {
   public:
    OraclePredictor(std::size_t u, std::size_t h) : u_(u), h_(h) {}
    std::string name() const override { return "oracle"; }
    std::size_t u_len() const override { return u_; }
    std::size_t h_len() const override { return h_; }
    std::vector<std::vector<std::size_t>> predict(std::span<const PredictRequest> reqs) const override {
        std::vector<std::vector<std::size_t>> out;
        for (const auto& r : reqs) {
            std::vector<std::size_t> p;
            for (std::size_t k = 0; k < h_; ++k) p.push_back(k < r.future.size() ? r.future[k].opt_beam : r.future.back().opt_beam);
            out.push_back(std::move(p));
        }
        return out;
    }

   private:
    std::size_t u_, h_;
};

class PersistencePredictor : public Predictor {
   public:
    PersistencePredictor(std::size_t u, std::size_t h) : u_(u), h_(h) {}
    std::string name() const override { return "persistence"; }
    std::size_t u_len() const override { return u_; }
    std::size_t h_len() const override { return h_; }
    std::vector<std::vector<std::size_t>> predict(std::span<const PredictRequest> reqs) const override {
        std::vector<std::vector<std::size_t>> out;
        for (const auto& r : reqs) out.push_back(persistence_predict(r.window, u_, r.q_count, h_));
        return out;
    }

   private:
    std::size_t u_, h_;
};

class LinearPredictor : public Predictor {
   public:
    LinearPredictor(std::size_t u, std::size_t h) : u_(u), h_(h) {}
    std::string name() const override { return "linear"; }
    std::size_t u_len() const override { return u_; }
    std::size_t h_len() const override { return h_; }
    std::vector<std::vector<std::size_t>> predict(std::span<const PredictRequest> reqs) const override {
        std::vector<std::vector<std::size_t>> out;
        for (const auto& r : reqs) out.push_back(linear_extrapolate(r.window, u_, r.q_count, h_));
        return out;
    }

   private:
    std::size_t u_, h_;
};

/// Beam indices from a normalised forecast, denormalised with the window's beam-row stats.
template <typename T>
std::vector<std::size_t> forecast_to_beams(const BasicTensor<T>& forecast_norm, std::span<const float> window, std::size_t u, std::size_t q_count) {
    return postprocess<T>(forecast_norm.data(), beam_stats<T>(window, u), q_count);
}

class ForecasterPredictor : public Predictor {
   public:
    explicit ForecasterPredictor(const Forecaster& model, std::string name = "forecaster") : model_(model), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    std::size_t u_len() const override { return model_.config().u_len; }
    std::size_t h_len() const override { return model_.config().h_len; }
    std::vector<std::vector<std::size_t>> predict(std::span<const PredictRequest> reqs) const override {
        std::vector<std::vector<std::size_t>> out;
        Tape<float> tape;
        const auto ctx = model_.make_context(tape, false);
        for (const auto& r : reqs) {
            const Var<float> f = model_.forward(tape, ctx, r.window, r.q_count);
            out.push_back(forecast_to_beams(f.value(), r.window, u_len(), r.q_count));
        }
        return out;
    }

   private:
    const Forecaster& model_;
    std::string name_;
};

class LstmPredictor : public Predictor {
   public:
    explicit LstmPredictor(const Lstm& model, std::string name = "lstm") : model_(model), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    std::size_t u_len() const override { return model_.config().u_len; }
    std::size_t h_len() const override { return model_.config().h_len; }
    std::vector<std::vector<std::size_t>> predict(std::span<const PredictRequest> reqs) const override {
        std::vector<std::vector<std::size_t>> out;
        Tape<float> tape;
        const auto ctx = model_.make_context(tape, false);
        for (const auto& r : reqs) {
            const Var<float> f = model_.forward(tape, ctx, r.window);
            out.push_back(forecast_to_beams(f.value(), r.window, u_len(), r.q_count));
        }
        return out;
    }

   private:
    const Lstm& model_;
    std::string name_;
};

// ---------------------------------------------------------------------------

struct EvalReport {
    std::string predictor;
    std::string scenario;
    std::vector<double> per_step;  // mean normalized gain at steps 1..H
    double overall = 0.0;
    std::size_t count = 0;  // windows
    std::uint64_t config_hash = 0;
};

/// Gain scan of every slot of a trajectory, computed once.
class GainTable {
   public:
    GainTable(std::span<const ChannelSnapshot> snaps, const Codebook& cb) : q_(cb.num_beams) {
        gains_.reserve(snaps.size());
        best_.reserve(snaps.size());
        for (const auto& s : snaps) {
            gains_.push_back(beam_gains(channel_vector(s, cb.num_antennas, cb.antenna_spacing_over_wavelength), cb));
            best_.push_back(gains_.back()[argmax_lowest(gains_.back())]);
        }
    }

    std::size_t slots() const { return gains_.size(); }
    double gain(std::size_t slot, std::size_t q) const { return gains_.at(slot).at(q); }

    double normalized(std::size_t slot, std::size_t q) const {
        if (q >= q_) throw IndexError("normalized gain: beam " + std::to_string(q) + " out of range");
        const double best = best_.at(slot);
        return best == 0.0 ? 1.0 : std::min(1.0, gains_[slot][q] / best);
    }

   private:
    std::size_t q_;
    std::vector<std::vector<double>> gains_;
    std::vector<double> best_;
};

namespace detail {
inline void check_snapshots(const Trajectory& t, std::size_t index) {
    if (t.snapshots.size() < t.trace.size())
        throw DataError("trajectory " + std::to_string(index) + ": " + std::to_string(t.trace.size()) + " trace records but only " +
                        std::to_string(t.snapshots.size()) + " snapshots");
}
}  // namespace detail

struct EvalOptions {
    std::size_t stride = 1;
    std::size_t workers = 1;
    std::size_t chunk = 32;
    std::string scenario = "default";
    std::uint64_t config_hash = 0;
};

/// Runs the predictor on every admissible window and averages the normalized gain
/// of each predicted step against the stored snapshots.
inline EvalReport evaluate(const Predictor& predictor, std::span<const Trajectory> trajectories, const Codebook& cb, const EvalOptions& opt = {}) {
    if (opt.stride < 1) throw ConfigError("eval stride must be >= 1");
    const std::size_t u = predictor.u_len(), h = predictor.h_len();
    const auto q = static_cast<std::uint32_t>(cb.num_beams);

    struct Job {
        std::size_t traj, start;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        detail::check_snapshots(trajectories[i], i);
        const std::size_t n = window_count(trajectories[i].trace.size(), u, h, opt.stride);
        for (std::size_t w = 0; w < n; ++w) jobs.push_back({i, w * opt.stride});
    }
    if (jobs.empty()) throw ConfigError("evaluate: no trajectory is long enough for U+H=" + std::to_string(u + h));

    std::vector<GainTable> tables(trajectories.size(), GainTable({}, cb));
    parallel_for(trajectories.size(), opt.workers, [&](std::size_t i) { tables[i] = GainTable(trajectories[i].snapshots, cb); });

    std::vector<std::vector<float>> windows(jobs.size());
    for (std::size_t j = 0; j < jobs.size(); ++j) windows[j] = window_input(trajectories[jobs[j].traj].trace, jobs[j].start, u, q);

    std::vector<std::vector<double>> gains(jobs.size());
    const std::size_t chunks = (jobs.size() + opt.chunk - 1) / opt.chunk;
    parallel_for(chunks, opt.workers, [&](std::size_t c) {
        const std::size_t b = c * opt.chunk, e = std::min(jobs.size(), b + opt.chunk);
        std::vector<PredictRequest> reqs;
        for (std::size_t j = b; j < e; ++j) {
            const auto& tr = trajectories[jobs[j].traj].trace;
            reqs.push_back({windows[j], q, std::span<const TraceRecord>(tr).subspan(jobs[j].start + u)});
        }
        const auto preds = predictor.predict(reqs);
        for (std::size_t j = b; j < e; ++j) {
            const auto& p = preds[j - b];
            if (p.size() != h) throw ShapeError("predictor `" + predictor.name() + "` returned " + std::to_string(p.size()) + " steps");
            gains[j].resize(h);
            for (std::size_t k = 0; k < h; ++k) gains[j][k] = tables[jobs[j].traj].normalized(jobs[j].start + u + k, p[k]);
        }
    });

    EvalReport r;
    r.predictor = predictor.name();
    r.scenario = opt.scenario;
    r.config_hash = opt.config_hash;
    r.count = jobs.size();
    r.per_step.assign(h, 0.0);
    for (const auto& g : gains)
        for (std::size_t k = 0; k < h; ++k) r.per_step[k] += g[k];
    for (auto& v : r.per_step) v /= double(jobs.size());
    double total = 0.0;
    for (double v : r.per_step) total += v;
    r.overall = total / double(h);
    return r;
}

// ---------------------------------------------------------------------------
// Closed loop

struct ClosedLoopResult {
    EvalReport report;
    std::vector<std::size_t> measured;  // beam history fed back to the predictor, one per slot
};

/// Warm-starts with U oracle slots, then predicts H slots, re-measures the best beam
/// within +-`neighborhood` (cyclic) of each prediction for the next `refresh_every`
/// slots and appends those measurements to the input history.
inline ClosedLoopResult closed_loop_track(const Predictor& predictor, const Trajectory& traj, const Codebook& cb, std::size_t refresh_every,
                                          std::size_t neighborhood, const std::string& scenario = "default", std::uint64_t config_hash = 0) {
    if (refresh_every < 1) throw ConfigError("closed loop: refresh_every must be >= 1");
    const std::size_t u = predictor.u_len(), h = predictor.h_len(), q = cb.num_beams;
    const std::size_t slots = traj.trace.size();
    detail::check_snapshots(traj, 0);
    if (slots < u + refresh_every)
        throw ConfigError("closed loop: trajectory of " + std::to_string(slots) + " slots is shorter than U + refresh_every");
    const GainTable table(traj.snapshots, cb);

    ClosedLoopResult res;
    for (std::size_t n = 0; n < u; ++n) res.measured.push_back(traj.trace[n].opt_beam);
    std::vector<double> sums(h, 0.0);
    std::vector<std::size_t> counts(h, 0);
    std::size_t windows = 0;

    for (std::size_t n = u; n < slots; n += refresh_every) {
        std::vector<float> window(2 * u);
        for (std::size_t t = 0; t < u; ++t) {
            window[t] = static_cast<float>(static_cast<double>(res.measured[n - u + t]) / double(q));
            window[u + t] = static_cast<float>(traj.trace[n - u + t].aod_rad);
        }
        const PredictRequest req{window, q, std::span<const TraceRecord>(traj.trace).subspan(n)};
        const auto pred = predictor.predict(std::span<const PredictRequest>(&req, 1)).front();
        ++windows;
        for (std::size_t k = 0; k < h && n + k < slots; ++k) {
            sums[k] += table.normalized(n + k, pred[k]);
            ++counts[k];
        }
        for (std::size_t k = 0; k < refresh_every && n + k < slots; ++k) {
            const std::size_t centre = pred[std::min(k, h - 1)];
            std::size_t best = centre;
            if (2 * neighborhood + 1 >= q) {
                best = traj.trace[n + k].opt_beam;
            } else {
                std::vector<std::size_t> cands;
                for (std::size_t d = 0; d <= 2 * neighborhood; ++d) cands.push_back((centre + q - neighborhood + d) % q);
                std::sort(cands.begin(), cands.end());
                for (std::size_t c : cands)
                    if (table.gain(n + k, c) > table.gain(n + k, best) || (table.gain(n + k, c) == table.gain(n + k, best) && c < best)) best = c;
            }
            res.measured.push_back(best);
        }
    }

    EvalReport& r = res.report;
    r.predictor = predictor.name();
    r.scenario = scenario;
    r.config_hash = config_hash;
    r.count = windows;
    r.per_step.assign(h, 0.0);
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < h; ++k) {
        r.per_step[k] = counts[k] ? sums[k] / double(counts[k]) : 0.0;
        if (counts[k]) {
            total += r.per_step[k];
            ++used;
        }
    }
    r.overall = used ? total / double(used) : 0.0;
    return res;
}

// ---------------------------------------------------------------------------
// Report output

inline void write_report_rows(std::ostream& os, const EvalReport& r) {
    char buf[256];
    for (std::size_t k = 0; k < r.per_step.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%s,%s,%.9f,%zu\n", k + 1, r.predictor.c_str(), r.scenario.c_str(), r.per_step[k], r.count);
        os << buf;
    }
}

inline void write_report_csv(std::ostream& os, std::span<const EvalReport> reports) {
    os << "step,predictor,scenario,mean_gain,n\n";
    for (const auto& r : reports) write_report_rows(os, r);
}

}  // namespace beampred
