#include <gtest/gtest.h>

#include <complex>
#include <numbers>
#include <sstream>

#include "beampred/eval.hpp"

using namespace beampred;

namespace {

std::vector<Trajectory> scenario(std::size_t n, std::size_t slots, std::uint64_t seed = 3, std::size_t q = 64) {
    ScenarioSetConfig sc;
    sc.num_trajectories = n;
    sc.num_slots = slots;
    sc.seed = seed;
    sc.num_antennas = sc.num_beams = q;
    std::vector<Trajectory> out;
    for (const auto& c : make_scenario_set(sc)) out.push_back(simulate(c));
    return out;
}

Trajectory stationary(std::size_t slots) {
    TrajectoryConfig c;
    c.ut_speed_mps = 0.0;
    c.num_slots = slots;
    return simulate(c);
}

// Normalized gain written out directly from the channel model.
double direct_normalized_gain(const ChannelSnapshot& snap, std::size_t pick, std::size_t m) {
    const double pi = std::numbers::pi;
    std::vector<std::complex<double>> h(m);
    for (const auto& p : snap.paths)
        for (std::size_t i = 0; i < m; ++i)
            h[i] += std::sqrt(1.0 / p.path_loss) * p.complex_gain * std::exp(std::complex<double>(0.0, -pi * double(i) * std::sin(p.aod_rad)));
    std::vector<double> g(m);
    for (std::size_t b = 0; b < m; ++b) {
        std::complex<double> acc;
        for (std::size_t i = 0; i < m; ++i) acc += h[i] * std::polar(1.0 / std::sqrt(double(m)), 2.0 * pi * double(i) * double(b) / double(m));
        g[b] = std::norm(acc);
    }
    const double best = *std::max_element(g.begin(), g.end());
    return best > 0 ? std::min(1.0, g[pick] / best) : 1.0;
}

// Predictor that always emits a fixed beam.
class FixedPredictor : public Predictor {
   public:
    FixedPredictor(std::size_t beam, std::size_t u, std::size_t h) : beam_(beam), u_(u), h_(h) {}
    std::string name() const override { return "fixed"; }
    std::size_t u_len() const override { return u_; }
    std::size_t h_len() const override { return h_; }
    std::vector<std::vector<std::size_t>> predict(std::span<const PredictRequest> reqs) const override {
        return std::vector<std::vector<std::size_t>>(reqs.size(), std::vector<std::size_t>(h_, beam_));
    }

   private:
    std::size_t beam_, u_, h_;
};

}  // namespace

TEST(Evaluate, OracleIsExactlyOne) {
    const auto trajs = scenario(6, 70);
    EvalOptions opt;
    opt.stride = 3;
    const auto r = evaluate(OraclePredictor(40, 10), trajs, Codebook{}, opt);
    ASSERT_EQ(r.per_step.size(), 10u);
    for (double v : r.per_step) EXPECT_EQ(v, 1.0);
    EXPECT_EQ(r.overall, 1.0);
    EXPECT_EQ(r.count, 6 * ((70 - 50) / 3 + 1));
}

TEST(Evaluate, PersistenceOnConstantTraceIsOne) {
    const std::vector<Trajectory> trajs{stationary(60), stationary(55)};
    const auto r = evaluate(PersistencePredictor(40, 10), trajs, Codebook{});
    for (double v : r.per_step) EXPECT_EQ(v, 1.0);
    EXPECT_EQ(r.count, 11u + 6u);
}

TEST(Evaluate, MatchesDirectRecomputation) {
    const auto trajs = scenario(5, 66, 8);
    const PersistencePredictor pers(40, 10);
    const LinearPredictor lin(40, 10);
    for (const Predictor* p : {static_cast<const Predictor*>(&pers), static_cast<const Predictor*>(&lin)}) {
        EvalOptions opt;
        opt.stride = 2;
        opt.workers = 3;
        opt.chunk = 5;
        const auto r = evaluate(*p, trajs, Codebook{}, opt);
        std::vector<double> sums(10, 0.0);
        std::size_t windows = 0;
        for (const auto& t : trajs)
            for (std::size_t start = 0; start + 50 <= t.trace.size(); start += 2) {
                const auto w = window_input(t.trace, start, 40, 64);
                const auto pred = p == &pers ? persistence_predict(w, 40, 64, 10) : linear_extrapolate(w, 40, 64, 10);
                for (std::size_t k = 0; k < 10; ++k) sums[k] += direct_normalized_gain(t.snapshots[start + 40 + k], pred[k], 64);
                ++windows;
            }
        ASSERT_EQ(r.count, windows);
        for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(r.per_step[k], sums[k] / double(windows), 1e-9) << p->name() << " step " << k + 1;
    }
}

TEST(Evaluate, PersistenceDegradesWhenTheBeamMoves) {
    TrajectoryConfig c;
    c.ut_speed_mps = 20.0;
    c.ut_start_m = {2.0, 15.0};
    c.num_slots = 80;
    c.num_nlos_paths = 0;
    const std::vector<Trajectory> trajs{simulate(c)};
    ASSERT_NE(trajs[0].trace[40].opt_beam, trajs[0].trace[49].opt_beam);
    const auto r = evaluate(PersistencePredictor(40, 10), trajs, Codebook{});
    EXPECT_LT(r.per_step.back(), 1.0);
    EXPECT_GE(r.per_step.front(), r.per_step.back());
}

TEST(Evaluate, DeterministicAcrossWorkers) {
    const auto trajs = scenario(7, 64, 12);
    EvalOptions a, b;
    b.workers = 4;
    b.chunk = 3;
    const auto ra = evaluate(LinearPredictor(40, 10), trajs, Codebook{}, a);
    const auto rb = evaluate(LinearPredictor(40, 10), trajs, Codebook{}, b);
    EXPECT_EQ(ra.per_step, rb.per_step);
}

TEST(Evaluate, GainsStayInUnitInterval) {
    for (std::size_t q : {32u, 128u}) {
        const auto trajs = scenario(4, 60, 2, q);
        for (std::size_t beam : {0u, 7u, 31u}) {
            const auto r = evaluate(FixedPredictor(beam, 40, 10), trajs, Codebook{q, q, 0.5});
            for (double v : r.per_step) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
    }
}

TEST(Evaluate, MissingSnapshotsAreADataError) {
    auto trajs = scenario(2, 60);
    trajs[1].snapshots.clear();
    EXPECT_THROW(evaluate(OraclePredictor(40, 10), trajs, Codebook{}), DataError);
}

TEST(Evaluate, TooShortTrajectoriesRejected) {
    const std::vector<Trajectory> trajs{stationary(45)};
    EXPECT_THROW(evaluate(OraclePredictor(40, 10), trajs, Codebook{}), ConfigError);
}

TEST(Evaluate, ForecasterAndLstmPredictorsRunInRange) {
    const auto trajs = scenario(2, 55);
    Forecaster f{ModelConfig{}};
    Lstm l{LstmConfig{}};
    ForecasterPredictor fp(f, "forecaster");
    LstmPredictor lp(l, "lstm");
    EvalOptions opt;
    opt.stride = 5;
    for (const Predictor* p : {static_cast<const Predictor*>(&fp), static_cast<const Predictor*>(&lp)}) {
        const auto r = evaluate(*p, trajs, Codebook{}, opt);
        EXPECT_EQ(r.count, 4u);
        for (double v : r.per_step) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(ClosedLoop, FullScanFeedsBackTheOracleTrace) {
    const auto t = scenario(1, 90, 21).front();
    const auto res = closed_loop_track(LinearPredictor(40, 10), t, Codebook{}, 5, 32);
    ASSERT_EQ(res.measured.size(), 90u);
    for (std::size_t n = 0; n < 90; ++n) EXPECT_EQ(res.measured[n], t.trace[n].opt_beam);
}

TEST(ClosedLoop, OracleWithRefreshEveryOneIsPerfect) {
    const auto t = scenario(1, 80, 22).front();
    const auto res = closed_loop_track(OraclePredictor(40, 10), t, Codebook{}, 1, 2);
    for (double v : res.report.per_step) EXPECT_EQ(v, 1.0);
    EXPECT_EQ(res.report.count, 40u);
}

TEST(ClosedLoop, ZeroNeighborhoodEchoesPrediction) {
    const auto t = scenario(1, 70, 23).front();
    const auto res = closed_loop_track(FixedPredictor(9, 40, 10), t, Codebook{}, 3, 0);
    for (std::size_t n = 40; n < 70; ++n) EXPECT_EQ(res.measured[n], 9u);
    EXPECT_EQ(res.report.per_step.size(), 10u);
    EXPECT_EQ(res.report.count, 10u);
    for (double v : res.report.per_step) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(ClosedLoop, NeighborhoodPicksBestNearbyBeam) {
    const auto t = scenario(1, 60, 24).front();
    const GainTable table(t.snapshots, Codebook{});
    const std::size_t w = 2;
    const auto res = closed_loop_track(FixedPredictor(20, 40, 10), t, Codebook{}, 2, w);
    for (std::size_t n = 40; n < 60; ++n) {
        std::size_t best = 18;
        for (std::size_t c = 18; c <= 22; ++c)
            if (table.gain(n, c) > table.gain(n, best)) best = c;
        EXPECT_EQ(res.measured[n], best) << "slot " << n;
    }
}

TEST(ClosedLoop, BadArguments) {
    const auto t = scenario(1, 60, 25).front();
    EXPECT_THROW(closed_loop_track(OraclePredictor(40, 10), t, Codebook{}, 0, 2), ConfigError);
    EXPECT_THROW(closed_loop_track(OraclePredictor(40, 10), t, Codebook{}, 25, 2), ConfigError);
}

TEST(Report, CsvSchema) {
    EvalReport r;
    r.predictor = "persistence";
    r.scenario = "v5";
    r.per_step = {1.0, 0.5};
    r.count = 3;
    std::ostringstream os;
    write_report_csv(os, std::vector<EvalReport>{r});
    EXPECT_EQ(os.str(), "step,predictor,scenario,mean_gain,n\n1,persistence,v5,1.000000000,3\n2,persistence,v5,0.500000000,3\n");
}
