#pragma once

// Comparators on the same 2 x U window the forecaster sees: persistence, a
// least-squares line through the beam row, and a stacked LSTM.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "beampred/autodiff.hpp"
#include "beampred/config.hpp"
#include "beampred/forecaster.hpp"
#include "beampred/params.hpp"
#include "beampred/scenario.hpp"

namespace beampred {

namespace detail {
inline std::size_t to_beam_index(double normalized, std::size_t q_count) {
    double idx = std::floor(normalized * static_cast<double>(q_count) + 0.5);
    if (!std::isfinite(idx)) idx = 0.0;
    return static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(q_count - 1)));
}

inline void check_window(std::span<const float> window, std::size_t u) {
    if (u < 1 || window.size() < u) throw ShapeError("baseline: window shorter than U=" + std::to_string(u));
}
}  // namespace detail

/// Repeats the last observed beam index h times.
inline std::vector<std::size_t> persistence_predict(std::span<const float> window, std::size_t u, std::size_t q_count, std::size_t h) {
    detail::check_window(window, u);
    return std::vector<std::size_t>(h, detail::to_beam_index(window[u - 1], q_count));
}

/// Least-squares line through the U normalized beam values, evaluated at the next
/// h slots (still normalized).
inline std::vector<double> linear_extrapolate_normalized(std::span<const float> window, std::size_t u, std::size_t h) {
    if (u < 2) throw DomainError("linear_extrapolate: needs U >= 2");
    detail::check_window(window, u);
    double tm = 0.0, ym = 0.0;
    for (std::size_t t = 0; t < u; ++t) {
        tm += double(t);
        ym += window[t];
    }
    tm /= double(u);
    ym /= double(u);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t t = 0; t < u; ++t) {
        sxy += (double(t) - tm) * (window[t] - ym);
        sxx += (double(t) - tm) * (double(t) - tm);
    }
    const double slope = sxy / sxx;
    std::vector<double> out(h);
    for (std::size_t n = 1; n <= h; ++n) out[n - 1] = ym + slope * (double(u - 1 + n) - tm);
    return out;
}

inline std::vector<std::size_t> linear_extrapolate(std::span<const float> window, std::size_t u, std::size_t q_count, std::size_t h) {
    std::vector<std::size_t> out;
    for (double v : linear_extrapolate_normalized(window, u, h)) out.push_back(detail::to_beam_index(v, q_count));
    return out;
}

// ---------------------------------------------------------------------------
// LSTM

struct LstmConfig {
    InputVars input_vars = InputVars::both;
    std::size_t u_len = 40;
    std::size_t h_len = 10;
    std::size_t hidden_size = 64;
    std::size_t layers = 2;
    std::uint64_t seed = 7;

    std::size_t c_vars() const { return input_vars == InputVars::both ? 2 : 1; }

    void validate() const {
        if (hidden_size < 1 || layers < 1) throw ConfigError("lstm: hidden_size and layers must be >= 1");
        if (u_len < 1 || h_len < 1) throw ConfigError("lstm: u_len and h_len must be >= 1");
    }

    /// Reads `lstm.*` keys; U, H and the input layout come from `model.*`.
    static LstmConfig from_config(const KeyValueConfig& kv) {
        LstmConfig c;
        c.input_vars = parse_input_vars(kv.get<std::string>("model.input_vars", "both"));
        c.u_len = kv.get<std::size_t>("model.u_len", c.u_len);
        c.h_len = kv.get<std::size_t>("model.h_len", c.h_len);
        c.hidden_size = kv.get<std::size_t>("lstm.hidden_size", c.hidden_size);
        c.layers = kv.get<std::size_t>("lstm.layers", c.layers);
        c.seed = kv.get<std::uint64_t>("lstm.seed", c.seed);
        c.validate();
        return c;
    }

    static std::vector<std::string> keys() { return {"lstm.hidden_size", "lstm.layers", "lstm.seed"}; }
};

/// Gate values of one forward pass, per layer and step: i, f, o in (0,1) and the
/// cell candidate g in (-1,1).
template <typename T>
struct LstmGateLog {
    std::vector<BasicTensor<T>> input, forget, output, candidate;
};

template <typename T>
class BasicLstm {
   public:
    using Context = std::map<std::string, Var<T>>;

    explicit BasicLstm(LstmConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        const std::size_t hs = cfg_.hidden_size;
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            const std::string pre = "lstm.layer" + std::to_string(l) + ".";
            const std::size_t in = l == 0 ? cfg_.c_vars() : hs;
            add_param(pre + "wx", {in, 4 * hs}, InitScheme::uniform_scaled, hs);
            add_param(pre + "wh", {hs, 4 * hs}, InitScheme::uniform_scaled, hs);
            add_param(pre + "b", {4 * hs}, InitScheme::zeros, 0);
        }
        add_param("lstm.head.w", {hs, cfg_.h_len}, InitScheme::uniform_scaled, hs);
        add_param("lstm.head.b", {cfg_.h_len}, InitScheme::zeros, 0);
    }

    const LstmConfig& config() const { return cfg_; }
    BasicParamStore<T>& params() { return params_; }
    const BasicParamStore<T>& params() const { return params_; }
    std::uint64_t frozen_checksum() const { return params_.frozen_checksum(); }

    Context make_context(Tape<T>& tape, bool differentiable = true) const {
        Context ctx;
        for (const auto& [name, e] : params_.entries()) ctx.emplace(name, differentiable ? params_.bind(tape, name) : tape.constant(e.value));
        return ctx;
    }

    /// Normalised H-step forecast of one raw 2 x U window.
    Var<T> forward(Tape<T>& tape, const Context& ctx, std::span<const float> window, LstmGateLog<T>* log = nullptr) const {
        const auto x_raw = select_input<T>(window, cfg_.u_len, cfg_.input_vars);
        return forward_input(tape, ctx, x_raw, log);
    }

    Var<T> forward_input(Tape<T>& tape, const Context& ctx, const BasicTensor<T>& x_raw, LstmGateLog<T>* log = nullptr) const {
        const std::size_t hs = cfg_.hidden_size, u = cfg_.u_len;
        if (x_raw.shape() != Shape{cfg_.c_vars(), u}) throw ShapeError("lstm: input " + shape_str(x_raw.shape()));
        const auto x_norm = revin_normalize(x_raw).first;
        Var<T> seq = transpose(tape.constant(x_norm));  // U x C
        Var<T> h;
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            const std::string pre = "lstm.layer" + std::to_string(l) + ".";
            Var<T> xw = linear(seq, at(ctx, pre + "wx"), at(ctx, pre + "b"));  // U x 4H
            const Var<T>& wh = at(ctx, pre + "wh");
            h = tape.constant(BasicTensor<T>({1, hs}));
            Var<T> c = h;
            std::vector<Var<T>> outputs;
            outputs.reserve(u);
            for (std::size_t t = 0; t < u; ++t) {
                Var<T> z = add(slice(xw, 0, t, t + 1), matmul(h, wh));
                Var<T> ig = sigmoid(slice(z, 1, 0, hs));
                Var<T> fg = sigmoid(slice(z, 1, hs, 2 * hs));
                Var<T> gg = tanh(slice(z, 1, 2 * hs, 3 * hs));
                Var<T> og = sigmoid(slice(z, 1, 3 * hs, 4 * hs));
                c = add(mul(fg, c), mul(ig, gg));
                h = mul(og, tanh(c));
                if (l + 1 < cfg_.layers) outputs.push_back(h);
                if (log) {
                    log->input.push_back(ig.value());
                    log->forget.push_back(fg.value());
                    log->output.push_back(og.value());
                    log->candidate.push_back(gg.value());
                }
            }
            if (l + 1 < cfg_.layers) seq = concat(outputs, 0);
        }
        Var<T> out = linear(h, at(ctx, "lstm.head.w"), at(ctx, "lstm.head.b"));
        out = reshape(out, {cfg_.h_len});
        for (T v : out.value().data())
            if (!std::isfinite(static_cast<double>(v))) throw NumericError("lstm: non-finite forecast");
        return out;
    }

    Var<T> sample_loss(Tape<T>& tape, const Context& ctx, const WindowedSample& s) const {
        return forecast_loss(forward(tape, ctx, s.x), tape.constant(normalized_target<T>(s, cfg_.u_len, cfg_.h_len)));
    }

    Var<T> batch_loss(Tape<T>& tape, std::span<const WindowedSample* const> batch) const {
        if (batch.empty()) throw ShapeError("batch_loss: empty batch");
        const Context ctx = make_context(tape);
        Var<T> total = sample_loss(tape, ctx, *batch[0]);
        for (std::size_t i = 1; i < batch.size(); ++i) total = add(total, sample_loss(tape, ctx, *batch[i]));
        return scale(total, static_cast<T>(1.0 / double(batch.size())));
    }

   private:
    static const Var<T>& at(const Context& ctx, const std::string& name) {
        auto it = ctx.find(name);
        if (it == ctx.end()) throw IndexError("lstm: no parameter `" + name + "`");
        return it->second;
    }

    void add_param(const std::string& name, Shape shape, InitScheme scheme, std::size_t fan_in) {
        params_.add(name, seeded_init<T>(name, shape, scheme, cfg_.seed, fan_in), true);
    }

    LstmConfig cfg_;
    BasicParamStore<T> params_;
};

using Lstm = BasicLstm<float>;

}  // namespace beampred
