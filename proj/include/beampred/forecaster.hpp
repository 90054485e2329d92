#pragma once

// Beam forecaster: RevIN -> patching -> patch embedding -> cross-variable attention
// -> prototype reprogramming -> [prompt prefix ; patch tokens] -> frozen transformer
// -> output projection over the patch positions.
//
// Only the adapters around the backbone train. The vocabulary table, positional
// table and every backbone weight are created frozen from the model seed.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "beampred/autodiff.hpp"
#include "beampred/config.hpp"
#include "beampred/params.hpp"
#include "beampred/prompt.hpp"
#include "beampred/scenario.hpp"

namespace beampred {

enum class InputVars { both, beam, aod };

inline const char* to_string(InputVars v) {
    switch (v) {
        case InputVars::beam: return "beam";
        case InputVars::aod: return "aod";
        default: return "both";
    }
}

inline InputVars parse_input_vars(const std::string& s) {
    if (s == "both") return InputVars::both;
    if (s == "beam") return InputVars::beam;
    if (s == "aod") return InputVars::aod;
    throw ConfigError("model.input_vars must be both, beam or aod (got `" + s + "`)");
}

struct ModelConfig {
    InputVars input_vars = InputVars::both;
    std::size_t u_len = 40;
    std::size_t h_len = 10;
    std::size_t patch_len = 16;
    std::size_t patch_stride = 8;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t backbone_dim = 64;
    std::size_t backbone_layers = 2;
    std::size_t backbone_heads = 4;
    std::size_t vocab_size = 4096;
    std::size_t n_prototypes = 100;
    std::size_t max_positions = 128;
    bool use_prompt = true;
    std::uint64_t seed = 7;

    std::size_t c_vars() const { return input_vars == InputVars::both ? 2 : 1; }
    std::size_t num_patches() const { return (u_len - patch_len) / patch_stride + 2; }
    std::size_t head_dim() const { return d_model / n_heads; }

    void validate() const {
        if (u_len < 2 || h_len < 1) throw ConfigError("model: u_len >= 2 and h_len >= 1 required");
        if (patch_len < 1 || patch_stride < 1) throw ConfigError("model: patch_len and patch_stride must be >= 1");
        if (patch_len > u_len) throw ConfigError("model: patch_len " + std::to_string(patch_len) + " exceeds u_len " + std::to_string(u_len));
        if (n_heads < 1 || head_dim() < 1) throw ConfigError("model: per-head dim floor(d_model / n_heads) must be >= 1");
        if (backbone_heads < 1 || backbone_dim % backbone_heads != 0) throw ConfigError("model: backbone_dim must divide into backbone_heads");
        if (backbone_layers < 1) throw ConfigError("model: backbone_layers must be >= 1");
        if (n_prototypes < 1 || n_prototypes >= vocab_size) throw ConfigError("model: need 1 <= n_prototypes < vocab_size");
        if (num_patches() > max_positions) throw ConfigError("model: too many patches for max_positions");
    }

    /// Model keys under the `model.` prefix.
    static ModelConfig from_config(const KeyValueConfig& kv) {
        ModelConfig c;
        c.input_vars = parse_input_vars(kv.get<std::string>("model.input_vars", "both"));
        c.u_len = kv.get<std::size_t>("model.u_len", c.u_len);
        c.h_len = kv.get<std::size_t>("model.h_len", c.h_len);
        c.patch_len = kv.get<std::size_t>("model.patch_len", c.patch_len);
        c.patch_stride = kv.get<std::size_t>("model.patch_stride", c.patch_stride);
        c.d_model = kv.get<std::size_t>("model.d_model", c.d_model);
        c.n_heads = kv.get<std::size_t>("model.n_heads", c.n_heads);
        c.backbone_dim = kv.get<std::size_t>("model.backbone_dim", c.backbone_dim);
        c.backbone_layers = kv.get<std::size_t>("model.backbone_layers", c.backbone_layers);
        c.backbone_heads = kv.get<std::size_t>("model.backbone_heads", c.backbone_heads);
        c.vocab_size = kv.get<std::size_t>("model.vocab_size", c.vocab_size);
        c.n_prototypes = kv.get<std::size_t>("model.n_prototypes", c.n_prototypes);
        c.max_positions = kv.get<std::size_t>("model.max_positions", c.max_positions);
        c.use_prompt = kv.get<bool>("model.use_prompt", c.use_prompt);
        c.seed = kv.get<std::uint64_t>("model.seed", c.seed);
        c.validate();
        return c;
    }

    static std::vector<std::string> keys() {
        return {"model.input_vars",     "model.u_len",          "model.h_len",      "model.patch_len",  "model.patch_stride",
                "model.d_model",        "model.n_heads",        "model.backbone_dim", "model.backbone_layers", "model.backbone_heads",
                "model.vocab_size",     "model.n_prototypes",   "model.max_positions", "model.use_prompt", "model.seed"};
    }
};

// ---------------------------------------------------------------------------
// Pipeline stages as free functions

struct RevinStats {
    double mean = 0.0;
    double std = 1.0;
};

inline constexpr double kRevinEps = 1e-5;

/// Per-row standardisation: (x - mean) / sqrt(var + 1e-5), population variance.
template <typename T>
std::pair<BasicTensor<T>, std::vector<RevinStats>> revin_normalize(const BasicTensor<T>& x) {
    if (x.rank() != 2) throw ShapeError("revin_normalize: expected C x U, got " + shape_str(x.shape()));
    const std::size_t c = x.dim(0), u = x.dim(1);
    BasicTensor<T> out(x.shape());
    std::vector<RevinStats> stats(c);
    for (std::size_t r = 0; r < c; ++r) {
        double mean = 0.0;
        for (std::size_t t = 0; t < u; ++t) mean += x.at(r, t);
        mean /= double(u);
        double var = 0.0;
        for (std::size_t t = 0; t < u; ++t) var += (x.at(r, t) - mean) * (x.at(r, t) - mean);
        var /= double(u);
        stats[r] = {mean, std::sqrt(var + kRevinEps)};
        for (std::size_t t = 0; t < u; ++t) out.at(r, t) = static_cast<T>((x.at(r, t) - mean) / stats[r].std);
    }
    return {std::move(out), std::move(stats)};
}

inline double revin_denormalize(double v, const RevinStats& s) { return v * s.std + s.mean; }

template <typename T>
BasicTensor<T> revin_denormalize(const BasicTensor<T>& x, std::span<const RevinStats> stats) {
    if (x.rank() != 2 || x.dim(0) != stats.size()) throw ShapeError("revin_denormalize: row count does not match stats");
    BasicTensor<T> out(x.shape());
    for (std::size_t r = 0; r < x.dim(0); ++r)
        for (std::size_t t = 0; t < x.dim(1); ++t) out.at(r, t) = static_cast<T>(revin_denormalize(x.at(r, t), stats[r]));
    return out;
}

/// Right-pads each row with `stride` copies of its last value and cuts windows of
/// `patch_len` at `stride`: floor((U - L) / S) + 2 patches, shaped P x C x L.
template <typename T>
BasicTensor<T> patchify(const BasicTensor<T>& x, std::size_t patch_len, std::size_t stride) {
    if (x.rank() != 2) throw ShapeError("patchify: expected C x U, got " + shape_str(x.shape()));
    const std::size_t c = x.dim(0), u = x.dim(1);
    if (patch_len > u) throw ConfigError("patchify: patch_len " + std::to_string(patch_len) + " exceeds series length " + std::to_string(u));
    if (stride < 1 || patch_len < 1) throw ConfigError("patchify: patch_len and stride must be >= 1");
    const std::size_t p = (u - patch_len) / stride + 2;
    BasicTensor<T> out({p, c, patch_len});
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t r = 0; r < c; ++r)
            for (std::size_t j = 0; j < patch_len; ++j) {
                const std::size_t t = i * stride + j;
                out[(i * c + r) * patch_len + j] = x.at(r, std::min(t, u - 1));
            }
    return out;
}

/// One shared linear map from patch_len to d_model: (P, C, L) -> (P, C, d_m).
template <typename T>
Var<T> embed_patches(const Var<T>& patches, const Var<T>& weight, const Var<T>& bias) {
    const Shape& s = patches.shape();
    if (s.size() != 3 || weight.value().rank() != 2 || weight.dim(0) != s[2])
        throw ShapeError("embed_patches: patches " + shape_str(s) + " vs weight " + shape_str(weight.shape()));
    const std::size_t dm = weight.dim(1);
    Var<T> flat = reshape(patches, {s[0] * s[1], s[2]});
    return reshape(linear(flat, weight, bias), {s[0], s[1], dm});
}

struct CrossVarWeights {
    std::string wq = "cross_var.wq", wk = "cross_var.wk", wv = "cross_var.wv", wo = "cross_var.wo";
};

/// Per patch, a learned query attends over that patch's C variable embeddings.
/// (P, C, d_m) + (P, 1, d_m) -> (P, d_m).
template <typename T>
Var<T> cross_variable_attention(const Var<T>& embedded, const Var<T>& query, const Var<T>& wq, const Var<T>& wk, const Var<T>& wv,
                                const Var<T>& wo) {
    const Shape& s = embedded.shape();
    if (s.size() != 3 || query.shape() != Shape{s[0], 1, s[2]})
        throw ShapeError("cross_variable_attention: embedded " + shape_str(s) + " vs query " + shape_str(query.shape()));
    const std::size_t p = s[0], c = s[1], dm = s[2];
    Var<T> flat = reshape(embedded, {p * c, dm});
    Var<T> q = matmul(reshape(query, {p, dm}), wq);
    Var<T> k = matmul(flat, wk);
    Var<T> v = matmul(flat, wv);
    std::vector<Var<T>> rows;
    rows.reserve(p);
    for (std::size_t i = 0; i < p; ++i)
        rows.push_back(attention(slice(q, 0, i, i + 1), slice(k, 0, i * c, (i + 1) * c), slice(v, 0, i * c, (i + 1) * c)));
    return matmul(concat(rows, 0), wo);
}

/// E' = mixer * E.
template <typename T>
Var<T> select_prototypes(const Var<T>& vocab, const Var<T>& mixer) {
    if (mixer.value().rank() != 2 || vocab.value().rank() != 2 || mixer.dim(1) != vocab.dim(0))
        throw ShapeError("select_prototypes: mixer " + shape_str(mixer.shape()) + " vs vocab " + shape_str(vocab.shape()));
    return matmul(mixer, vocab);
}

/// Multi-head cross-attention from fused patches (queries) onto prototype keys and
/// values. `proto_keys` / `proto_values` are E' W^K and E' W^V with heads laid out
/// as consecutive column blocks of width head_dim.
template <typename T>
Var<T> reprogram_heads(const Var<T>& fused, const Var<T>& wq, const Var<T>& proto_keys, const Var<T>& proto_values, std::size_t n_heads) {
    const std::size_t width = wq.dim(1);
    if (width % n_heads != 0 || proto_keys.dim(1) != width || proto_values.dim(1) != width)
        throw ShapeError("reprogram: head projections must all be K * d wide");
    const std::size_t d = width / n_heads;
    Var<T> q = matmul(fused, wq);
    std::vector<Var<T>> heads;
    heads.reserve(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h)
        heads.push_back(attention(slice(q, 1, h * d, (h + 1) * d), slice(proto_keys, 1, h * d, (h + 1) * d),
                                  slice(proto_values, 1, h * d, (h + 1) * d)));
    return n_heads == 1 ? heads.front() : concat(heads, 1);
}

template <typename T>
struct ForwardTrace {
    std::vector<RevinStats> revin_stats;
    BasicTensor<T> patches;        // P x C x L
    BasicTensor<T> embedded;       // P x C x d_m
    BasicTensor<T> fused;          // P x d_m
    BasicTensor<T> reprogrammed;   // P x D
    BasicTensor<T> backbone_out;   // (T_prompt + P) x D
    BasicTensor<T> forecast_norm;  // H
    std::size_t prompt_tokens = 0;
};

/// Rows of the raw C=2 window the model consumes.
inline std::vector<std::size_t> input_rows(InputVars v) {
    switch (v) {
        case InputVars::beam: return {0};
        case InputVars::aod: return {1};
        default: return {0, 1};
    }
}

template <typename T>
BasicTensor<T> select_input(std::span<const float> window, std::size_t u, InputVars vars) {
    if (window.size() != 2 * u) throw ShapeError("window must be 2 x " + std::to_string(u));
    const auto rows = input_rows(vars);
    BasicTensor<T> x({rows.size(), u});
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t t = 0; t < u; ++t) x.at(r, t) = static_cast<T>(window[rows[r] * u + t]);
    return x;
}

/// RevIN denormalisation with the beam-row stats, times Q, round half up, clamp.
template <typename T>
std::vector<std::size_t> postprocess(std::span<const T> forecast_norm, const RevinStats& stats, std::size_t q_count) {
    std::vector<std::size_t> out(forecast_norm.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = revin_denormalize(static_cast<double>(forecast_norm[i]), stats) * static_cast<double>(q_count);
        double idx = std::floor(v + 0.5);
        if (!std::isfinite(idx)) idx = 0.0;
        idx = std::clamp(idx, 0.0, static_cast<double>(q_count - 1));
        out[i] = static_cast<std::size_t>(idx);
    }
    return out;
}

/// RevIN stats of the beam-index row of a raw 2 x U window, whatever rows the model reads.
template <typename T>
RevinStats beam_stats(std::span<const float> window, std::size_t u) {
    return revin_normalize(select_input<T>(window, u, InputVars::beam)).second[0];
}

/// Future beam indices of a sample in the RevIN space of its beam-index row.
template <typename T>
BasicTensor<T> normalized_target(const WindowedSample& s, std::size_t u, std::size_t h) {
    if (s.y.size() != h) throw ShapeError("sample target length " + std::to_string(s.y.size()) + " != H=" + std::to_string(h));
    const RevinStats stats = beam_stats<T>(s.x, u);
    BasicTensor<T> y({h});
    for (std::size_t i = 0; i < h; ++i) y[i] = static_cast<T>((s.y[i] - stats.mean) / stats.std);
    return y;
}

/// (1/H) sum (pred - target)^2.
template <typename T>
Var<T> forecast_loss(const Var<T>& pred, const Var<T>& target) {
    if (pred.shape() != target.shape()) throw ShapeError("loss: prediction " + shape_str(pred.shape()) + " vs target " + shape_str(target.shape()));
    return mse(pred, target);
}

// ---------------------------------------------------------------------------

template <typename T>
class BasicForecaster {
   public:
    /// Parameters bound once per tape plus the prototype-side tensors every sample
    /// of that tape shares.
    struct Context {
        std::map<std::string, Var<T>> vars;
        Var<T> prototypes;    // V' x D
        Var<T> proto_keys;    // V' x K*d
        Var<T> proto_values;  // V' x K*d

        const Var<T>& operator()(const std::string& name) const {
            auto it = vars.find(name);
            if (it == vars.end()) throw IndexError("forecaster: no parameter `" + name + "`");
            return it->second;
        }
    };

    explicit BasicForecaster(ModelConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        init_params();
    }

    const ModelConfig& config() const { return cfg_; }
    BasicParamStore<T>& params() { return params_; }
    const BasicParamStore<T>& params() const { return params_; }

    /// With `differentiable` false every parameter enters as a constant (inference).
    Context make_context(Tape<T>& tape, bool differentiable = true) const {
        Context ctx;
        for (const auto& [name, e] : params_.entries())
            ctx.vars.emplace(name, differentiable ? params_.bind(tape, name) : tape.constant(e.value));
        ctx.prototypes = select_prototypes(ctx("frozen.vocab"), ctx("prototype.mixer"));
        ctx.proto_keys = matmul(ctx.prototypes, ctx("reprogram.wk"));
        ctx.proto_values = matmul(ctx.prototypes, ctx("reprogram.wv"));
        return ctx;
    }

    /// Prompt for one raw 2 x U window.
    Prompt prompt_for(std::span<const float> window, std::size_t q_count) const {
        const auto x = select_input<double>(window, cfg_.u_len, cfg_.input_vars);
        std::vector<double> row0(x.data().begin(), x.data().begin() + cfg_.u_len);
        return build_prompt(row0, prompt_spec(q_count));
    }

    PromptSpec prompt_spec(std::size_t q_count) const {
        return PromptSpec{q_count, cfg_.u_len, cfg_.h_len, cfg_.vocab_size, cfg_.input_vars != InputVars::aod};
    }

    /// Normalised H-step forecast for one raw 2 x U window.
    Var<T> forward(Tape<T>& tape, const Context& ctx, std::span<const float> window, std::size_t q_count, ForwardTrace<T>* trace = nullptr) const {
        std::vector<std::size_t> prompt_ids;
        if (cfg_.use_prompt) prompt_ids = prompt_for(window, q_count).token_ids;
        return forward_tokens(tape, ctx, select_input<T>(window, cfg_.u_len, cfg_.input_vars), prompt_ids, trace);
    }

    /// Forward pass on an already-selected C x U input with explicit prompt tokens.
    Var<T> forward_tokens(Tape<T>& tape, const Context& ctx, const BasicTensor<T>& x_raw, const std::vector<std::size_t>& prompt_ids,
                          ForwardTrace<T>* trace = nullptr) const {
        const std::size_t c = cfg_.c_vars(), p = cfg_.num_patches(), dim = cfg_.backbone_dim;
        if (x_raw.shape() != Shape{c, cfg_.u_len}) throw ShapeError("forward: input " + shape_str(x_raw.shape()) + " for C=" + std::to_string(c));
        auto [x_norm, stats] = revin_normalize(x_raw);
        const BasicTensor<T> patches = patchify(x_norm, cfg_.patch_len, cfg_.patch_stride);

        Var<T> embedded = embed_patches(tape.constant(patches), ctx("patch_embed.w"), ctx("patch_embed.b"));
        Var<T> fused = cross_variable_attention(embedded, ctx("cross_var.query"), ctx("cross_var.wq"), ctx("cross_var.wk"),
                                                ctx("cross_var.wv"), ctx("cross_var.wo"));
        Var<T> heads = reprogram_heads(fused, ctx("reprogram.wq"), ctx.proto_keys, ctx.proto_values, cfg_.n_heads);
        if (needs_merge()) heads = linear(heads, ctx("reprogram.merge.w"), ctx("reprogram.merge.b"));
        Var<T> reprogrammed = linear(heads, ctx("reprogram.out.w"), ctx("reprogram.out.b"));

        Var<T> seq = reprogrammed;
        if (!prompt_ids.empty()) seq = concat<T>({gather_rows(ctx("frozen.vocab"), prompt_ids), reprogrammed}, 0);
        const std::size_t len = seq.dim(0);
        if (len > cfg_.max_positions)
            throw ConfigError("forward: sequence of " + std::to_string(len) + " tokens exceeds max_positions " + std::to_string(cfg_.max_positions));
        seq = add(seq, slice(ctx("frozen.pos"), 0, 0, len));
        Var<T> hidden = backbone(ctx, seq);
        Var<T> tail = reshape(slice(hidden, 0, len - p, len), {1, p * dim});
        Var<T> forecast = reshape(linear(tail, ctx("out_proj.w"), ctx("out_proj.b")), {cfg_.h_len});

        for (T v : forecast.value().data())
            if (!std::isfinite(static_cast<double>(v))) throw NumericError("forward: non-finite forecast");
        if (trace) {
            trace->revin_stats = stats;
            trace->patches = patches;
            trace->embedded = embedded.value();
            trace->fused = fused.value();
            trace->reprogrammed = reprogrammed.value();
            trace->backbone_out = hidden.value();
            trace->forecast_norm = forecast.value();
            trace->prompt_tokens = prompt_ids.size();
        }
        return forecast;
    }

    /// Loss of one sample: MSE between the forecast and the future beam indices,
    /// both in the RevIN space of the beam-index row.
    Var<T> sample_loss(Tape<T>& tape, const Context& ctx, const WindowedSample& s) const {
        Var<T> pred = forward(tape, ctx, s.x, s.q_count);
        return forecast_loss(pred, tape.constant(normalized_target(s)));
    }

    BasicTensor<T> normalized_target(const WindowedSample& s) const { return beampred::normalized_target<T>(s, cfg_.u_len, cfg_.h_len); }

    /// Mean sample loss over a minibatch on one tape.
    Var<T> batch_loss(Tape<T>& tape, std::span<const WindowedSample* const> batch) const {
        if (batch.empty()) throw ShapeError("batch_loss: empty batch");
        const Context ctx = make_context(tape);
        Var<T> total = sample_loss(tape, ctx, *batch[0]);
        for (std::size_t i = 1; i < batch.size(); ++i) total = add(total, sample_loss(tape, ctx, *batch[i]));
        return scale(total, static_cast<T>(1.0 / double(batch.size())));
    }

    /// Checksums of the frozen assets: vocabulary (also the prompt embedder),
    /// backbone weights, and positional table.
    std::uint64_t frozen_checksum() const { return params_.frozen_checksum(); }

   private:
    bool needs_merge() const { return cfg_.n_heads * cfg_.head_dim() != cfg_.d_model; }

    Var<T> backbone(const Context& ctx, Var<T> x) const {
        const std::size_t dim = cfg_.backbone_dim, nh = cfg_.backbone_heads, hd = dim / nh;
        for (std::size_t l = 0; l < cfg_.backbone_layers; ++l) {
            const std::string pre = "frozen.block" + std::to_string(l) + ".";
            Var<T> h = layer_norm(x, ctx(pre + "ln1.g"), ctx(pre + "ln1.b"));
            Var<T> qkv = linear(h, ctx(pre + "attn.wqkv"), ctx(pre + "attn.bqkv"));
            std::vector<Var<T>> heads;
            heads.reserve(nh);
            for (std::size_t k = 0; k < nh; ++k)
                heads.push_back(attention(slice(qkv, 1, k * hd, (k + 1) * hd), slice(qkv, 1, dim + k * hd, dim + (k + 1) * hd),
                                          slice(qkv, 1, 2 * dim + k * hd, 2 * dim + (k + 1) * hd)));
            Var<T> attn = linear(nh == 1 ? heads.front() : concat(heads, 1), ctx(pre + "attn.wo"), ctx(pre + "attn.bo"));
            x = add(x, attn);
            h = layer_norm(x, ctx(pre + "ln2.g"), ctx(pre + "ln2.b"));
            h = gelu(linear(h, ctx(pre + "ffn.w1"), ctx(pre + "ffn.b1")));
            x = add(x, linear(h, ctx(pre + "ffn.w2"), ctx(pre + "ffn.b2")));
        }
        return layer_norm(x, ctx("frozen.ln_f.g"), ctx("frozen.ln_f.b"));
    }

    void init_params() {
        const auto seed = cfg_.seed;
        const std::size_t dim = cfg_.backbone_dim, dm = cfg_.d_model, kd = cfg_.n_heads * cfg_.head_dim();
        auto frozen = [&](const std::string& name, Shape shape, std::size_t fan_in = 0) {
            params_.add(name, seeded_init<T>(name, shape, InitScheme::uniform_scaled, seed, fan_in), false);
        };
        auto constant = [&](const std::string& name, Shape shape, T value) { params_.add(name, BasicTensor<T>(std::move(shape), value), false); };
        auto trainable = [&](const std::string& name, Shape shape, std::size_t fan_in = 0) {
            params_.add(name, seeded_init<T>(name, shape, InitScheme::uniform_scaled, seed, fan_in), true);
        };
        auto zeros = [&](const std::string& name, Shape shape) { params_.add(name, seeded_init<T>(name, shape, InitScheme::zeros, seed), true); };

        // stand-in for a pretrained vocabulary / embedder and GPT-style backbone
        frozen("frozen.vocab", {cfg_.vocab_size, dim}, 1);
        frozen("frozen.pos", {cfg_.max_positions, dim}, 16);
        for (std::size_t l = 0; l < cfg_.backbone_layers; ++l) {
            const std::string pre = "frozen.block" + std::to_string(l) + ".";
            constant(pre + "ln1.g", {dim}, T(1));
            constant(pre + "ln1.b", {dim}, T(0));
            frozen(pre + "attn.wqkv", {dim, 3 * dim});
            constant(pre + "attn.bqkv", {3 * dim}, T(0));
            frozen(pre + "attn.wo", {dim, dim});
            constant(pre + "attn.bo", {dim}, T(0));
            constant(pre + "ln2.g", {dim}, T(1));
            constant(pre + "ln2.b", {dim}, T(0));
            frozen(pre + "ffn.w1", {dim, 4 * dim});
            frozen(pre + "ffn.b1", {4 * dim}, 4 * dim);
            frozen(pre + "ffn.w2", {4 * dim, dim});
            constant(pre + "ffn.b2", {dim}, T(0));
        }
        constant("frozen.ln_f.g", {dim}, T(1));
        constant("frozen.ln_f.b", {dim}, T(0));

        const std::size_t p = cfg_.num_patches();
        trainable("patch_embed.w", {cfg_.patch_len, dm});
        zeros("patch_embed.b", {dm});
        trainable("cross_var.query", {p, 1, dm}, dm);
        trainable("cross_var.wq", {dm, dm});
        trainable("cross_var.wk", {dm, dm});
        trainable("cross_var.wv", {dm, dm});
        trainable("cross_var.wo", {dm, dm});
        trainable("prototype.mixer", {cfg_.n_prototypes, cfg_.vocab_size}, cfg_.vocab_size);
        trainable("reprogram.wq", {dm, kd});
        trainable("reprogram.wk", {dim, kd});
        trainable("reprogram.wv", {dim, kd});
        if (needs_merge()) {
            trainable("reprogram.merge.w", {kd, dm});
            zeros("reprogram.merge.b", {dm});
        }
        trainable("reprogram.out.w", {dm, dim});
        zeros("reprogram.out.b", {dim});
        trainable("out_proj.w", {p * dim, cfg_.h_len});
        zeros("out_proj.b", {cfg_.h_len});
    }

    ModelConfig cfg_;
    BasicParamStore<T> params_;
};

using Forecaster = BasicForecaster<float>;

}  // namespace beampred
