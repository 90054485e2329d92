#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "beampred/forecaster.hpp"
#include "beampred/gradcheck.hpp"

using namespace beampred;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.u_len = 20;
    c.h_len = 4;
    c.patch_len = 8;
    c.patch_stride = 4;
    c.d_model = 8;
    c.n_heads = 3;  // floor(8/3)=2, exercises the merge layer
    c.backbone_dim = 16;
    c.backbone_layers = 1;
    c.backbone_heads = 2;
    c.vocab_size = 64;
    c.n_prototypes = 6;
    c.max_positions = 96;
    return c;
}

// Rising beam row (index / Q) and a smooth AoD row.
std::vector<float> ramp_window(std::size_t u, std::size_t q, double slope = 0.4, double offset = 10.0) {
    std::vector<float> w(2 * u);
    for (std::size_t t = 0; t < u; ++t) {
        w[t] = static_cast<float>(std::floor(offset + slope * double(t)) / double(q));
        w[u + t] = static_cast<float>(0.3 + 0.01 * double(t));
    }
    return w;
}

WindowedSample ramp_sample(std::size_t u, std::size_t h, std::size_t q, double slope, double offset) {
    auto full = ramp_window(u + h, q, slope, offset);
    WindowedSample s;
    s.u = u;
    s.q_count = static_cast<std::uint32_t>(q);
    s.x.assign(2 * u, 0.0f);
    for (std::size_t t = 0; t < u; ++t) {
        s.x[t] = full[t];
        s.x[u + t] = full[u + h + t];
    }
    for (std::size_t k = 0; k < h; ++k) s.y.push_back(full[u + k]);
    return s;
}

}  // namespace

TEST(Revin, ClosedFormRow) {
    const auto [y, stats] = revin_normalize(BasicTensor<double>({1, 3}, {1.0, 2.0, 3.0}));
    const double sd = std::sqrt(2.0 / 3.0 + kRevinEps);
    EXPECT_NEAR(stats[0].mean, 2.0, 1e-12);
    EXPECT_NEAR(stats[0].std, sd, 1e-12);
    EXPECT_NEAR(y[0], -1.0 / sd, 1e-12);
    EXPECT_NEAR(y[1], 0.0, 1e-12);
    EXPECT_NEAR(y[2], 1.0 / sd, 1e-12);
    EXPECT_NEAR(y[2], 1.2247, 1e-4);
}

TEST(Revin, ConstantRowIsZero) {
    const auto [y, stats] = revin_normalize(Tensor({1, 3}, {5.0f, 5.0f, 5.0f}));
    for (float v : y.data()) EXPECT_EQ(v, 0.0f);
    EXPECT_TRUE(std::isfinite(stats[0].std));
}

TEST(Revin, RoundTrip) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x({2, 40});
        for (auto& v : x.data()) v = static_cast<float>(u(rng));
        if (trial % 10 == 0) for (std::size_t t = 0; t < 40; ++t) x.at(1, t) = 0.75f;
        const auto [y, stats] = revin_normalize(x);
        const auto back = revin_denormalize(y, std::span<const RevinStats>(stats));
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-5);
    }
}

TEST(Patchify, DefaultPatchCount) {
    EXPECT_EQ(patchify(Tensor({2, 40}), 16, 8).dim(0), 5u);
    EXPECT_EQ(patchify(Tensor({2, 16}), 16, 8).dim(0), 2u);
}

TEST(Patchify, ConstantInputGivesIdenticalPatches) {
    const auto p = patchify(Tensor({2, 40}, 0.3f), 16, 8);
    for (float v : p.data()) EXPECT_EQ(v, 0.3f);
}

TEST(Patchify, PatchLongerThanSeries) { EXPECT_THROW(patchify(Tensor({2, 10}), 16, 8), ConfigError); }

TEST(Patchify, MatchesWindowEnumerationOnPaddedSeries) {
    Tensor x({2, 23});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = float(i);
    for (std::size_t l = 1; l <= 23; l += 3)
        for (std::size_t s = 1; s <= 9; s += 2) {
            const auto p = patchify(x, l, s);
            std::vector<std::vector<float>> padded(2);
            for (std::size_t r = 0; r < 2; ++r) {
                for (std::size_t t = 0; t < 23; ++t) padded[r].push_back(x.at(r, t));
                for (std::size_t k = 0; k < s; ++k) padded[r].push_back(x.at(r, 22));
            }
            std::size_t count = 0;
            for (std::size_t start = 0; start + l <= padded[0].size(); start += s) {
                for (std::size_t r = 0; r < 2; ++r)
                    for (std::size_t j = 0; j < l; ++j) EXPECT_EQ(p[(count * 2 + r) * l + j], padded[r][start + j]);
                ++count;
            }
            EXPECT_EQ(p.dim(0), count) << "L=" << l << " S=" << s;
            EXPECT_EQ(count, (23 - l) / s + 2);
        }
}

TEST(EmbedPatches, ZeroWeightsGiveZero) {
    Tape<float> t;
    auto out = embed_patches(t.constant(Tensor({5, 2, 16}, 1.0f)), t.constant(Tensor({16, 32})), t.constant(Tensor({32})));
    EXPECT_EQ(out.shape(), (Shape{5, 2, 32}));
    for (float v : out.value().data()) EXPECT_EQ(v, 0.0f);
}

TEST(EmbedPatches, IdentityWeights) {
    Tape<float> t;
    Tensor eye({4, 4});
    for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0f;
    const auto in = seeded_init<float>("p", {3, 2, 4}, InitScheme::uniform_scaled, 1);
    auto out = embed_patches(t.constant(in), t.constant(eye), t.constant(Tensor({4})));
    EXPECT_EQ(out.value(), in);
}

namespace {
struct CrossVarFixture {
    Tape<double> t;
    Var<double> wq, wk, wv, wo;
    explicit CrossVarFixture(std::size_t dm) {
        wq = t.constant(seeded_init<double>("wq", {dm, dm}, InitScheme::uniform_scaled, 3));
        wk = t.constant(seeded_init<double>("wk", {dm, dm}, InitScheme::uniform_scaled, 3));
        wv = t.constant(seeded_init<double>("wv", {dm, dm}, InitScheme::uniform_scaled, 3));
        wo = t.constant(seeded_init<double>("wo", {dm, dm}, InitScheme::uniform_scaled, 3));
    }
};
}  // namespace

TEST(CrossVariableAttention, SingleVariableIgnoresQuery) {
    CrossVarFixture f(8);
    const auto emb = f.t.constant(seeded_init<double>("e", {5, 1, 8}, InitScheme::uniform_scaled, 1));
    const auto a = cross_variable_attention(emb, f.t.constant(seeded_init<double>("r1", {5, 1, 8}, InitScheme::uniform_scaled, 1)), f.wq, f.wk, f.wv, f.wo);
    const auto b = cross_variable_attention(emb, f.t.constant(seeded_init<double>("r2", {5, 1, 8}, InitScheme::uniform_scaled, 9)), f.wq, f.wk, f.wv, f.wo);
    for (std::size_t i = 0; i < a.value().size(); ++i) EXPECT_NEAR(a.value()[i], b.value()[i], 1e-6);
}

TEST(CrossVariableAttention, IdenticalVariablesAverageEvenly) {
    // identical keys give weights [0.5, 0.5]; with distinct values the output is their mean
    CrossVarFixture f(4);
    BasicTensor<double> emb({1, 2, 4}, {1, 2, 3, 4, 1, 2, 3, 4});
    Tape<double>& t = f.t;
    auto eye = [&] {
        BasicTensor<double> e({4, 4});
        for (std::size_t i = 0; i < 4; ++i) e.at(i, i) = 1.0;
        return t.constant(e);
    };
    BasicTensor<double> wv_first({4, 4});
    wv_first.at(0, 0) = 1.0;
    const auto q = t.constant(BasicTensor<double>({1, 1, 4}, {0.3, -0.2, 0.5, 1.0}));
    auto out = cross_variable_attention(t.constant(emb), q, eye(), eye(), eye(), eye());
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.value()[j], emb[j], 1e-12);
    // check the weights directly: scores of the two identical keys are equal
    auto scores = softmax(matmul(reshape(q, {1, 4}), transpose(reshape(t.constant(emb), {2, 4}))), 1);
    EXPECT_NEAR(scores.value()[0], 0.5, 1e-12);
    EXPECT_NEAR(scores.value()[1], 0.5, 1e-12);
}

TEST(CrossVariableAttention, Shape) {
    CrossVarFixture f(32);
    auto out = cross_variable_attention(f.t.constant(BasicTensor<double>({5, 2, 32})), f.t.constant(BasicTensor<double>({5, 1, 32})), f.wq, f.wk,
                                        f.wv, f.wo);
    EXPECT_EQ(out.shape(), (Shape{5, 32}));
}

TEST(SelectPrototypes, OneHotRowsSelect) {
    Tape<float> t;
    const auto vocab = seeded_init<float>("v", {10, 4}, InitScheme::uniform_scaled, 2);
    Tensor mixer({3, 10});
    const std::size_t picks[] = {7, 0, 7};
    for (std::size_t i = 0; i < 3; ++i) mixer.at(i, picks[i]) = 1.0f;
    auto e = select_prototypes(t.constant(vocab), t.constant(mixer));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(e.value().at(i, j), vocab.at(picks[i], j));
}

TEST(SelectPrototypes, ZeroMixerAndShape) {
    Tape<float> t;
    auto e = select_prototypes(t.constant(seeded_init<float>("v", {4096, 64}, InitScheme::uniform_scaled, 2)), t.constant(Tensor({100, 4096})));
    EXPECT_EQ(e.shape(), (Shape{100, 64}));
    for (float v : e.value().data()) EXPECT_EQ(v, 0.0f);
}

TEST(Reprogram, SinglePrototypeReturnsItsValueProjection) {
    Tape<double> t;
    const std::size_t dm = 8, dim = 16, k = 4, d = 2;
    const auto proto = t.constant(seeded_init<double>("proto", {1, dim}, InitScheme::uniform_scaled, 4));
    const auto wk = t.constant(seeded_init<double>("wk", {dim, k * d}, InitScheme::uniform_scaled, 4));
    const auto wv = t.constant(seeded_init<double>("wv", {dim, k * d}, InitScheme::uniform_scaled, 4));
    const auto fused = t.constant(seeded_init<double>("fused", {5, dm}, InitScheme::uniform_scaled, 4));
    const auto wq = t.constant(seeded_init<double>("wq", {dm, k * d}, InitScheme::uniform_scaled, 4));
    const auto values = matmul(proto, wv);
    auto out = reprogram_heads(fused, wq, matmul(proto, wk), values, k);
    EXPECT_EQ(out.shape(), (Shape{5, k * d}));
    for (std::size_t p = 0; p < 5; ++p)
        for (std::size_t j = 0; j < k * d; ++j) EXPECT_NEAR(out.value().at(p, j), values.value()[j], 1e-12);
}

TEST(Reprogram, HeadWidthIsFloor) {
    ModelConfig c;
    c.n_heads = 1;
    EXPECT_EQ(c.head_dim(), c.d_model);
    c.n_heads = 5;
    EXPECT_EQ(c.head_dim(), 6u);
    c.d_model = 3;
    c.n_heads = 4;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Forecaster, DefaultTraceShapes) {
    Forecaster f{ModelConfig{}};
    Tape<float> tape;
    const auto ctx = f.make_context(tape, false);
    ForwardTrace<float> tr;
    const auto w = ramp_window(40, 64);
    auto y = f.forward(tape, ctx, w, 64, &tr);
    EXPECT_EQ(y.shape(), (Shape{10}));
    for (float v : y.value().data()) EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(tr.revin_stats.size(), 2u);
    EXPECT_EQ(tr.patches.shape(), (Shape{5, 2, 16}));
    EXPECT_EQ(tr.embedded.shape(), (Shape{5, 2, 32}));
    EXPECT_EQ(tr.fused.shape(), (Shape{5, 32}));
    EXPECT_EQ(tr.reprogrammed.shape(), (Shape{5, 64}));
    EXPECT_EQ(tr.backbone_out.shape(), (Shape{tr.prompt_tokens + 5, 64}));
    EXPECT_EQ(tr.forecast_norm.shape(), (Shape{10}));
    EXPECT_GT(tr.prompt_tokens, 20u);
}

TEST(Forecaster, ShapeContractAcrossConfigs) {
    for (std::size_t variant = 0; variant < 6; ++variant) {
        ModelConfig c = small_config();
        c.input_vars = variant % 3 == 0 ? InputVars::both : variant % 3 == 1 ? InputVars::beam : InputVars::aod;
        c.n_heads = 1 + variant;
        c.d_model = 6 + variant;
        c.patch_len = 4 + 2 * variant;
        c.patch_stride = 1 + variant;
        c.use_prompt = variant % 2 == 0;
        Forecaster f(c);
        Tape<float> tape;
        const auto ctx = f.make_context(tape, false);
        ForwardTrace<float> tr;
        f.forward(tape, ctx, ramp_window(c.u_len, 32), 32, &tr);
        const std::size_t p = c.num_patches(), cv = c.c_vars();
        EXPECT_EQ(tr.revin_stats.size(), cv);
        EXPECT_EQ(tr.patches.shape(), (Shape{p, cv, c.patch_len}));
        EXPECT_EQ(tr.embedded.shape(), (Shape{p, cv, c.d_model}));
        EXPECT_EQ(tr.fused.shape(), (Shape{p, c.d_model}));
        EXPECT_EQ(tr.reprogrammed.shape(), (Shape{p, c.backbone_dim}));
        EXPECT_EQ(tr.backbone_out.shape(), (Shape{tr.prompt_tokens + p, c.backbone_dim}));
        EXPECT_EQ(tr.forecast_norm.shape(), (Shape{c.h_len}));
        EXPECT_EQ(tr.prompt_tokens == 0, !c.use_prompt);
    }
}

TEST(Forecaster, ZeroTrainablesGiveOutputBias) {
    Forecaster f(small_config());
    for (const auto& name : f.params().trainable_names()) f.params().trainable_value(name).fill(0.0f);
    auto& b = f.params().trainable_value("out_proj.b");
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.1f * float(i) - 0.2f;
    Tape<float> tape;
    const auto ctx = f.make_context(tape, false);
    auto y = f.forward(tape, ctx, ramp_window(20, 64), 64);
    EXPECT_EQ(y.value(), b);
}

TEST(Forecaster, ExactlyTheAdapterSetTrains) {
    Forecaster f{ModelConfig{}};
    const std::vector<std::string> want = {"cross_var.query", "cross_var.wk",   "cross_var.wo",   "cross_var.wq",   "cross_var.wv",
                                           "out_proj.b",      "out_proj.w",     "patch_embed.b",  "patch_embed.w",  "prototype.mixer",
                                           "reprogram.out.b", "reprogram.out.w", "reprogram.wk",  "reprogram.wq",   "reprogram.wv"};
    EXPECT_EQ(f.params().trainable_names(), want);
    for (const auto& [name, e] : f.params().entries())
        if (!e.trainable) EXPECT_EQ(name.rfind("frozen.", 0), 0u) << name;
    EXPECT_EQ(f.params().value("cross_var.query").shape(), (Shape{5, 1, 32}));
    EXPECT_EQ(f.params().value("prototype.mixer").shape(), (Shape{100, 4096}));
    EXPECT_EQ(f.params().value("reprogram.wq").shape(), (Shape{32, 32}));
    EXPECT_EQ(f.params().value("reprogram.wk").shape(), (Shape{64, 32}));
    EXPECT_EQ(f.params().value("out_proj.w").shape(), (Shape{5 * 64, 10}));
    EXPECT_EQ(f.params().value("frozen.vocab").shape(), (Shape{4096, 64}));
}

TEST(Forecaster, MergeLayerOnlyWhenHeadsDoNotDivide) {
    EXPECT_TRUE(Forecaster(small_config()).params().contains("reprogram.merge.w"));
    ModelConfig c = small_config();
    c.n_heads = 4;
    EXPECT_FALSE(Forecaster(c).params().contains("reprogram.merge.w"));
}

TEST(Forecaster, LeadingWhitespaceInPromptIsCanonical) {
    const std::string text = "beam prediction with 64 beams trend upward";
    const auto a = tokenize(text, 4096), b = tokenize("  " + text, 4096);
    ASSERT_EQ(a, b);
    Forecaster f{ModelConfig{}};
    Tape<float> tape;
    const auto ctx = f.make_context(tape, false);
    const auto x = select_input<float>(ramp_window(40, 64), 40, InputVars::both);
    const Tensor ya = f.forward_tokens(tape, ctx, x, a).value();
    const Tensor yb = f.forward_tokens(tape, ctx, x, b).value();
    EXPECT_EQ(ya, yb);
}

TEST(Forecaster, SequenceLongerThanPositionTableIsRejected) {
    ModelConfig c = small_config();
    c.max_positions = 10;
    Forecaster f(c);
    Tape<float> tape;
    const auto ctx = f.make_context(tape, false);
    EXPECT_THROW(f.forward(tape, ctx, ramp_window(20, 64), 64), ConfigError);
}

TEST(Forecaster, DeterministicInit) {
    Forecaster a{small_config()}, b{small_config()};
    for (const auto& [n, e] : a.params().entries()) EXPECT_EQ(e.value, b.params().value(n)) << n;
    ModelConfig c = small_config();
    c.seed = 99;
    EXPECT_NE(Forecaster(c).frozen_checksum(), a.frozen_checksum());
}

TEST(Postprocess, InvertsNormalization) {
    const RevinStats unit{0.0, 1.0};
    const float v[] = {0.5f, 1.7f, -0.1f, 0.49f / 64.0f * 64.0f / 64.0f};
    const auto out = postprocess<float>(std::span<const float>(v, 3), unit, 64);
    EXPECT_EQ(out, (std::vector<std::size_t>{32, 63, 0}));
    const RevinStats shifted{0.25, 0.5};
    const float w[] = {0.5f};
    EXPECT_EQ(postprocess<float>(w, shifted, 64), (std::vector<std::size_t>{32}));
    const float half[] = {16.5f / 64.0f};
    EXPECT_EQ(postprocess<float>(half, unit, 64), (std::vector<std::size_t>{17}));
}

TEST(Postprocess, TargetUsesBeamRowForEveryVariant) {
    const auto s = ramp_sample(40, 10, 64, 0.4, 10.0);
    const auto beam_only = revin_normalize(select_input<double>(s.x, 40, InputVars::beam)).second[0];
    for (auto vars : {InputVars::both, InputVars::beam, InputVars::aod}) {
        ModelConfig c;
        c.input_vars = vars;
        const auto y = Forecaster(c).normalized_target(s);
        for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(y[i], (s.y[i] - beam_only.mean) / beam_only.std, 1e-4) << to_string(vars);
        std::vector<std::size_t> truth;
        for (float v : s.y) truth.push_back(static_cast<std::size_t>(std::lround(v * 64.0f)));
        EXPECT_EQ(postprocess<float>(y.data(), beam_stats<float>(s.x, 40), 64), truth) << to_string(vars);
    }
}

TEST(Loss, Examples) {
    Tape<float> t;
    EXPECT_EQ(forecast_loss(t.constant(Tensor({3}, {1, 2, 3})), t.constant(Tensor({3}, {1, 2, 3}))).value()[0], 0.0f);
    EXPECT_FLOAT_EQ(forecast_loss(t.constant(Tensor({1}, {0.5f})), t.constant(Tensor({1}, {0.0f}))).value()[0], 0.25f);
    EXPECT_NEAR(forecast_loss(t.constant(Tensor({2}, {0.1f, 0.3f})), t.constant(Tensor({2}, {0.0f, 0.0f}))).value()[0], 0.05f, 1e-7);
    EXPECT_THROW(forecast_loss(t.constant(Tensor({2})), t.constant(Tensor({3}))), ShapeError);
}

TEST(Forecaster, EveryTrainableReceivesGradient) {
    ModelConfig c;
    c.seed = 3;
    Forecaster f(c);
    std::vector<WindowedSample> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(ramp_sample(40, 10, 64, 0.2 + 0.1 * i, 5.0 + 7.0 * i));
    std::vector<const WindowedSample*> ptrs;
    for (auto& s : batch) ptrs.push_back(&s);
    Tape<float> tape;
    auto loss = f.batch_loss(tape, ptrs);
    tape.backward(loss);
    const auto grads = tape.named_grads();
    for (const auto& name : f.params().trainable_names()) {
        ASSERT_TRUE(grads.contains(name)) << name;
        float mx = 0.0f;
        for (float v : grads.at(name).data()) mx = std::max(mx, std::abs(v));
        EXPECT_GT(mx, 0.0f) << name;
    }
    for (const auto& [name, e] : f.params().entries())
        if (!e.trainable) EXPECT_FALSE(grads.contains(name)) << name;
}

namespace {
// End-to-end loss with one trainable tensor substituted by the checked variable.
double end_to_end_error(const std::string& target, std::uint64_t seed) {
    ModelConfig c = small_config();
    c.seed = seed;
    BasicForecaster<double> f(c);
    const auto sample = ramp_sample(c.u_len, c.h_len, 64, 0.3 + 0.05 * double(seed), 6.0 + double(seed));
    auto fn = [&](Tape<double>& tape, const Var<double>& x) {
        auto ctx = f.make_context(tape);
        ctx.vars[target] = x;
        return f.sample_loss(tape, ctx, sample);
    };
    return grad_check<double>(fn, f.params().value(target), 1e-3);
}
}  // namespace

TEST(Forecaster, GradCheckOutputProjection) {
    for (std::uint64_t s : {1u, 2u, 3u}) EXPECT_LT(end_to_end_error("out_proj.w", s), 1e-3) << "seed " << s;
}

TEST(Forecaster, GradCheckCrossVariableQuery) {
    for (std::uint64_t s : {1u, 2u, 3u}) EXPECT_LT(end_to_end_error("cross_var.query", s), 1e-3) << "seed " << s;
}
