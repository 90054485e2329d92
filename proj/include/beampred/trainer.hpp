#pragma once

// Adam, minibatch training with a held-out validation split, early stopping and
// best-checkpoint selection. Works with any model exposing params(),
// make_context(), sample_loss(), batch_loss() and frozen_checksum().

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "beampred/autodiff.hpp"
#include "beampred/config.hpp"
#include "beampred/params.hpp"
#include "beampred/scenario.hpp"

namespace beampred {

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_opt = 1e-8;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    std::uint64_t split_seed = 17;
    std::size_t early_stop_patience = 5;
    double val_fraction = 0.1;
    double clip_norm = 0.0;     // 0 disables clipping
    std::size_t max_steps = 0;  // 0 means no cap

    void validate() const {
        if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
        if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("train.val_fraction must lie in (0, 1)");
        if (!(learning_rate > 0.0)) throw ConfigError("train.lr must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta1/beta2 must lie in [0, 1)");
        if (!(eps_opt > 0.0)) throw ConfigError("train.eps must be positive");
        if (clip_norm < 0.0) throw ConfigError("train.clip_norm must be >= 0");
    }

    static TrainConfig from_config(const KeyValueConfig& kv) {
        TrainConfig c;
        c.learning_rate = kv.get<double>("train.lr", c.learning_rate);
        c.beta1 = kv.get<double>("train.beta1", c.beta1);
        c.beta2 = kv.get<double>("train.beta2", c.beta2);
        c.eps_opt = kv.get<double>("train.eps", c.eps_opt);
        c.epochs = kv.get<std::size_t>("train.epochs", c.epochs);
        c.batch_size = kv.get<std::size_t>("train.batch_size", c.batch_size);
        c.seed = kv.get<std::uint64_t>("train.seed", c.seed);
        c.split_seed = kv.get<std::uint64_t>("train.split_seed", c.split_seed);
        c.early_stop_patience = kv.get<std::size_t>("train.patience", c.early_stop_patience);
        c.val_fraction = kv.get<double>("train.val_fraction", c.val_fraction);
        c.clip_norm = kv.get<double>("train.clip_norm", c.clip_norm);
        c.max_steps = kv.get<std::size_t>("train.max_steps", c.max_steps);
        c.validate();
        return c;
    }

    static std::vector<std::string> keys() {
        return {"train.lr",       "train.beta1",    "train.beta2",       "train.eps",       "train.epochs",   "train.batch_size",
                "train.seed",     "train.split_seed", "train.patience",  "train.val_fraction", "train.clip_norm", "train.max_steps"};
    }
};

// ---------------------------------------------------------------------------
// Adam

template <typename T>
struct AdamState {
    std::size_t step = 0;
    std::map<std::string, std::vector<double>> m, v;
};

/// One bias-corrected Adam update of every tensor named in `grads`. Each must be a
/// trainable entry of `params` with a matching shape.
template <typename T>
void adam_step(BasicParamStore<T>& params, const std::map<std::string, BasicTensor<T>>& grads, AdamState<T>& state, const TrainConfig& cfg) {
    for (const auto& [name, g] : grads) {
        if (!params.trainable(name)) throw ConfigError("adam_step: `" + name + "` is frozen");
        if (params.value(name).shape() != g.shape())
            throw ShapeError("adam_step: gradient " + shape_str(g.shape()) + " for `" + name + "` " + shape_str(params.value(name).shape()));
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, double(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(state.step));
    for (const auto& [name, g] : grads) {
        auto& p = params.trainable_value(name);
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.empty()) {
            m.assign(g.size(), 0.0);
            v.assign(g.size(), 0.0);
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double gi = g[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double update = cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps_opt);
            p[i] = static_cast<T>(p[i] - update);
        }
    }
}

// ---------------------------------------------------------------------------

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    double initial_val_loss = 0.0;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;  // 0: the initial parameters were never beaten
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    std::string checkpoint_path;
};

inline void write_train_log_csv(std::ostream& os, const TrainLog& log) {
    os << "epoch,train_loss,val_loss,seconds\n";
    char buf[160];
    for (const auto& e : log.epochs) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.3f\n", e.epoch, e.train_loss, e.val_loss, e.seconds);
        os << buf;
    }
}

inline void write_train_log_csv(const std::string& path, const TrainLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_train_log_csv(out, log);
}

struct DatasetSplit {
    std::vector<const WindowedSample*> train, val;
};

/// Shuffles with `split_seed` and holds out the trailing fraction for validation.
inline DatasetSplit split_dataset(const Dataset& ds, double val_fraction, std::uint64_t split_seed) {
    const std::size_t n = ds.samples.size();
    if (n == 0) throw ConfigError("train: dataset is empty");
    std::size_t n_val = static_cast<std::size_t>(std::llround(double(n) * val_fraction));
    n_val = std::max<std::size_t>(n_val, 1);
    if (n_val >= n) throw ConfigError("train: validation split leaves no training samples (" + std::to_string(n) + " samples)");
    const auto perm = seeded_permutation(n, split_seed);
    DatasetSplit s;
    for (std::size_t i = 0; i < n; ++i) (i < n - n_val ? s.train : s.val).push_back(&ds.samples[perm[i]]);
    return s;
}

/// Mean per-sample loss with parameters entering as constants.
template <typename Model>
double evaluation_loss(const Model& model, std::span<const WindowedSample* const> samples, std::size_t chunk = 64) {
    using T = typename std::remove_cvref_t<decltype(model.params())>::value_type;
    if (samples.empty()) throw ConfigError("evaluation_loss: no samples");
    double total = 0.0;
    for (std::size_t b = 0; b < samples.size(); b += chunk) {
        Tape<T> tape;
        const auto ctx = model.make_context(tape, false);
        for (std::size_t i = b; i < std::min(samples.size(), b + chunk); ++i) total += model.sample_loss(tape, ctx, *samples[i]).value()[0];
    }
    return total / double(samples.size());
}

template <typename T>
struct TrainResult {
    BasicParamStore<T> best;
    TrainLog log;
};

/// Trains `model` in place and returns the best-validation parameters (which are
/// also left in the model).
template <typename Model>
auto train(Model& model, const Dataset& ds, const TrainConfig& cfg) {
    using T = typename std::remove_cvref_t<decltype(model.params())>::value_type;
    cfg.validate();
    const DatasetSplit split = split_dataset(ds, cfg.val_fraction, cfg.split_seed);
    const std::uint64_t frozen_before = model.frozen_checksum();

    TrainResult<T> result;
    result.log.seed = cfg.seed;
    result.best = model.params();
    result.log.initial_val_loss = evaluation_loss(model, split.val);
    result.log.best_val_loss = result.log.initial_val_loss;

    AdamState<T> adam;
    std::size_t stale = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto order = seeded_permutation(split.train.size(), detail::splitmix64(cfg.seed) ^ (0x9e3779b97f4a7c15ULL * epoch));
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        bool capped = false;
        for (std::size_t b = 0, batch_no = 0; b < order.size(); b += cfg.batch_size, ++batch_no) {
            std::vector<const WindowedSample*> batch;
            for (std::size_t i = b; i < std::min(order.size(), b + cfg.batch_size); ++i) batch.push_back(split.train[order[i]]);
            Tape<T> tape;
            Var<T> loss;
            try {
                loss = model.batch_loss(tape, batch);
            } catch (const NumericError& e) {
                throw NumericError("non-finite activation in epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_no) + ": " + e.what());
            }
            const double lv = loss.value()[0];
            if (!std::isfinite(lv)) throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_no));
            tape.backward(loss);
            auto grads = tape.named_grads();
            if (cfg.clip_norm > 0.0) {
                double sq = 0.0;
                for (const auto& [n, g] : grads)
                    for (T v : g.data()) sq += double(v) * v;
                const double norm = std::sqrt(sq);
                if (norm > cfg.clip_norm)
                    for (auto& [n, g] : grads)
                        for (T& v : g.data()) v = static_cast<T>(v * (cfg.clip_norm / norm));
            }
            adam_step(model.params(), grads, adam, cfg);
            loss_sum += lv * double(batch.size());
            loss_count += batch.size();
            ++result.log.steps;
            if (cfg.max_steps && result.log.steps >= cfg.max_steps) {
                capped = true;
                break;
            }
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / double(loss_count);
        rec.val_loss = evaluation_loss(model, split.val);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.epochs.push_back(rec);
        if (rec.val_loss < result.log.best_val_loss) {
            result.log.best_val_loss = rec.val_loss;
            result.log.best_epoch = epoch;
            result.best = model.params();
            stale = 0;
        } else if (++stale >= cfg.early_stop_patience) {
            break;
        }
        if (capped) break;
    }
    model.params() = result.best;
    if (model.frozen_checksum() != frozen_before) throw NumericError("train: frozen parameters changed during training");
    return result;
}

}  // namespace beampred
