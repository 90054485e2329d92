#pragma once

// Experiment plumbing shared by the CLI and the acceptance run: config-driven
// datasets and evaluation sets, checkpoint loading, and the scenario suites.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "beampred/baselines.hpp"
#include "beampred/config.hpp"
#include "beampred/eval.hpp"
#include "beampred/forecaster.hpp"
#include "beampred/scenario.hpp"
#include "beampred/trainer.hpp"

namespace beampred {

inline std::set<std::string> known_config_keys() {
    std::set<std::string> keys{"data.trajectories", "data.slots",       "data.speeds",       "data.antennas",    "data.beams",
                               "data.carrier_ghz",  "data.geometry",    "data.nlos_paths",   "data.nlos_loss_db", "data.aod_jitter_rad",
                               "data.seed",         "data.stride",      "data.shuffle_seed", "eval.trajectories", "eval.slots",
                               "eval.seed",         "eval.stride",      "eval.speeds",       "eval.geometry",    "eval.carrier_ghz",
                               "eval.antennas",     "eval.refresh_every", "eval.neighborhood", "suite.checkpoint", "suite.lstm_checkpoint"};
    for (const auto& k : ModelConfig::keys()) keys.insert(k);
    for (const auto& k : LstmConfig::keys()) keys.insert(k);
    for (const auto& k : TrainConfig::keys()) keys.insert(k);
    return keys;
}

inline void check_config_keys(const KeyValueConfig& kv) { kv.require_known(known_config_keys()); }

/// Training scenario set from `data.*` keys.
inline ScenarioSetConfig training_scenarios(const KeyValueConfig& kv) { return scenario_set_from_config(kv, "data."); }

/// Held-out evaluation set: the training deployment with `eval.*` overrides and a
/// separate seed.
inline ScenarioSetConfig evaluation_scenarios(const KeyValueConfig& kv) {
    ScenarioSetConfig sc = training_scenarios(kv);
    sc.num_trajectories = kv.get<std::size_t>("eval.trajectories", 40);
    sc.num_slots = kv.get<std::size_t>("eval.slots", 100);
    sc.seed = kv.get<std::uint64_t>("eval.seed", 1001);
    sc.speeds_mps = kv.get_list<double>("eval.speeds", sc.speeds_mps);
    sc.geometry = kv.get<std::string>("eval.geometry", sc.geometry);
    sc.carrier_freq_ghz = kv.get<double>("eval.carrier_ghz", sc.carrier_freq_ghz);
    sc.num_antennas = sc.num_beams = kv.get<std::size_t>("eval.antennas", sc.num_antennas);
    return sc;
}

inline std::vector<Trajectory> simulate_set(const ScenarioSetConfig& sc, std::size_t workers = 1) {
    const auto cfgs = make_scenario_set(sc);
    std::vector<Trajectory> out(cfgs.size());
    parallel_for(cfgs.size(), workers, [&](std::size_t i) { out[i] = simulate(cfgs[i]); });
    return out;
}

inline Dataset training_dataset(const KeyValueConfig& kv, std::size_t workers = 1) {
    const auto model = ModelConfig::from_config(kv);
    const auto stride = kv.get<std::size_t>("data.stride", 5);
    const auto shuffle = kv.get<std::uint64_t>("data.shuffle_seed", 3);
    return build_dataset(make_scenario_set(training_scenarios(kv)), model.u_len, model.h_len, stride, shuffle, workers);
}

inline void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw IoError("missing " + what + ": no path configured");
    if (!std::filesystem::is_regular_file(path)) throw IoError("missing " + what + ": " + path);
}

inline Forecaster load_forecaster(const ModelConfig& cfg, const std::string& path) {
    require_file(path, "checkpoint");
    Forecaster f(cfg);
    f.params().assign_from(load_checkpoint(path));
    return f;
}

inline Lstm load_lstm(const LstmConfig& cfg, const std::string& path) {
    require_file(path, "checkpoint");
    Lstm m(cfg);
    m.params().assign_from(load_checkpoint(path));
    return m;
}

// ---------------------------------------------------------------------------
// Suites

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"velocity", "scenario-mismatch", "frequency-mismatch", "antenna", "variable-ablation", "component-ablation"};
    return names;
}

struct SuiteScenario {
    std::string name;
    ScenarioSetConfig set;
};

/// Test grid of one suite, in reporting order.
inline std::vector<SuiteScenario> suite_grid(const std::string& suite, const KeyValueConfig& kv) {
    const ScenarioSetConfig base = evaluation_scenarios(kv);
    std::vector<SuiteScenario> grid;
    auto number = [](double v) { return detail::short_number(v); };
    if (suite == "velocity") {
        for (double v : kv.get_list<double>("eval.speeds", {5.0, 10.0, 15.0, 20.0})) {
            SuiteScenario s{"v" + number(v), base};
            s.set.speeds_mps = {v};
            grid.push_back(s);
        }
    } else if (suite == "scenario-mismatch") {
        for (const char* g : {"bs1", "bs2"}) {
            SuiteScenario s{g, base};
            s.set.geometry = g;
            grid.push_back(s);
        }
    } else if (suite == "frequency-mismatch") {
        for (double fc : {28.0, 60.0}) {
            SuiteScenario s{"fc" + number(fc), base};
            s.set.carrier_freq_ghz = fc;
            grid.push_back(s);
        }
    } else if (suite == "antenna") {
        for (std::size_t m : {32u, 64u, 128u}) {
            SuiteScenario s{"m" + std::to_string(m), base};
            s.set.num_antennas = s.set.num_beams = m;
            grid.push_back(s);
        }
    } else if (suite == "variable-ablation" || suite == "component-ablation") {
        grid.push_back({"default", base});
    } else {
        throw ConfigError("unknown suite `" + suite + "`");
    }
    return grid;
}

struct ModelVariant {
    std::string name;
    ModelConfig cfg;
};

/// Models an ablation suite trains from scratch; empty for evaluation-only suites.
inline std::vector<ModelVariant> suite_variants(const std::string& suite, const ModelConfig& base) {
    std::vector<ModelVariant> out;
    if (suite == "variable-ablation") {
        for (InputVars v : {InputVars::both, InputVars::beam, InputVars::aod}) {
            ModelConfig c = base;
            c.input_vars = v;
            out.push_back({v == InputVars::both ? "forecaster" : std::string("forecaster_") + to_string(v), c});
        }
    } else if (suite == "component-ablation") {
        out.push_back({"forecaster", base});
        ModelConfig no_prompt = base;
        no_prompt.use_prompt = false;
        out.push_back({"forecaster_wo_pap", no_prompt});
        ModelConfig no_patch = base;
        no_patch.patch_len = no_patch.patch_stride = no_patch.u_len;
        out.push_back({"forecaster_wo_patch", no_patch});
    }
    return out;
}

struct SuiteOptions {
    std::string out_dir = ".";
    std::size_t workers = 1;
    bool emit_plotdata = false;
    std::ostream* log = nullptr;
};

struct SuiteResult {
    std::vector<EvalReport> reports;
    std::string csv_path;
    std::vector<std::string> checkpoints;  // written by ablation suites
};

inline void write_plotdata(const std::string& path, std::span<const EvalReport> reports) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# step";
    for (const auto& r : reports) out << ' ' << r.predictor << '@' << r.scenario;
    out << '\n';
    const std::size_t h = reports.empty() ? 0 : reports.front().per_step.size();
    char buf[32];
    for (std::size_t k = 0; k < h; ++k) {
        out << k + 1;
        for (const auto& r : reports) {
            std::snprintf(buf, sizeof(buf), " %.9f", r.per_step.at(k));
            out << buf;
        }
        out << '\n';
    }
}

inline SuiteResult run_suite(const std::string& suite, const KeyValueConfig& kv, const SuiteOptions& opt = {}) {
    check_config_keys(kv);
    const auto grid = suite_grid(suite, kv);
    const ModelConfig model_cfg = ModelConfig::from_config(kv);
    const std::uint64_t hash = kv.hash();
    std::filesystem::create_directories(opt.out_dir);
    const std::filesystem::path out(opt.out_dir);
    SuiteResult result;

    std::vector<std::unique_ptr<Forecaster>> models;
    std::vector<std::unique_ptr<Lstm>> lstms;
    std::vector<std::unique_ptr<Predictor>> predictors;
    const auto variants = suite_variants(suite, model_cfg);
    if (variants.empty()) {
        models.push_back(std::make_unique<Forecaster>(load_forecaster(model_cfg, kv.get<std::string>("suite.checkpoint", ""))));
        predictors.push_back(std::make_unique<ForecasterPredictor>(*models.back(), "forecaster"));
        const auto lstm_path = kv.get<std::string>("suite.lstm_checkpoint", "");
        if (!lstm_path.empty()) {
            lstms.push_back(std::make_unique<Lstm>(load_lstm(LstmConfig::from_config(kv), lstm_path)));
            predictors.push_back(std::make_unique<LstmPredictor>(*lstms.back(), "lstm"));
        }
    } else {
        const Dataset ds = training_dataset(kv, opt.workers);
        const TrainConfig tc = TrainConfig::from_config(kv);
        for (const auto& v : variants) {
            if (opt.log) *opt.log << "training " << v.name << " on " << ds.samples.size() << " samples\n";
            auto m = std::make_unique<Forecaster>(v.cfg);
            train(*m, ds, tc);
            const std::string ckpt = (out / (suite + "_" + v.name + ".bpck")).string();
            save_checkpoint(ckpt, m->params());
            result.checkpoints.push_back(ckpt);
            models.push_back(std::move(m));
            predictors.push_back(std::make_unique<ForecasterPredictor>(*models.back(), v.name));
        }
    }
    predictors.push_back(std::make_unique<PersistencePredictor>(model_cfg.u_len, model_cfg.h_len));
    predictors.push_back(std::make_unique<LinearPredictor>(model_cfg.u_len, model_cfg.h_len));

    EvalOptions eo;
    eo.stride = kv.get<std::size_t>("eval.stride", 1);
    eo.workers = opt.workers;
    eo.config_hash = hash;
    for (const auto& sc : grid) {
        const auto trajs = simulate_set(sc.set, opt.workers);
        const Codebook cb{sc.set.num_antennas, sc.set.num_beams, 0.5};
        eo.scenario = sc.name;
        for (const auto& p : predictors) {
            if (opt.log) *opt.log << "evaluating " << p->name() << " on " << sc.name << "\n";
            result.reports.push_back(evaluate(*p, trajs, cb, eo));
        }
    }

    result.csv_path = (out / (suite + ".csv")).string();
    {
        std::ofstream csv(result.csv_path);
        if (!csv) throw IoError("cannot write " + result.csv_path);
        write_report_csv(csv, result.reports);
    }
    {
        const std::string path = (out / (suite + ".summary")).string();
        std::ofstream s(path);
        if (!s) throw IoError("cannot write " + path);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
        s << "suite " << suite << "\nconfig_hash " << buf << "\n";
        for (const auto& r : result.reports) {
            std::snprintf(buf, sizeof(buf), "%.9f", r.overall);
            s << r.predictor << ' ' << r.scenario << ' ' << buf << ' ' << r.count << '\n';
        }
    }
    if (opt.emit_plotdata) write_plotdata((out / (suite + ".dat")).string(), result.reports);
    return result;
}

}  // namespace beampred
