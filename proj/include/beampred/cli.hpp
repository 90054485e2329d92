#pragma once

// Command-line front end. run_cli() is the whole program minus process exit so
// that tests can drive it in-process.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "beampred/suite.hpp"

namespace beampred {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitRuntime = 3 };

namespace cli {

struct Globals {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir = ".";
    std::size_t workers = 1;
    bool emit_plotdata = false;
    int verbosity = 0;
};

inline KeyValueConfig load_config(const Globals& g) {
    KeyValueConfig kv = g.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(g.config_path);
    for (const auto& s : g.sets) kv.apply_override(s);
    check_config_keys(kv);
    return kv;
}

inline std::filesystem::path out_path(const Globals& g, const std::string& file) {
    std::filesystem::create_directories(g.out_dir);
    return std::filesystem::path(g.out_dir) / file;
}

inline std::size_t beams_of(const KeyValueConfig& kv) { return training_scenarios(kv).num_beams; }

inline std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Beam index forecasting with a reprogrammed frozen sequence model", "beampred"};
    app.require_subcommand(1);
    app.fallthrough();
    cli::Globals g;
    app.add_option("--config", g.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--set", g.sets, "override one key (k=v), repeatable")->take_all()->allow_extra_args(false);
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--workers", g.workers, "parallel workers for simulation and evaluation")->check(CLI::PositiveNumber);
    app.add_flag("--emit-plotdata", g.emit_plotdata, "also write whitespace-separated .dat columns");
    app.add_flag("-v,--verbose", g.verbosity, "progress messages on stderr");

    std::string split = "train";
    auto* simulate = app.add_subcommand("simulate", "generate trajectories; write trace CSV and snapshot files");
    simulate->add_option("--split", split, "scenario set: train (data.*) or eval (eval.*)")->check(CLI::IsMember({"train", "eval"}));

    std::vector<std::string> traces;
    auto* dataset = app.add_subcommand("dataset", "window traces into a BPDS dataset");
    dataset->add_option("--trace", traces, "trace CSV to window instead of simulating (repeatable)")->check(CLI::ExistingFile);

    std::string model_kind = "forecaster", dataset_path;
    auto* train_cmd = app.add_subcommand("train", "train the forecaster or the LSTM baseline");
    train_cmd->add_option("--model", model_kind, "forecaster | lstm")->check(CLI::IsMember({"forecaster", "lstm"}));
    train_cmd->add_option("--dataset", dataset_path, "BPDS file (default: build from data.* keys)")->check(CLI::ExistingFile);

    std::string checkpoint, lstm_checkpoint;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate predictors on the held-out scenario set");
    eval_cmd->add_option("--checkpoint", checkpoint, "forecaster checkpoint");
    eval_cmd->add_option("--lstm-checkpoint", lstm_checkpoint, "LSTM checkpoint");

    std::string suite_name;
    auto* suite_cmd = app.add_subcommand("suite", "run one experiment suite");
    suite_cmd->add_option("name", suite_name, "suite name")->required()->check(CLI::IsMember(suite_names()));
    suite_cmd->add_option("--checkpoint", checkpoint, "forecaster checkpoint (sets suite.checkpoint)");
    suite_cmd->add_option("--lstm-checkpoint", lstm_checkpoint, "LSTM checkpoint (sets suite.lstm_checkpoint)");

    std::string predictor_kind = "forecaster";
    auto* track_cmd = app.add_subcommand("track", "closed-loop tracking with neighborhood re-measurement");
    track_cmd->add_option("--predictor", predictor_kind, "forecaster | lstm | persistence | linear")
        ->check(CLI::IsMember({"forecaster", "lstm", "persistence", "linear"}));
    track_cmd->add_option("--checkpoint", checkpoint, "model checkpoint for forecaster or lstm");

    std::string trace_path;
    std::size_t start = 0;
    auto* inspect = app.add_subcommand("inspect-prompt", "print the prompt text and token ids for one window");
    inspect->add_option("--trace", trace_path, "trace CSV")->required()->check(CLI::ExistingFile);
    inspect->add_option("--start", start, "first slot of the window");

    auto* ingest = app.add_subcommand("ingest", "validate an external trace CSV and write it in canonical form");
    ingest->add_option("trace", trace_path, "trace CSV")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "beampred: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    auto note = [&](const std::string& msg) {
        if (g.verbosity > 0) err << msg << "\n";
    };

    try {
        KeyValueConfig kv = cli::load_config(g);
        if (*simulate) {
            const auto sc = split == "train" ? training_scenarios(kv) : evaluation_scenarios(kv);
            const auto trajs = simulate_set(sc, g.workers);
            for (std::size_t i = 0; i < trajs.size(); ++i) {
                char stem[32];
                std::snprintf(stem, sizeof(stem), "%s_%04zu", split.c_str(), i);
                write_trace_csv(cli::out_path(g, std::string(stem) + ".csv").string(), trajs[i].trace);
                std::ofstream bin(cli::out_path(g, std::string(stem) + ".bpsn"), std::ios::binary);
                if (!bin) throw IoError("cannot write snapshots for " + std::string(stem));
                write_snapshots(bin, trajs[i].snapshots);
            }
            out << "trajectories " << trajs.size() << "\n";
        } else if (*dataset) {
            Dataset ds;
            if (traces.empty()) {
                ds = training_dataset(kv, g.workers);
            } else {
                const auto model = ModelConfig::from_config(kv);
                const auto q = cli::beams_of(kv);
                std::vector<std::vector<TraceRecord>> parsed;
                for (const auto& t : traces) parsed.push_back(ingest_external_trace(t, q));
                ds = dataset_from_traces(parsed, static_cast<std::uint32_t>(q), model.u_len, model.h_len, kv.get<std::size_t>("data.stride", 5),
                                         kv.get<std::uint64_t>("data.shuffle_seed", 3));
            }
            const auto path = cli::out_path(g, "dataset.bpds").string();
            write_dataset(path, ds);
            out << "samples " << ds.samples.size() << "\n" << "wrote " << path << "\n";
        } else if (*train_cmd) {
            const TrainConfig tc = TrainConfig::from_config(kv);
            const Dataset ds = dataset_path.empty() ? training_dataset(kv, g.workers) : read_dataset(dataset_path);
            note("training " + model_kind + " on " + std::to_string(ds.samples.size()) + " samples");
            TrainLog log;
            const auto ckpt = cli::out_path(g, model_kind + ".bpck").string();
            if (model_kind == "forecaster") {
                Forecaster f(ModelConfig::from_config(kv));
                log = train(f, ds, tc).log;
                save_checkpoint(ckpt, f.params());
            } else {
                Lstm m(LstmConfig::from_config(kv));
                log = train(m, ds, tc).log;
                save_checkpoint(ckpt, m.params());
            }
            write_train_log_csv(cli::out_path(g, model_kind + "_train.csv").string(), log);
            char buf[96];
            std::snprintf(buf, sizeof(buf), "best_epoch %zu best_val_loss %.6g initial_val_loss %.6g", log.best_epoch, log.best_val_loss, log.initial_val_loss);
            out << buf << "\nconfig_hash " << cli::hex64(kv.hash()) << "\nwrote " << ckpt << "\n";
        } else if (*eval_cmd) {
            const auto model_cfg = ModelConfig::from_config(kv);
            std::vector<std::unique_ptr<Predictor>> preds;
            std::unique_ptr<Forecaster> f;
            std::unique_ptr<Lstm> l;
            if (!checkpoint.empty()) {
                f = std::make_unique<Forecaster>(load_forecaster(model_cfg, checkpoint));
                preds.push_back(std::make_unique<ForecasterPredictor>(*f, "forecaster"));
            }
            if (!lstm_checkpoint.empty()) {
                l = std::make_unique<Lstm>(load_lstm(LstmConfig::from_config(kv), lstm_checkpoint));
                preds.push_back(std::make_unique<LstmPredictor>(*l, "lstm"));
            }
            preds.push_back(std::make_unique<PersistencePredictor>(model_cfg.u_len, model_cfg.h_len));
            preds.push_back(std::make_unique<LinearPredictor>(model_cfg.u_len, model_cfg.h_len));
            const auto sc = evaluation_scenarios(kv);
            const auto trajs = simulate_set(sc, g.workers);
            EvalOptions eo;
            eo.stride = kv.get<std::size_t>("eval.stride", 1);
            eo.workers = g.workers;
            eo.scenario = "eval";
            eo.config_hash = kv.hash();
            std::vector<EvalReport> reports;
            for (const auto& p : preds) reports.push_back(evaluate(*p, trajs, Codebook{sc.num_antennas, sc.num_beams, 0.5}, eo));
            const auto path = cli::out_path(g, "eval.csv").string();
            std::ofstream csv(path);
            if (!csv) throw IoError("cannot write " + path);
            write_report_csv(csv, reports);
            for (const auto& r : reports) {
                char buf[128];
                std::snprintf(buf, sizeof(buf), "%-12s step1 %.4f mean %.4f n %zu", r.predictor.c_str(), r.per_step.front(), r.overall, r.count);
                out << buf << "\n";
            }
            if (g.emit_plotdata) write_plotdata(cli::out_path(g, "eval.dat").string(), reports);
        } else if (*suite_cmd) {
            if (!checkpoint.empty()) kv.apply_override("suite.checkpoint=" + checkpoint);
            if (!lstm_checkpoint.empty()) kv.apply_override("suite.lstm_checkpoint=" + lstm_checkpoint);
            SuiteOptions so;
            so.out_dir = g.out_dir;
            so.workers = g.workers;
            so.emit_plotdata = g.emit_plotdata;
            so.log = g.verbosity > 0 ? &err : nullptr;
            const auto res = run_suite(suite_name, kv, so);
            out << "config_hash " << cli::hex64(kv.hash()) << "\nwrote " << res.csv_path << "\n";
        } else if (*track_cmd) {
            const auto model_cfg = ModelConfig::from_config(kv);
            std::unique_ptr<Predictor> pred;
            std::unique_ptr<Forecaster> f;
            std::unique_ptr<Lstm> l;
            if (predictor_kind == "forecaster") {
                f = std::make_unique<Forecaster>(load_forecaster(model_cfg, checkpoint));
                pred = std::make_unique<ForecasterPredictor>(*f, "forecaster");
            } else if (predictor_kind == "lstm") {
                l = std::make_unique<Lstm>(load_lstm(LstmConfig::from_config(kv), checkpoint));
                pred = std::make_unique<LstmPredictor>(*l, "lstm");
            } else if (predictor_kind == "persistence") {
                pred = std::make_unique<PersistencePredictor>(model_cfg.u_len, model_cfg.h_len);
            } else {
                pred = std::make_unique<LinearPredictor>(model_cfg.u_len, model_cfg.h_len);
            }
            const auto sc = evaluation_scenarios(kv);
            const auto trajs = simulate_set(sc, g.workers);
            const Codebook cb{sc.num_antennas, sc.num_beams, 0.5};
            const auto refresh = kv.get<std::size_t>("eval.refresh_every", 10);
            const auto hood = kv.get<std::size_t>("eval.neighborhood", 2);
            std::vector<ClosedLoopResult> runs(trajs.size());
            parallel_for(trajs.size(), g.workers, [&](std::size_t i) { runs[i] = closed_loop_track(*pred, trajs[i], cb, refresh, hood, "closed-loop", kv.hash()); });
            EvalReport total = runs.front().report;
            total.count = 0;
            std::fill(total.per_step.begin(), total.per_step.end(), 0.0);
            for (const auto& r : runs) {
                for (std::size_t k = 0; k < total.per_step.size(); ++k) total.per_step[k] += r.report.per_step[k] / double(runs.size());
                total.count += r.report.count;
            }
            total.overall = 0.0;
            for (double v : total.per_step) total.overall += v / double(total.per_step.size());
            const auto path = cli::out_path(g, "track.csv").string();
            std::ofstream csv(path);
            if (!csv) throw IoError("cannot write " + path);
            write_report_csv(csv, std::vector<EvalReport>{total});
            char buf[96];
            std::snprintf(buf, sizeof(buf), "closed-loop %s mean %.4f windows %zu", pred->name().c_str(), total.overall, total.count);
            out << buf << "\n";
        } else if (*inspect) {
            const auto model_cfg = ModelConfig::from_config(kv);
            const auto q = cli::beams_of(kv);
            const auto trace = ingest_external_trace(trace_path, q);
            if (start + model_cfg.u_len > trace.size())
                throw ConfigError("window [" + std::to_string(start) + ", " + std::to_string(start + model_cfg.u_len) + ") exceeds the trace");
            const Forecaster f(model_cfg);
            const auto p = f.prompt_for(window_input(trace, start, model_cfg.u_len, static_cast<std::uint32_t>(q)), q);
            out << p.text << "\n";
            for (std::size_t i = 0; i < p.token_ids.size(); ++i) out << (i ? " " : "") << p.token_ids[i];
            out << "\n";
        } else if (*ingest) {
            const auto trace = ingest_external_trace(trace_path, cli::beams_of(kv));
            const auto path = cli::out_path(g, std::filesystem::path(trace_path).stem().string() + ".trace.csv").string();
            write_trace_csv(path, trace);
            out << "records " << trace.size() << "\nwrote " << path << "\n";
        }
    } catch (const DataError& e) {
        err << "beampred: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "beampred: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace beampred
