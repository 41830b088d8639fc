// conpred: command-line front end for data generation, features, training,
// evaluation and experiment runs.

#include "conpred/checkpoint.hpp"
#include "conpred/harness.hpp"
#include "conpred/ingest.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace conpred;

namespace {

enum exit_code { ok = 0, failure = 1, bad_config = 2, bad_data = 3, diverged = 4 };

struct globals {
    std::uint64_t seed = 0;
    std::string config;
    std::string out = "out";
};

experiment_config load_config(const globals &g) {
    experiment_config cfg;
    if (!g.config.empty()) {
        json j;
        try {
            j = read_json_file(g.config);
        } catch (const data_error &e) {
            throw config_error(e.what());
        }
        try {
            from_json(j, cfg);
        } catch (const json::exception &e) {
            throw config_error(std::string("bad config: ") + e.what());
        }
    }
    return cfg;
}

std::vector<noise_spec> parse_noise(const std::vector<std::string> &items) {
    std::vector<noise_spec> out;
    for (const auto &item : items) {
        const auto comma = item.find(',');
        if (comma == std::string::npos) {
            throw config_error("noise level '" + item + "' must be sigma,sigma_p");
        }
        try {
            noise_spec n{ std::stod(item.substr(0, comma)), std::stod(item.substr(comma + 1)) };
            if (n.sigma < 0 || n.sigma_p < 0) {
                throw config_error("noise levels must be non-negative");
            }
            out.push_back(n);
        } catch (const std::logic_error &) {
            throw config_error("noise level '" + item + "' is not numeric");
        }
    }
    return out;
}

model_family parse_family(const std::string &s) {
    if (s == "ddt") {
        return model_family::ddt;
    }
    if (s == "mlp") {
        return model_family::mlp;
    }
    throw config_error("unknown model family '" + s + "'");
}

void print_reports(const std::vector<run_report> &reports) {
    const auto f = [](std::optional<double> v) { return v ? fmt::format("{:.3f}", *v) : std::string("-"); };
    for (const auto &r : reports) {
        fmt::print("exp {} {} {} -> {}: base {}/{} cascade {}/{} support {:.3f} (test {:.3f}) extremes {:.3f}\n", r.experiment,
                   r.family == model_family::ddt ? "ddt" : "mlp", r.train_data, r.test_data, f(r.base_train_accuracy), f(r.base_test_accuracy),
                   f(r.cascade_train_accuracy), f(r.cascade_test_accuracy), r.cascade_train_support, r.cascade_test_support,
                   r.cascade_extremes_fraction());
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{ "Conservative prediction with cascaded differentiable models" };
    app.require_subcommand(1);
    globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--config", g.config, "JSON experiment configuration");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();

    // synth
    auto *synth = app.add_subcommand("synth", "Generate synthetic eras, one CSV per noise level");
    std::vector<std::string> synth_noise;
    int synth_eras = 0;
    int synth_first = 0;
    bool synth_reference = false;
    synth->add_option("--noise", synth_noise, "sigma,sigma_p (repeatable; default the full grid)");
    synth->add_option("--eras", synth_eras, "Eras per noise level (default from config)");
    synth->add_option("--first-era", synth_first, "First era index");
    synth->add_flag("--reference", synth_reference, "Draw the independent reference set instead");

    // ingest
    auto *ingest = app.add_subcommand("ingest", "Normalize market OHLCV CSV into eras");
    std::string ingest_input, ingest_baseline, ingest_ref_date;
    ingest->add_option("--input", ingest_input, "ticker,date,time,open,high,low,close,volume")->required();
    ingest->add_option("--baseline", ingest_baseline, "ticker,avg_volume")->required();
    ingest->add_option("--reference-date", ingest_ref_date, "YYYY-MM-DD era origin (default earliest date)");

    // features
    auto *features = app.add_subcommand("features", "Fit bins on a reference era CSV and discretize an era CSV");
    std::string feat_reference, feat_input, feat_bins;
    features->add_option("--input", feat_input, "Era CSV to transform")->required();
    features->add_option("--reference", feat_reference, "Era CSV to fit bins on");
    features->add_option("--bins", feat_bins, "Existing bins CSV instead of fitting");

    // train
    auto *train_cmd = app.add_subcommand("train", "Train a cascade (or a single model with --levels 1)");
    std::string train_features, train_family;
    int train_levels = 0;
    train_cmd->add_option("--features", train_features, "Feature CSV")->required();
    train_cmd->add_option("--family", train_family, "ddt or mlp");
    train_cmd->add_option("--levels", train_levels, "Cascade levels");

    // eval
    auto *eval_cmd = app.add_subcommand("eval", "Evaluate a trained cascade on a feature CSV");
    std::string eval_model, eval_features;
    eval_cmd->add_option("--model", eval_model, "Model directory from train")->required();
    eval_cmd->add_option("--features", eval_features, "Feature CSV")->required();

    // experiment
    auto *exp_cmd = app.add_subcommand("experiment", "Run an experiment protocol (ids 1-6)");
    int exp_id = 0;
    std::string exp_family;
    std::vector<std::string> exp_noise;
    int exp_eras = 0;
    int exp_epochs = 0;
    bool exp_cv = false;
    bool exp_dump = false;
    exp_cmd->add_option("--id", exp_id, "Experiment id 1-6");
    exp_cmd->add_option("--family", exp_family, "ddt or mlp");
    exp_cmd->add_option("--noise", exp_noise, "sigma,sigma_p (repeatable)");
    exp_cmd->add_option("--eras", exp_eras, "Eras per noise level");
    exp_cmd->add_option("--epochs", exp_epochs, "Training epochs");
    exp_cmd->add_flag("--crossval", exp_cv, "Select hyperparameters by 5-fold CV on the first noise level");
    exp_cmd->add_flag("--dump-config", exp_dump, "Print the effective configuration and exit");

    // report
    auto *report_cmd = app.add_subcommand("report", "Re-emit CSV tables from a report.json");
    std::string report_input;
    report_cmd->add_option("--input", report_input, "report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : bad_config;
    }

    try {
        experiment_config cfg = load_config(g);
        if (app.get_option("--seed")->count() > 0 || g.config.empty()) {
            cfg.seed = g.seed;
        }
        const fs::path out = g.out;

        if (*synth) {
            const auto levels = synth_noise.empty() ? noise_grid() : parse_noise(synth_noise);
            const int eras = synth_eras > 0 ? synth_eras : cfg.eras;
            const std::uint64_t seed = synth_reference ? derive_seed(cfg.seed, { stream::reference }) : cfg.seed;
            fs::create_directories(out);
            for (const auto &n : levels) {
                const fs::path path = out / ((synth_reference ? "reference_" : "") + synth_filename(n));
                write_era_csv(path.string(), build_dataset(n, eras, seed, cfg.synth, synth_first));
                fmt::print("{}\n", path.string());
            }
        } else if (*ingest) {
            const auto days = parse_ohlcv_csv(ingest_input);
            if (days.empty()) {
                throw empty_file_error("no records in '" + ingest_input + "'");
            }
            std::chrono::sys_days ref = days.front().date;
            for (const auto &d : days) {
                ref = std::min(ref, d.date);
            }
            if (!ingest_ref_date.empty()) {
                ref = parse_date(ingest_ref_date, 0);
            }
            const auto eras = normalize_market(days, read_volume_baseline(ingest_baseline), ref);
            fs::create_directories(out);
            write_era_csv((out / "market_eras.csv").string(), eras);
            fmt::print("{} days -> {}\n", eras.size(), (out / "market_eras.csv").string());
        } else if (*features) {
            bin_thresholds th;
            if (!feat_bins.empty()) {
                th = read_bins_csv(feat_bins);
            } else if (!feat_reference.empty()) {
                th = fit_bins(build_feature_table(read_era_csv(feat_reference), cfg.features));
            } else {
                throw config_error("features needs --reference or --bins");
            }
            const auto table = build_feature_table(read_era_csv(feat_input), cfg.features);
            const auto rows = apply_bins(table, th);
            fs::create_directories(out);
            write_bins_csv((out / "bins.csv").string(), th);
            write_features_csv((out / "features.csv").string(), table.names, rows);
            fmt::print("{} rows x {} features -> {}\n", rows.size(), table.names.size(), (out / "features.csv").string());
        } else if (*train_cmd) {
            if (!train_family.empty()) {
                const auto fam = parse_family(train_family);
                if (fam != cfg.model.family) {
                    cfg.model = default_model(fam);
                }
            }
            if (train_levels > 0) {
                cfg.cascade.levels = train_levels;
            }
            const feature_file ff = read_features_csv(train_features);
            const auto c = detail::train_classifier_cascade(cfg, ff.rows, cfg.seed);
            save_cascade(out / "model", c, ff.names, cfg.seed, config_hash(cfg));
            for (std::size_t l = 0; l < c.diagnostics.size(); ++l) {
                const auto &d = c.diagnostics[l];
                fmt::print("level {}: {} rows, unpruned {:.3f}, accuracy {}\n", l + 1, d.train_indices.size(), d.unpruned_fraction,
                           d.accuracy ? fmt::format("{:.3f}", *d.accuracy) : "-");
            }
        } else if (*eval_cmd) {
            const loaded_cascade lc = load_cascade(eval_model);
            const feature_file ff = read_features_csv(eval_features);
            if (ff.names != lc.feature_names) {
                throw data_error("feature columns do not match the trained model");
            }
            run_report r;
            r.experiment = 0;
            r.train_data = "model";
            r.test_data = fs::path(eval_features).filename().string();
            r.seed = cfg.seed;
            r.family = std::holds_alternative<ddt>(lc.model.models.front().model()) ? model_family::ddt : model_family::mlp;
            detail::aggregate(r, { detail::score_unit(lc.model, split_rows{ {}, ff.rows }) });
            emit_report({ r }, report_format::both, out);
            print_reports({ r });
        } else if (*exp_cmd) {
            if (exp_id != 0) {
                cfg.id = exp_id;
            }
            if (!exp_family.empty()) {
                const auto fam = parse_family(exp_family);
                if (fam != cfg.model.family) {
                    cfg.model = default_model(fam);
                }
            }
            if (!exp_noise.empty()) {
                cfg.noise_levels = parse_noise(exp_noise);
            } else if ((cfg.id == 5 || cfg.id == 6) && g.config.empty()) {
                cfg.noise_levels.assign(noise_grid().begin() + 1, noise_grid().end());
            }
            if (exp_eras > 0) {
                cfg.eras = cfg.reference_eras = exp_eras;
            }
            if (exp_epochs > 0) {
                cfg.model.training.epochs = exp_epochs;
            }
            cfg.validate();
            if (exp_cv) {
                dataset_cache cache(cfg);
                const noise_spec first = cfg.noise_levels.front();
                const auto rows = cfg.source == data_source::market ? cache.market() : cache.synthetic(first, first, cfg.eras);
                const auto res = crossval(expand_grid(cfg.model, cv_grid{}), 5, split_temporal(rows, cfg.train_fraction).train, cfg.seed);
                cfg.model = res.spec;
                fmt::print("crossval chose lr {:g} lambda {:g} batch {} (mean accuracy {:.3f})\n", res.spec.training.learning_rate,
                           res.spec.tree.lambda_base, res.spec.training.batch_size, res.mean_accuracy[res.chosen]);
            }
            if (exp_dump) {
                std::cout << json(cfg).dump(2) << '\n';
                return ok;
            }
            const auto reports = run_experiment(cfg);
            emit_report(reports, report_format::both, out);
            print_reports(reports);
        } else if (*report_cmd) {
            const auto reports = read_report_json(report_input);
            emit_report(reports, report_format::csv, out);
            print_reports(reports);
        }
    } catch (const config_error &e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return bad_config;
    } catch (const data_error &e) {
        fmt::print(stderr, "data error: {}\n", e.what());
        return bad_data;
    } catch (const training_error &e) {
        fmt::print(stderr, "training error: {}\n", e.what());
        return diverged;
    } catch (const fs::filesystem_error &e) {
        fmt::print(stderr, "data error: {}\n", e.what());
        return bad_data;
    } catch (const std::exception &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return failure;
    }
    return ok;
}
