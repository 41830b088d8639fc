#pragma once

// Experiment protocols, k-fold model selection and report files.

#include "conpred/cascade.hpp"
#include "conpred/checkpoint.hpp"
#include "conpred/errors.hpp"
#include "conpred/features.hpp"
#include "conpred/metrics.hpp"
#include "conpred/models.hpp"
#include "conpred/random.hpp"
#include "conpred/series.hpp"
#include "conpred/synthgen.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace conpred {

enum class data_source { synthetic, market };

NLOHMANN_JSON_SERIALIZE_ENUM(data_source, { { data_source::synthetic, "synthetic" }, { data_source::market, "market" } })

/// Default model template for a family: depth-6 tree for 500 epochs or the
/// (128,64,32) network for 1000.
inline model_spec default_model(model_family family) {
    model_spec s;
    s.family = family;
    s.training.learning_rate = 2e-4;
    s.training.epochs = family == model_family::ddt ? 500 : 1000;
    return s;
}

struct experiment_config {
    int id = 1;
    data_source source = data_source::synthetic;
    std::vector<noise_spec> noise_levels = noise_grid();
    synth_config synth{};
    int eras = 200;            // per noise level (ids 1, 5, 6); split in halves for id 2
    int reference_eras = 200;  // independent set the bins are fitted on
    int single_eras = 10;      // ids 3 and 4 use the first this many eras
    int pairs = 0;             // id 4 era pairs; 0 means one per era
    double train_fraction = 0.8;
    feature_spec features{};
    model_spec model = default_model(model_family::ddt);
    cascade_config cascade{};
    std::string market_eras;   // normalized era CSV for the market source
    int market_reference_eras = 20;
    std::uint64_t seed = 0;

    void validate() const {
        if (id < 1 || id > 6) {
            throw config_error("experiment id must be 1..6");
        }
        if (source == data_source::market && (id == 5 || id == 6)) {
            throw config_error("experiments 5 and 6 need synthetic noise levels");
        }
        if (source == data_source::market && market_eras.empty()) {
            throw config_error("market source needs an era CSV");
        }
        if (source == data_source::synthetic && noise_levels.empty()) {
            throw config_error("no noise levels selected");
        }
        if (eras < 1 || reference_eras < 1 || single_eras < 1 || pairs < 0) {
            throw config_error("era counts must be positive");
        }
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
            throw config_error("train_fraction must lie in (0,1)");
        }
        cascade.validate();
    }
};

inline void to_json(json &j, const noise_spec &n) { j = json::array({ n.sigma, n.sigma_p }); }

inline void from_json(const json &j, noise_spec &n) {
    if (!j.is_array() || j.size() != 2) {
        throw config_error("noise level must be [sigma, sigma_p]");
    }
    n.sigma = j[0].get<double>();
    n.sigma_p = j[1].get<double>();
    if (n.sigma < 0 || n.sigma_p < 0) {
        throw config_error("noise levels must be non-negative");
    }
}

inline void to_json(json &j, const synth_config &c) {
    j = json{ { "amplitude_min", c.amplitude_min }, { "amplitude_max", c.amplitude_max }, { "peaks_min", c.peaks_min }, { "peaks_max", c.peaks_max } };
}

inline void from_json(const json &j, synth_config &c) {
    c.amplitude_min = j.value("amplitude_min", c.amplitude_min);
    c.amplitude_max = j.value("amplitude_max", c.amplitude_max);
    c.peaks_min = j.value("peaks_min", c.peaks_min);
    c.peaks_max = j.value("peaks_max", c.peaks_max);
}

inline void to_json(json &j, const feature_spec &s) {
    j = json{ { "price_ma_windows", s.price_ma_windows },
              { "volume_ma_windows", s.volume_ma_windows },
              { "rsi_period", s.rsi_period },
              { "macd_fast", s.macd_fast },
              { "macd_slow", s.macd_slow },
              { "macd_signal", s.macd_signal },
              { "bollinger_window", s.bollinger_window },
              { "bollinger_width", s.bollinger_width },
              { "slope_windows", s.slope_windows },
              { "target_horizon", s.target_horizon },
              { "ema_sma_seed", s.ema_sma_seed },
              { "change_length_exclude", s.change_length_exclude } };
}

inline void from_json(const json &j, feature_spec &s) {
    s.price_ma_windows = j.value("price_ma_windows", s.price_ma_windows);
    s.volume_ma_windows = j.value("volume_ma_windows", s.volume_ma_windows);
    s.rsi_period = j.value("rsi_period", s.rsi_period);
    s.macd_fast = j.value("macd_fast", s.macd_fast);
    s.macd_slow = j.value("macd_slow", s.macd_slow);
    s.macd_signal = j.value("macd_signal", s.macd_signal);
    s.bollinger_window = j.value("bollinger_window", s.bollinger_window);
    s.bollinger_width = j.value("bollinger_width", s.bollinger_width);
    s.slope_windows = j.value("slope_windows", s.slope_windows);
    s.target_horizon = j.value("target_horizon", s.target_horizon);
    s.ema_sma_seed = j.value("ema_sma_seed", s.ema_sma_seed);
    s.change_length_exclude = j.value("change_length_exclude", s.change_length_exclude);
}

inline void to_json(json &j, const experiment_config &c) {
    j = json{ { "id", c.id },
              { "source", c.source },
              { "noise_levels", c.noise_levels },
              { "synth", c.synth },
              { "eras", c.eras },
              { "reference_eras", c.reference_eras },
              { "single_eras", c.single_eras },
              { "pairs", c.pairs },
              { "train_fraction", c.train_fraction },
              { "features", c.features },
              { "model", c.model },
              { "cascade", c.cascade },
              { "market_eras", c.market_eras },
              { "market_reference_eras", c.market_reference_eras },
              { "seed", c.seed } };
}

/// Missing keys keep their current values, so a partial file overrides
/// only what it names.
inline void from_json(const json &j, experiment_config &c) {
    c.id = j.value("id", c.id);
    c.source = j.value("source", c.source);
    c.noise_levels = j.value("noise_levels", c.noise_levels);
    c.synth = j.value("synth", c.synth);
    c.eras = j.value("eras", c.eras);
    c.reference_eras = j.value("reference_eras", c.reference_eras);
    c.single_eras = j.value("single_eras", c.single_eras);
    c.pairs = j.value("pairs", c.pairs);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    if (j.contains("features")) {
        from_json(j.at("features"), c.features);
    }
    if (j.contains("model")) {
        from_json(j.at("model"), c.model);
    }
    if (j.contains("cascade")) {
        from_json(j.at("cascade"), c.cascade);
    }
    c.market_eras = j.value("market_eras", c.market_eras);
    c.market_reference_eras = j.value("market_reference_eras", c.market_reference_eras);
    c.seed = j.value("seed", c.seed);
}

/// Hash of everything except the seed.
inline std::string config_hash(const experiment_config &c) {
    json j = c;
    j.erase("seed");
    return config_hash(j);
}

// ---------------------------------------------------------------------------
// Splits

struct split_rows {
    std::vector<feature_row> train;
    std::vector<feature_row> test;
};

inline std::map<int, std::vector<feature_row>> group_by_era(const std::vector<feature_row> &rows) {
    std::map<int, std::vector<feature_row>> by;
    for (const auto &r : rows) {
        by[r.era].push_back(r);
    }
    for (auto &[era, v] : by) {
        std::stable_sort(v.begin(), v.end(), [](const feature_row &a, const feature_row &b) { return a.t < b.t; });
    }
    return by;
}

/// Earliest floor(fraction*n) rows of every era train, the rest test.
inline split_rows split_temporal(const std::vector<feature_row> &rows, double fraction = 0.8) {
    split_rows s;
    for (const auto &[era, v] : group_by_era(rows)) {
        const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(v.size()) + 1e-9));
        s.train.insert(s.train.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
        s.test.insert(s.test.end(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    }
    return s;
}

/// Earlier half of the eras train, the later half test; an odd era out is
/// left unused so both halves have equal era counts.
inline split_rows split_eras(const std::vector<feature_row> &rows) {
    const auto by = group_by_era(rows);
    if (by.size() < 2) {
        throw too_few_eras_error("disjoint era split needs at least 2 eras");
    }
    const std::size_t half = by.size() / 2;
    split_rows s;
    std::size_t i = 0;
    for (const auto &[era, v] : by) {
        if (i < half) {
            s.train.insert(s.train.end(), v.begin(), v.end());
        } else if (i < 2 * half) {
            s.test.insert(s.test.end(), v.begin(), v.end());
        }
        ++i;
    }
    return s;
}

/// `count` (train era, test era) pairs, each train era paired with a
/// different era drawn from the pairs stream; count 0 gives one per era.
inline std::vector<std::pair<int, int>> sample_era_pairs(const std::vector<int> &eras, std::size_t count, std::uint64_t seed) {
    if (eras.size() < 2) {
        throw too_few_eras_error("cross-era pairs need at least 2 eras");
    }
    if (count == 0) {
        count = eras.size();
    }
    rng_engine rng(derive_seed(seed, { stream::pairs }));
    std::uniform_int_distribution<std::size_t> pick(0, eras.size() - 2);
    std::vector<std::pair<int, int>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t a = i % eras.size();
        std::size_t b = pick(rng);
        b += b >= a ? 1 : 0;
        out.emplace_back(eras[a], eras[b]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

struct level_report {
    int level = 0;
    double train_unpruned_fraction = 0.0;
    std::optional<double> train_accuracy;
    std::size_t test_seen = 0;
    std::size_t test_answered = 0;
    std::optional<double> test_accuracy;
    double test_support_share = 0.0;

    friend bool operator==(const level_report &, const level_report &) = default;
};

struct run_report {
    int experiment = 1;
    std::string train_data;  // noise label or "market"
    std::string test_data;
    noise_spec noise{};      // the level this row varies over
    model_family family = model_family::ddt;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::size_t units = 1;   // eras or era pairs averaged
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;

    std::optional<double> base_train_accuracy;
    std::optional<double> base_test_accuracy;
    std::optional<double> cascade_train_accuracy;
    double cascade_train_support = 0.0;
    std::optional<double> cascade_test_accuracy;
    double cascade_test_support = 0.0;

    std::vector<level_report> levels;
    trade_report_result base_trades;
    trade_report_result cascade_trades;
    confusion_matrix base_confusion;
    confusion_matrix cascade_confusion;

    /// Share of the cascade's answered test rows predicted as class 0 or 4.
    [[nodiscard]] double cascade_extremes_fraction() const noexcept {
        return cascade_confusion.predicted_fraction(0) + cascade_confusion.predicted_fraction(num_classes - 1);
    }
    [[nodiscard]] double base_extremes_fraction() const noexcept {
        return base_confusion.predicted_fraction(0) + base_confusion.predicted_fraction(num_classes - 1);
    }
};

namespace detail {

/// One train/test unit evaluated end to end.
struct unit_result {
    accuracy_support_result base_train, base_test, cascade_train, cascade_test;
    std::vector<level_diagnostics> train_levels;
    std::vector<level_stats> test_levels;
    std::vector<scored_outcome> base_scored, cascade_scored;
    std::size_t train_rows = 0, test_rows = 0;
};

/// Scores a trained cascade; its first level, ungated, is the base model.
inline unit_result score_unit(const cascade<classifier> &c, const split_rows &s) {
    const classifier &base = c.models.front();
    unit_result u;
    u.train_rows = s.train.size();
    u.test_rows = s.test.size();
    u.base_train = accuracy_support(score_ungated(base, s.train));
    u.base_scored = score_ungated(base, s.test);
    u.base_test = accuracy_support(u.base_scored);
    u.cascade_train = evaluate(c, s.train).combined;
    cascade_evaluation ev = evaluate(c, s.test);
    u.cascade_test = ev.combined;
    u.test_levels = std::move(ev.levels);
    u.cascade_scored = std::move(ev.scored);
    u.train_levels = c.diagnostics;
    return u;
}

inline cascade<classifier> train_classifier_cascade(const experiment_config &cfg, const std::vector<feature_row> &train, std::uint64_t seed) {
    if (train.empty()) {
        throw empty_train_set_error("experiment split produced no training rows");
    }
    const auto fit = [&](const std::vector<feature_row> &rows, std::uint64_t sd) { return fit_classifier(cfg.model, rows, sd).model; };
    return train_cascade(cfg.cascade, train, seed, fit);
}

inline unit_result run_unit(const experiment_config &cfg, const split_rows &s, std::uint64_t seed) {
    return score_unit(train_classifier_cascade(cfg, s.train, seed), s);
}

inline std::optional<double> mean_defined(const std::vector<std::optional<double>> &xs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &x : xs) {
        if (x) {
            sum += *x;
            ++n;
        }
    }
    if (n == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(n);
}

/// Accuracies and supports are averaged over units; trades, confusion
/// matrices and per-level test counts are pooled.
inline void aggregate(run_report &r, const std::vector<unit_result> &units) {
    r.units = units.size();
    std::vector<std::optional<double>> btr, bte, ctr, cte;
    double ctr_sup = 0.0, cte_sup = 0.0;
    std::vector<scored_outcome> base_all, casc_all;
    std::size_t max_levels = 0;
    for (const auto &u : units) {
        btr.push_back(u.base_train.accuracy);
        bte.push_back(u.base_test.accuracy);
        ctr.push_back(u.cascade_train.accuracy);
        cte.push_back(u.cascade_test.accuracy);
        ctr_sup += u.cascade_train.support;
        cte_sup += u.cascade_test.support;
        base_all.insert(base_all.end(), u.base_scored.begin(), u.base_scored.end());
        casc_all.insert(casc_all.end(), u.cascade_scored.begin(), u.cascade_scored.end());
        r.train_rows += u.train_rows;
        r.test_rows += u.test_rows;
        max_levels = std::max(max_levels, u.test_levels.size());
    }
    const auto n = static_cast<double>(std::max<std::size_t>(units.size(), 1));
    r.base_train_accuracy = mean_defined(btr);
    r.base_test_accuracy = mean_defined(bte);
    r.cascade_train_accuracy = mean_defined(ctr);
    r.cascade_test_accuracy = mean_defined(cte);
    r.cascade_train_support = ctr_sup / n;
    r.cascade_test_support = cte_sup / n;
    r.base_trades = trade_report(base_all);
    r.cascade_trades = trade_report(casc_all);
    r.base_confusion = confusion(base_all);
    r.cascade_confusion = confusion(casc_all);

    for (std::size_t l = 0; l < max_levels; ++l) {
        level_report lr;
        lr.level = static_cast<int>(l) + 1;
        std::vector<std::optional<double>> tr_acc;
        double tr_unpruned = 0.0;
        std::size_t tr_units = 0, correct = 0;
        for (const auto &u : units) {
            if (l < u.train_levels.size()) {
                tr_acc.push_back(u.train_levels[l].accuracy);
                tr_unpruned += u.train_levels[l].unpruned_fraction;
                ++tr_units;
            }
            if (l < u.test_levels.size()) {
                lr.test_seen += u.test_levels[l].seen;
                lr.test_answered += u.test_levels[l].answered;
                correct += u.test_levels[l].correct;
            }
        }
        lr.train_accuracy = mean_defined(tr_acc);
        lr.train_unpruned_fraction = tr_units > 0 ? tr_unpruned / static_cast<double>(tr_units) : 0.0;
        if (lr.test_answered > 0) {
            lr.test_accuracy = static_cast<double>(correct) / static_cast<double>(lr.test_answered);
        }
        if (r.test_rows > 0) {
            lr.test_support_share = static_cast<double>(lr.test_answered) / static_cast<double>(r.test_rows);
        }
        r.levels.push_back(lr);
    }
}

}  // namespace detail

/// Synthetic and market feature rows with a per-run cache.
class dataset_cache {
  public:
    explicit dataset_cache(const experiment_config &cfg) : cfg_(cfg) {}

    /// Rows at `binned_with` noise using bins fitted on the reference set of
    /// `bins_from` noise.
    const std::vector<feature_row> &synthetic(const noise_spec &level, const noise_spec &bins_from, int eras) {
        const auto key = std::make_tuple(level.sigma, level.sigma_p, bins_from.sigma, bins_from.sigma_p, eras);
        auto it = rows_.find(key);
        if (it != rows_.end()) {
            return it->second;
        }
        const raw_feature_table table = build_feature_table(build_dataset(level, eras, cfg_.seed, cfg_.synth), cfg_.features);
        return rows_.emplace(key, apply_bins(table, bins(bins_from))).first->second;
    }

    const bin_thresholds &bins(const noise_spec &level) {
        const auto key = std::make_pair(level.sigma, level.sigma_p);
        auto it = bins_.find(key);
        if (it != bins_.end()) {
            return it->second;
        }
        const auto ref = build_dataset(level, cfg_.reference_eras, derive_seed(cfg_.seed, { stream::reference }), cfg_.synth);
        return bins_.emplace(key, fit_bins(build_feature_table(ref, cfg_.features))).first->second;
    }

    /// The earliest market_reference_eras eras fit the bins and are held out.
    const std::vector<feature_row> &market() {
        if (market_) {
            return *market_;
        }
        std::vector<era_series> all = read_era_csv(cfg_.market_eras);
        std::stable_sort(all.begin(), all.end(), [](const era_series &a, const era_series &b) { return a.era < b.era; });
        std::set<int> distinct;
        for (const auto &s : all) {
            distinct.insert(s.era);
        }
        if (distinct.size() <= static_cast<std::size_t>(cfg_.market_reference_eras)) {
            throw too_few_eras_error("market data has no eras left after the reference set");
        }
        const int cutoff = *std::next(distinct.begin(), cfg_.market_reference_eras);
        std::vector<era_series> ref, rest;
        for (auto &s : all) {
            (s.era < cutoff ? ref : rest).push_back(std::move(s));
        }
        const bin_thresholds th = fit_bins(build_feature_table(ref, cfg_.features));
        market_ = apply_bins(build_feature_table(rest, cfg_.features), th);
        return *market_;
    }

  private:
    experiment_config cfg_;
    std::map<std::tuple<double, double, double, double, int>, std::vector<feature_row>> rows_;
    std::map<std::pair<double, double>, bin_thresholds> bins_;
    std::optional<std::vector<feature_row>> market_;
};

namespace detail {

inline std::vector<unit_result> run_protocol(const experiment_config &cfg, const std::vector<feature_row> &rows) {
    std::vector<unit_result> units;
    switch (cfg.id) {
    case 1:
        units.push_back(run_unit(cfg, split_temporal(rows, cfg.train_fraction), cfg.seed));
        break;
    case 2:
        units.push_back(run_unit(cfg, split_eras(rows), cfg.seed));
        break;
    case 3:
    case 4: {
        const auto by = group_by_era(rows);
        std::vector<int> eras;
        for (const auto &[era, v] : by) {
            if (eras.size() < static_cast<std::size_t>(cfg.single_eras)) {
                eras.push_back(era);
            }
        }
        if (cfg.id == 3) {
            for (const int era : eras) {
                units.push_back(run_unit(cfg, split_temporal(by.at(era), cfg.train_fraction), cfg.seed));
            }
        } else {
            for (const auto &[a, b] : sample_era_pairs(eras, static_cast<std::size_t>(cfg.pairs), cfg.seed)) {
                units.push_back(run_unit(cfg, { by.at(a), by.at(b) }, cfg.seed));
            }
        }
        break;
    }
    default:
        throw config_error("protocol " + std::to_string(cfg.id) + " is not a single-source split");
    }
    return units;
}

}  // namespace detail

/// One report row per noise level (one for market data). The base model is
/// the cascade's first level scored without its gate.
inline std::vector<run_report> run_experiment(const experiment_config &cfg) {
    cfg.validate();
    dataset_cache cache(cfg);
    const std::string hash = config_hash(cfg);
    const auto stamp = [&](run_report &r) {
        r.experiment = cfg.id;
        r.family = cfg.model.family;
        r.seed = cfg.seed;
        r.config_hash = hash;
    };
    const int per_level_eras = cfg.id == 3 || cfg.id == 4 ? std::min(cfg.eras, cfg.single_eras) : cfg.eras;

    std::vector<run_report> out;
    if (cfg.source == data_source::market) {
        run_report r;
        stamp(r);
        r.train_data = r.test_data = "market";
        detail::aggregate(r, detail::run_protocol(cfg, cache.market()));
        out.push_back(std::move(r));
        return out;
    }

    const noise_spec clean{};
    for (const noise_spec &level : cfg.noise_levels) {
        run_report r;
        stamp(r);
        r.noise = level;
        try {
            if (cfg.id == 5 || cfg.id == 6) {
                const noise_spec from = cfg.id == 5 ? clean : level;
                const noise_spec to = cfg.id == 5 ? level : clean;
                r.train_data = noise_label(from);
                r.test_data = noise_label(to);
                split_rows s{ cache.synthetic(from, from, cfg.eras), cache.synthetic(to, from, cfg.eras) };
                detail::aggregate(r, { detail::run_unit(cfg, s, cfg.seed) });
            } else {
                r.train_data = r.test_data = noise_label(level);
                detail::aggregate(r, detail::run_protocol(cfg, cache.synthetic(level, level, per_level_eras)));
            }
        } catch (const data_error &e) {
            throw data_error(fmt::format("experiment {} at noise {}: {}", cfg.id, noise_label(level), e.what()));
        } catch (const training_error &e) {
            throw diverged_loss_error(fmt::format("experiment {} at noise {}: {}", cfg.id, noise_label(level), e.what()));
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct cv_grid {
    std::vector<double> learning_rates{ 1e-2, 1e-3 };
    std::vector<double> lambda_bases{ 0.0, 0.1 };
    std::vector<std::size_t> batch_sizes{ 64, 128 };
};

/// Grid points in lexicographic (learning rate, lambda, batch) order.
inline std::vector<model_spec> expand_grid(const model_spec &base, const cv_grid &g) {
    std::vector<model_spec> out;
    for (const double lr : g.learning_rates) {
        for (const double lambda : g.lambda_bases) {
            for (const std::size_t batch : g.batch_sizes) {
                model_spec s = base;
                s.training.learning_rate = lr;
                s.tree.lambda_base = lambda;
                s.training.batch_size = batch;
                out.push_back(s);
            }
        }
    }
    return out;
}

struct cv_result {
    std::size_t chosen = 0;
    model_spec spec;
    std::vector<double> mean_accuracy;  // per grid point
    std::vector<std::size_t> parameter_counts;
};

/// Era-respecting k folds: sorted distinct eras go to fold (rank mod k).
inline std::vector<int> era_folds(const std::vector<feature_row> &rows, int k) {
    std::set<int> eras;
    for (const auto &r : rows) {
        eras.insert(r.era);
    }
    if (k < 2 || eras.size() < static_cast<std::size_t>(k)) {
        throw too_few_rows_error(fmt::format("{}-fold cross-validation needs at least {} eras, got {}", k, std::max(k, 2), eras.size()));
    }
    std::map<int, int> fold_of;
    int rank = 0;
    for (const int e : eras) {
        fold_of[e] = rank++ % k;
    }
    std::vector<int> folds;
    folds.reserve(rows.size());
    for (const auto &r : rows) {
        folds.push_back(fold_of[r.era]);
    }
    return folds;
}

/// Highest mean validation accuracy wins; ties go to fewer parameters, then
/// to the earlier grid point.
inline cv_result crossval(const std::vector<model_spec> &grid, int k, const std::vector<feature_row> &rows, std::uint64_t seed) {
    if (grid.empty()) {
        throw config_error("empty hyperparameter grid");
    }
    const std::vector<int> folds = era_folds(rows, k);
    cv_result res;
    for (const model_spec &spec : grid) {
        double total = 0.0;
        std::size_t params = 0;
        for (int f = 0; f < k; ++f) {
            std::vector<feature_row> tr, va;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                (folds[i] == f ? va : tr).push_back(rows[i]);
            }
            const trained_classifier m = fit_classifier(spec, tr, derive_seed(seed, { static_cast<std::uint64_t>(f) }));
            params = m.model.parameter_count();
            total += accuracy_support(score_ungated(m.model, va)).accuracy.value_or(0.0);
        }
        res.mean_accuracy.push_back(total / k);
        res.parameter_counts.push_back(params);
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = res.mean_accuracy[i], best = res.mean_accuracy[res.chosen];
        if (a > best || (a == best && res.parameter_counts[i] < res.parameter_counts[res.chosen])) {
            res.chosen = i;
        }
    }
    res.spec = grid[res.chosen];
    return res;
}

// ---------------------------------------------------------------------------
// Report files

namespace detail {

inline std::string num(std::optional<double> v) {
    if (!v) {
        return "";
    }
    if (std::isinf(*v)) {
        return *v > 0 ? "inf" : "-inf";
    }
    return fmt::format("{:.6f}", *v);
}

inline json opt_json(std::optional<double> v) {
    if (!v) {
        return nullptr;
    }
    if (std::isinf(*v)) {
        return *v > 0 ? "inf" : "-inf";
    }
    return *v;
}

inline std::optional<double> opt_from(const json &j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        throw data_error("bad number '" + s + "' in report");
    }
    return j.get<double>();
}

inline const char *family_name(model_family f) { return f == model_family::ddt ? "ddt" : "mlp"; }

}  // namespace detail

inline void to_json(json &j, const trade_report_result &t) {
    j = json{ { "trades", t.trades },
              { "gain", t.gain },
              { "loss", t.loss },
              { "average_utility", detail::opt_json(t.average_utility) },
              { "drar", detail::opt_json(t.drar) },
              { "traded_sharpe", detail::opt_json(t.traded_sharpe) } };
}

inline void from_json(const json &j, trade_report_result &t) {
    t.trades = j.at("trades").get<std::size_t>();
    t.gain = j.at("gain").get<double>();
    t.loss = j.at("loss").get<double>();
    t.average_utility = detail::opt_from(j.at("average_utility"));
    t.drar = detail::opt_from(j.at("drar"));
    t.traded_sharpe = detail::opt_from(j.at("traded_sharpe"));
}

inline void to_json(json &j, const level_report &l) {
    j = json{ { "level", l.level },
              { "train_unpruned_fraction", l.train_unpruned_fraction },
              { "train_accuracy", detail::opt_json(l.train_accuracy) },
              { "test_seen", l.test_seen },
              { "test_answered", l.test_answered },
              { "test_accuracy", detail::opt_json(l.test_accuracy) },
              { "test_support_share", l.test_support_share } };
}

inline void from_json(const json &j, level_report &l) {
    l.level = j.at("level").get<int>();
    l.train_unpruned_fraction = j.at("train_unpruned_fraction").get<double>();
    l.train_accuracy = detail::opt_from(j.at("train_accuracy"));
    l.test_seen = j.at("test_seen").get<std::size_t>();
    l.test_answered = j.at("test_answered").get<std::size_t>();
    l.test_accuracy = detail::opt_from(j.at("test_accuracy"));
    l.test_support_share = j.at("test_support_share").get<double>();
}

inline void to_json(json &j, const run_report &r) {
    j = json{ { "experiment", r.experiment },
              { "train_data", r.train_data },
              { "test_data", r.test_data },
              { "noise", r.noise },
              { "family", r.family },
              { "seed", r.seed },
              { "config_hash", r.config_hash },
              { "units", r.units },
              { "train_rows", r.train_rows },
              { "test_rows", r.test_rows },
              { "base_train_accuracy", detail::opt_json(r.base_train_accuracy) },
              { "base_test_accuracy", detail::opt_json(r.base_test_accuracy) },
              { "cascade_train_accuracy", detail::opt_json(r.cascade_train_accuracy) },
              { "cascade_train_support", r.cascade_train_support },
              { "cascade_test_accuracy", detail::opt_json(r.cascade_test_accuracy) },
              { "cascade_test_support", r.cascade_test_support },
              { "levels", r.levels },
              { "base_trades", r.base_trades },
              { "cascade_trades", r.cascade_trades },
              { "base_confusion", r.base_confusion.counts },
              { "cascade_confusion", r.cascade_confusion.counts } };
}

inline void from_json(const json &j, run_report &r) {
    r.experiment = j.at("experiment").get<int>();
    r.train_data = j.at("train_data").get<std::string>();
    r.test_data = j.at("test_data").get<std::string>();
    r.noise = j.at("noise").get<noise_spec>();
    r.family = j.at("family").get<model_family>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.units = j.at("units").get<std::size_t>();
    r.train_rows = j.at("train_rows").get<std::size_t>();
    r.test_rows = j.at("test_rows").get<std::size_t>();
    r.base_train_accuracy = detail::opt_from(j.at("base_train_accuracy"));
    r.base_test_accuracy = detail::opt_from(j.at("base_test_accuracy"));
    r.cascade_train_accuracy = detail::opt_from(j.at("cascade_train_accuracy"));
    r.cascade_train_support = j.at("cascade_train_support").get<double>();
    r.cascade_test_accuracy = detail::opt_from(j.at("cascade_test_accuracy"));
    r.cascade_test_support = j.at("cascade_test_support").get<double>();
    r.levels = j.at("levels").get<std::vector<level_report>>();
    r.base_trades = j.at("base_trades").get<trade_report_result>();
    r.cascade_trades = j.at("cascade_trades").get<trade_report_result>();
    r.base_confusion.counts = j.at("base_confusion").get<decltype(r.base_confusion.counts)>();
    r.cascade_confusion.counts = j.at("cascade_confusion").get<decltype(r.cascade_confusion.counts)>();
}

/// CSV file name -> contents for a set of reports. Fixed formatting keeps
/// the bytes a pure function of the reports.
inline std::map<std::string, std::string> render_csv(const std::vector<run_report> &reports) {
    using detail::num;
    std::map<std::string, std::string> files;
    std::string &summary = files["summary.csv"];
    std::string &levels = files["levels.csv"];
    std::string &trades = files["trades.csv"];
    std::string &conf = files["confusion.csv"];
    std::string &acc = files["accuracy_vs_noise.csv"];
    std::string &sup = files["support_vs_noise.csv"];

    summary = "experiment,family,train_data,test_data,seed,config_hash,units,train_rows,test_rows,base_train_accuracy,base_test_accuracy,"
              "cascade_train_accuracy,cascade_train_support,cascade_test_accuracy,cascade_test_support,base_extremes_fraction,"
              "cascade_extremes_fraction\n";
    levels = "experiment,family,train_data,test_data,level,train_unpruned_fraction,train_accuracy,test_seen,test_answered,test_accuracy,"
             "test_support_share\n";
    trades = "experiment,family,train_data,test_data,model,trades,gain,loss,average_utility,drar,traded_sharpe\n";
    conf = "experiment,family,train_data,test_data,model,truth,pred_0,pred_1,pred_2,pred_3,pred_4\n";
    acc = "experiment,family,sigma,sigma_p,base_test_accuracy,cascade_test_accuracy\n";
    sup = "experiment,family,sigma,sigma_p,cascade_test_support\n";

    for (const run_report &r : reports) {
        const std::string key = fmt::format("{},{},{},{}", r.experiment, detail::family_name(r.family), csv_field(r.train_data), csv_field(r.test_data));
        summary += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", key, r.seed, r.config_hash, r.units, r.train_rows, r.test_rows,
                               num(r.base_train_accuracy), num(r.base_test_accuracy), num(r.cascade_train_accuracy),
                               num(r.cascade_train_support), num(r.cascade_test_accuracy), num(r.cascade_test_support),
                               num(r.base_extremes_fraction()), num(r.cascade_extremes_fraction()));
        for (const level_report &l : r.levels) {
            levels += fmt::format("{},{},{},{},{},{},{},{}\n", key, l.level, num(l.train_unpruned_fraction), num(l.train_accuracy), l.test_seen,
                                  l.test_answered, num(l.test_accuracy), num(l.test_support_share));
        }
        const auto trade_line = [&](const char *model, const trade_report_result &t) {
            trades += fmt::format("{},{},{},{},{},{},{},{}\n", key, model, t.trades, num(t.gain), num(t.loss), num(t.average_utility), num(t.drar),
                                  num(t.traded_sharpe));
        };
        trade_line("base", r.base_trades);
        trade_line("cascade", r.cascade_trades);
        const auto conf_lines = [&](const char *model, const confusion_matrix &m) {
            for (std::size_t t = 0; t < num_classes; ++t) {
                conf += fmt::format("{},{},{},{},{},{},{},{}\n", key, model, t, m.counts[t][0], m.counts[t][1], m.counts[t][2], m.counts[t][3],
                                    m.counts[t][4]);
            }
        };
        conf_lines("base", r.base_confusion);
        conf_lines("cascade", r.cascade_confusion);
        if (r.train_data != "market") {
            const auto prefix = fmt::format("{},{},{:g},{:g}", r.experiment, detail::family_name(r.family), r.noise.sigma, r.noise.sigma_p);
            acc += fmt::format("{},{},{}\n", prefix, num(r.base_test_accuracy), num(r.cascade_test_accuracy));
            sup += fmt::format("{},{}\n", prefix, num(r.cascade_test_support));
        }
    }
    return files;
}

inline void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw data_error("failed writing '" + path.string() + "'");
    }
}

enum class report_format { csv, json, both };

/// Writes the CSV tables and/or report.json into `out_dir`; returns the
/// paths written.
inline std::vector<std::filesystem::path> emit_report(const std::vector<run_report> &reports, report_format format,
                                                      const std::filesystem::path &out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw data_error("cannot create '" + out_dir.string() + "': " + ec.message());
    }
    std::vector<std::filesystem::path> written;
    if (format != report_format::json) {
        for (const auto &[name, text] : render_csv(reports)) {
            write_text(out_dir / name, text);
            written.push_back(out_dir / name);
        }
    }
    if (format != report_format::csv) {
        json j = json::object();
        j["format"] = "conpred-report/1";
        j["reports"] = reports;
        write_text(out_dir / "report.json", j.dump(2) + "\n");
        written.push_back(out_dir / "report.json");
    }
    return written;
}

inline std::vector<run_report> read_report_json(const std::filesystem::path &path) {
    const json j = read_json_file(path);
    try {
        if (j.at("format") != "conpred-report/1") {
            throw data_error("unknown report format in '" + path.string() + "'");
        }
        return j.at("reports").get<std::vector<run_report>>();
    } catch (const json::exception &e) {
        throw data_error(std::string("malformed report: ") + e.what());
    }
}

}  // namespace conpred
