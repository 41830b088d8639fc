#pragma once

// Cascaded selective prediction. Training fits a fresh model per level on
// the rows every earlier level was unsure of; inference answers each row at
// the first level whose prediction is pure enough, or abstains.

#include "conpred/errors.hpp"
#include "conpred/metrics.hpp"
#include "conpred/numerics.hpp"
#include "conpred/random.hpp"

#include <concepts>
#include <type_traits>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace conpred {

struct cascade_config {
    double max_impurity = 0.5;
    int levels = 3;
    std::optional<double> min_level_accuracy;  // off unless set

    void validate() const {
        if (!(max_impurity > 0.0 && max_impurity < 1.0)) {
            throw config_error("max_impurity must lie in (0,1)");
        }
        if (levels < 1) {
            throw config_error("cascade needs at least one level");
        }
        if (min_level_accuracy && !(*min_level_accuracy >= 0.0 && *min_level_accuracy <= 1.0)) {
            throw config_error("min_level_accuracy must lie in [0,1]");
        }
    }

    friend bool operator==(const cascade_config &, const cascade_config &) = default;
};

/// Pruning gate shared by training and inference: confident iff gini <= max.
[[nodiscard]] inline bool confident(const class_distribution &d, double max_impurity) noexcept {
    return gini_impurity(d) <= max_impurity;
}

template <typename Model, typename Row>
concept row_classifier = requires(const Model &m, const Row &r) {
    { m.predict_proba(r) } -> std::convertible_to<class_distribution>;
};

struct level_diagnostics {
    std::vector<std::size_t> train_indices;  // into the original training rows
    std::vector<std::size_t> unpruned_indices;
    std::optional<double> accuracy;          // on its unpruned rows
    double unpruned_fraction = 0.0;          // of the rows this level saw
};

template <typename Model>
struct cascade {
    cascade_config config;
    std::vector<Model> models;
    std::vector<level_diagnostics> diagnostics;

    [[nodiscard]] std::size_t levels() const noexcept { return models.size(); }
};

/// Seed used for the model at `level` (1-based).
[[nodiscard]] inline std::uint64_t level_seed(std::uint64_t seed, int level) noexcept {
    return derive_seed(seed, { stream::level, static_cast<std::uint64_t>(level) });
}

/// `fit(rows, seed)` returns a trained Model. Rows need a `target` member.
template <typename Row, typename Fit>
auto train_cascade(const cascade_config &config, const std::vector<Row> &train_rows, std::uint64_t seed, Fit &&fit) {
    using Model = std::decay_t<decltype(fit(train_rows, seed))>;
    config.validate();
    if (train_rows.empty()) {
        throw empty_train_set_error("cascade training set is empty");
    }

    cascade<Model> out;
    out.config = config;
    std::vector<std::size_t> current(train_rows.size());
    for (std::size_t i = 0; i < current.size(); ++i) {
        current[i] = i;
    }

    for (int level = 1; level <= config.levels && !current.empty(); ++level) {
        std::vector<Row> slice;
        slice.reserve(current.size());
        for (const std::size_t i : current) {
            slice.push_back(train_rows[i]);
        }
        Model model = fit(slice, level_seed(seed, level));

        level_diagnostics diag;
        diag.train_indices = current;
        std::vector<std::size_t> pruned;
        std::size_t correct = 0;
        for (std::size_t k = 0; k < slice.size(); ++k) {
            const class_distribution d = model.predict_proba(slice[k]);
            if (confident(d, config.max_impurity)) {
                diag.unpruned_indices.push_back(current[k]);
                correct += d.argmax() == static_cast<std::size_t>(slice[k].target) ? 1 : 0;
            } else {
                pruned.push_back(current[k]);
            }
        }
        diag.unpruned_fraction = static_cast<double>(diag.unpruned_indices.size()) / static_cast<double>(slice.size());
        if (!diag.unpruned_indices.empty()) {
            diag.accuracy = static_cast<double>(correct) / static_cast<double>(diag.unpruned_indices.size());
        }

        if (level > 1 && config.min_level_accuracy && diag.accuracy && *diag.accuracy < *config.min_level_accuracy) {
            break;
        }
        out.models.push_back(std::move(model));
        out.diagnostics.push_back(std::move(diag));
        current = std::move(pruned);
    }
    return out;
}

struct prediction {
    class_distribution distribution;
    std::size_t cls = 0;
    int level = 0;  // 1-based
};

/// Predicted at some level, or abstained (nullopt).
using outcome = std::optional<prediction>;

template <typename Model, typename Row>
    requires row_classifier<Model, Row>
outcome predict(const cascade<Model> &c, const Row &row) {
    for (std::size_t i = 0; i < c.models.size(); ++i) {
        const class_distribution d = c.models[i].predict_proba(row);
        if (confident(d, c.config.max_impurity)) {
            return prediction{ d, d.argmax(), static_cast<int>(i) + 1 };
        }
    }
    return std::nullopt;
}

struct level_stats {
    std::size_t seen = 0;      // rows that reached this level
    std::size_t answered = 0;  // rows answered here
    std::size_t correct = 0;
    std::optional<double> accuracy;
    double unpruned_fraction = 0.0;  // answered / seen
    double support_share = 0.0;      // answered / total
};

struct cascade_evaluation {
    std::vector<outcome> outcomes;
    std::vector<scored_outcome> scored;
    std::vector<level_stats> levels;
    accuracy_support_result combined;
};

template <typename Model, typename Row>
cascade_evaluation evaluate(const cascade<Model> &c, const std::vector<Row> &rows) {
    cascade_evaluation ev;
    ev.levels.resize(c.models.size());
    ev.outcomes.reserve(rows.size());
    ev.scored.reserve(rows.size());
    for (const Row &r : rows) {
        outcome o = predict(c, r);
        const auto truth = static_cast<std::size_t>(r.target);
        const std::size_t reached = o ? static_cast<std::size_t>(o->level) : c.models.size();
        for (std::size_t l = 0; l < reached; ++l) {
            ++ev.levels[l].seen;
        }
        if (o) {
            auto &ls = ev.levels[static_cast<std::size_t>(o->level) - 1];
            ++ls.answered;
            ls.correct += o->cls == truth ? 1 : 0;
            ev.scored.push_back({ o->cls, truth });
        } else {
            ev.scored.push_back({ std::nullopt, truth });
        }
        ev.outcomes.push_back(std::move(o));
    }
    for (auto &ls : ev.levels) {
        if (ls.answered > 0) {
            ls.accuracy = static_cast<double>(ls.correct) / static_cast<double>(ls.answered);
        }
        if (ls.seen > 0) {
            ls.unpruned_fraction = static_cast<double>(ls.answered) / static_cast<double>(ls.seen);
        }
        if (!rows.empty()) {
            ls.support_share = static_cast<double>(ls.answered) / static_cast<double>(rows.size());
        }
    }
    ev.combined = accuracy_support(ev.scored);
    return ev;
}

/// A single model with no gate: argmax on every row.
template <typename Model, typename Row>
std::vector<scored_outcome> score_ungated(const Model &m, const std::vector<Row> &rows) {
    std::vector<scored_outcome> out;
    out.reserve(rows.size());
    for (const Row &r : rows) {
        out.push_back({ m.predict_proba(r).argmax(), static_cast<std::size_t>(r.target) });
    }
    return out;
}

}  // namespace conpred
