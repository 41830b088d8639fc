#pragma once

#include "conpred/numerics.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace conpred {

/// A prediction (or abstention) paired with its ground-truth class.
struct scored_outcome {
    std::optional<std::size_t> predicted;  // nullopt = abstained
    std::size_t truth = 0;
};

/// Rows are ground truth, columns are predictions.
struct confusion_matrix {
    std::array<std::array<long, num_classes>, num_classes> counts{};

    [[nodiscard]] long total() const noexcept {
        long t = 0;
        for (const auto &row : counts) {
            for (const long c : row) {
                t += c;
            }
        }
        return t;
    }

    /// Fraction of scored predictions in the given predicted class.
    [[nodiscard]] double predicted_fraction(std::size_t cls) const noexcept {
        const long t = total();
        if (t == 0) {
            return 0.0;
        }
        long col = 0;
        for (const auto &row : counts) {
            col += row[cls];
        }
        return static_cast<double>(col) / static_cast<double>(t);
    }

    friend bool operator==(const confusion_matrix &, const confusion_matrix &) = default;
};

inline confusion_matrix confusion(std::span<const scored_outcome> outcomes) {
    confusion_matrix m;
    for (const auto &o : outcomes) {
        if (o.predicted) {
            ++m.counts[o.truth][*o.predicted];
        }
    }
    return m;
}

struct accuracy_support_result {
    std::optional<double> accuracy;  // absent when nothing was predicted
    double support = 0.0;
    std::size_t predicted = 0;
    std::size_t correct = 0;
    std::size_t total = 0;
};

inline accuracy_support_result accuracy_support(std::span<const scored_outcome> outcomes) {
    accuracy_support_result r;
    r.total = outcomes.size();
    for (const auto &o : outcomes) {
        if (o.predicted) {
            ++r.predicted;
            r.correct += *o.predicted == o.truth ? 1 : 0;
        }
    }
    if (r.total > 0) {
        r.support = static_cast<double>(r.predicted) / static_cast<double>(r.total);
    }
    if (r.predicted > 0) {
        r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.predicted);
    }
    return r;
}

/// Utility of acting on a class-0 (short) or class-4 (long) prediction;
/// nullopt for the non-actionable classes 1-3.
[[nodiscard]] inline std::optional<int> utility(std::size_t predicted, std::size_t truth) noexcept {
    constexpr std::array<int, num_classes> short_table{ 2, 1, 0, -1, -2 };
    if (predicted == 0) {
        return short_table[truth];
    }
    if (predicted == num_classes - 1) {
        return short_table[num_classes - 1 - truth];
    }
    return std::nullopt;
}

/// Downside-risk-adjusted return (gain - loss) / loss; +inf when there is
/// gain but no loss, absent when both are zero.
[[nodiscard]] inline std::optional<double> drar(double gain, double loss) noexcept {
    if (loss == 0.0) {
        if (gain == 0.0) {
            return std::nullopt;
        }
        return std::numeric_limits<double>::infinity();
    }
    return (gain - loss) / loss;
}

struct trade_report_result {
    double gain = 0.0;
    double loss = 0.0;
    std::size_t trades = 0;
    std::optional<double> average_utility;
    std::optional<double> drar;
    std::optional<double> traded_sharpe;
};

/// Utility statistics over actionable (class 0 or 4) predictions. Traded
/// Sharpe divides the average by the population standard deviation of the
/// per-trade utilities.
inline trade_report_result trade_report(std::span<const scored_outcome> outcomes) {
    trade_report_result r;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto &o : outcomes) {
        if (!o.predicted) {
            continue;
        }
        const auto u = utility(*o.predicted, o.truth);
        if (!u) {
            continue;
        }
        ++r.trades;
        if (*u > 0) {
            r.gain += *u;
        } else {
            r.loss -= *u;
        }
        sum += *u;
        sum_sq += static_cast<double>(*u) * *u;
    }
    if (r.trades == 0) {
        return r;
    }
    const double n = static_cast<double>(r.trades);
    r.average_utility = (r.gain - r.loss) / n;
    r.drar = drar(r.gain, r.loss);
    const double mean = sum / n;
    const double var = std::max(sum_sq / n - mean * mean, 0.0);
    if (var > 1e-24) {
        r.traded_sharpe = *r.average_utility / std::sqrt(var);
    }
    return r;
}

}  // namespace conpred
