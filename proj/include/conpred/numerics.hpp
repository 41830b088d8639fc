#pragma once

#include "conpred/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace conpred {

inline constexpr std::size_t num_classes = 5;

/// Probability floor applied before every log.
inline constexpr double probability_floor = 1e-12;

/// Probability vector over the five target classes.
struct class_distribution {
    std::array<double, num_classes> probs{};

    [[nodiscard]] static class_distribution uniform() noexcept {
        class_distribution d;
        d.probs.fill(1.0 / static_cast<double>(num_classes));
        return d;
    }

    [[nodiscard]] static class_distribution one_hot(std::size_t c) noexcept {
        class_distribution d;
        d.probs[c] = 1.0;
        return d;
    }

    double &operator[](std::size_t c) noexcept { return probs[c]; }
    double operator[](std::size_t c) const noexcept { return probs[c]; }

    /// First index of the largest probability.
    [[nodiscard]] std::size_t argmax() const noexcept {
        return static_cast<std::size_t>(std::distance(probs.begin(), std::max_element(probs.begin(), probs.end())));
    }

    [[nodiscard]] bool valid(double tol = 1e-6) const noexcept {
        double sum = 0.0;
        for (const double p : probs) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                return false;
            }
            sum += p;
        }
        return std::abs(sum - 1.0) <= tol;
    }

    friend bool operator==(const class_distribution &, const class_distribution &) = default;
};

enum class softmax_sign { standard, negated };

[[nodiscard]] inline double sigmoid(double z) noexcept {
    // Branch on sign so exp never sees a large positive argument.
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Softmax over any number of logits, stabilized by max-subtraction.
/// `negated` computes e^{-z_c} / sum e^{-z_c'}.
inline void softmax(std::span<const double> logits, std::span<double> out, softmax_sign sign = softmax_sign::standard) noexcept {
    const double s = sign == softmax_sign::standard ? 1.0 : -1.0;
    double top = -HUGE_VAL;
    for (const double z : logits) {
        top = std::max(top, s * z);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(s * logits[i] - top);
        sum += out[i];
    }
    for (double &v : out.first(logits.size())) {
        v /= sum;
    }
}

[[nodiscard]] inline std::vector<double> softmax(std::span<const double> logits, softmax_sign sign = softmax_sign::standard) {
    std::vector<double> out(logits.size());
    softmax(logits, out, sign);
    return out;
}

[[nodiscard]] inline class_distribution softmax5(std::span<const double> logits, softmax_sign sign = softmax_sign::standard) noexcept {
    class_distribution d;
    softmax(logits.first(num_classes), d.probs, sign);
    return d;
}

[[nodiscard]] inline double cross_entropy(const class_distribution &predicted, std::size_t target_class) noexcept {
    return -std::log(std::max(predicted[target_class], probability_floor));
}

[[nodiscard]] inline double gini_impurity(std::span<const double> probs) noexcept {
    double sq = 0.0;
    for (const double p : probs) {
        sq += p * p;
    }
    return 1.0 - sq;
}

[[nodiscard]] inline double gini_impurity(const class_distribution &dist) noexcept {
    return gini_impurity(std::span<const double>(dist.probs));
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking

struct grad_check_report {
    double max_relative_error = 0.0;
    std::size_t worst_parameter_index = 0;
    bool passed = false;
};

/// Anything with a flat mutable parameter vector, a scalar loss, and an
/// analytic gradient of that loss.
template <typename Model, typename Batch>
concept differentiable = requires(Model &m, const Model &cm, const Batch &b, std::span<double> g) {
    { m.parameters() } -> std::convertible_to<std::span<double>>;
    { cm.loss(b) } -> std::convertible_to<double>;
    { cm.loss_and_gradient(b, g) } -> std::convertible_to<double>;
};

/// Central differences over every parameter. Relative error uses
/// max(1, |analytic|, |numeric|) as the denominator.
template <typename Model, typename Batch>
    requires differentiable<Model, Batch>
grad_check_report grad_check(Model &model, const Batch &batch, double epsilon, double tolerance) {
    std::span<double> params = model.parameters();
    std::vector<double> analytic(params.size(), 0.0);
    model.loss_and_gradient(batch, analytic);

    grad_check_report report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + epsilon;
        const double up = model.loss(batch);
        params[i] = saved - epsilon;
        const double down = model.loss(batch);
        params[i] = saved;

        const double numeric = (up - down) / (2.0 * epsilon);
        if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
            throw non_finite_gradient_error("non-finite gradient at parameter " + std::to_string(i));
        }
        const double denom = std::max({ 1.0, std::abs(analytic[i]), std::abs(numeric) });
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_parameter_index = i;
        }
    }
    report.passed = report.max_relative_error <= tolerance;
    return report;
}

}  // namespace conpred
