#pragma once

// Shared fixtures and oracles for the test suites. Nothing here calls the
// library code it is used to check.

#include "conpred/features.hpp"
#include "conpred/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

/// Random real-valued inputs in [-1, 1] with labels in 0..4.
inline conpred::encoded_dataset random_dataset(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> cls(0, 4);
    conpred::encoded_dataset d;
    d.cols = cols;
    for (std::size_t i = 0; i < rows * cols; ++i) {
        d.x.push_back(u(rng));
    }
    for (std::size_t i = 0; i < rows; ++i) {
        d.y.push_back(static_cast<std::uint8_t>(cls(rng)));
    }
    return d;
}

/// Perturbs every parameter so biases, leaves and temperature are not at
/// their symmetric initial values.
template <typename Model>
void jitter(Model &m, std::uint64_t seed, double scale = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    for (double &p : m.parameters()) {
        p += n(rng);
    }
}

/// Central differences computed directly from model.loss.
template <typename Model, typename Batch>
std::vector<double> numeric_gradient(Model &m, const Batch &b, double eps) {
    auto params = m.parameters();
    std::vector<double> g(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + eps;
        const double up = m.loss(b);
        params[i] = keep - eps;
        const double down = m.loss(b);
        params[i] = keep;
        g[i] = (up - down) / (2 * eps);
    }
    return g;
}

/// |a - n| / max(|a|, |n|), with an absolute floor for near-zero entries.
inline double relative_error(double a, double n) {
    const double scale = std::max(std::abs(a), std::abs(n));
    if (scale < 1e-7) {
        return std::abs(a - n) / 1e-7;
    }
    return std::abs(a - n) / scale;
}

/// Largest relative gap between the analytic gradient on all rows of `d`
/// and central differences.
template <typename Model>
double worst_gradient_error(Model &m, const conpred::encoded_dataset &d) {
    const auto idx = conpred::all_indices(d);
    const conpred::batch_ref b{ &d, idx };
    std::vector<double> analytic(m.parameters().size());
    m.loss_and_gradient(b, analytic);
    const auto numeric = numeric_gradient(m, b, 1e-6);
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        worst = std::max(worst, relative_error(analytic[i], numeric[i]));
    }
    return worst;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Probability of reaching leaf `leaf` in a full tree of `depth`, by walking
/// its root-to-leaf bit pattern.
inline double leaf_path_probability(const std::vector<double> &right_prob, int depth, std::size_t leaf) {
    double p = 1.0;
    std::size_t node = 0;
    for (int d = depth - 1; d >= 0; --d) {
        const bool right = (leaf >> d) & 1U;
        p *= right ? right_prob[node] : 1.0 - right_prob[node];
        node = 2 * node + (right ? 2 : 1);
    }
    return p;
}

inline std::vector<double> softmax(const std::vector<double> &z) {
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> e(z.size());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        e[i] = std::exp(z[i] - m);
        s += e[i];
    }
    for (double &v : e) {
        v /= s;
    }
    return e;
}

/// Gini impurity 1 - sum p^2.
inline double gini(const std::vector<double> &p) {
    double s = 0.0;
    for (const double v : p) {
        s += v * v;
    }
    return 1.0 - s;
}

inline std::filesystem::path temp_dir(const std::string &name) {
    auto dir = std::filesystem::temp_directory_path() / ("conpred_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

inline void write_file(const std::filesystem::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Feature rows with `features` columns, `per_era` rows per era.
inline std::vector<conpred::feature_row> synthetic_rows(int eras, int per_era, std::size_t features, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> bin(0, 4);
    std::vector<conpred::feature_row> rows;
    for (int e = 0; e < eras; ++e) {
        for (int t = 0; t < per_era; ++t) {
            conpred::feature_row r;
            r.era = e;
            r.t = t;
            for (std::size_t j = 0; j < features; ++j) {
                r.features.push_back(static_cast<std::uint8_t>(bin(rng)));
            }
            r.target = static_cast<std::uint8_t>(bin(rng));
            rows.push_back(r);
        }
    }
    return rows;
}

}  // namespace testing_support
