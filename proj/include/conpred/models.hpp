#pragma once

// Differentiable decision tree and multilayer perceptron, both trained by
// mini-batch gradient descent on cross-entropy with closed-form gradients.

#include "conpred/errors.hpp"
#include "conpred/features.hpp"
#include "conpred/numerics.hpp"
#include "conpred/random.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace conpred {

// ---------------------------------------------------------------------------
// Inputs

enum class input_encoding { raw, one_hot };

[[nodiscard]] inline std::size_t encoded_width(std::size_t features, input_encoding enc) noexcept {
    return enc == input_encoding::raw ? features : features * num_bins;
}

inline void encode_row(std::span<const std::uint8_t> bins, input_encoding enc, std::span<double> out) noexcept {
    if (enc == input_encoding::raw) {
        for (std::size_t j = 0; j < bins.size(); ++j) {
            out[j] = static_cast<double>(bins[j]);
        }
        return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < bins.size(); ++j) {
        out[j * num_bins + bins[j]] = 1.0;
    }
}

/// Dense row-major inputs with class labels.
struct encoded_dataset {
    std::size_t cols = 0;
    std::vector<double> x;
    std::vector<std::uint8_t> y;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept { return { x.data() + i * cols, cols }; }
};

inline encoded_dataset encode(const std::vector<feature_row> &rows, input_encoding enc) {
    encoded_dataset d;
    d.cols = rows.empty() ? 0 : encoded_width(rows.front().features.size(), enc);
    d.x.resize(rows.size() * d.cols);
    d.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        encode_row(rows[i].features, enc, { d.x.data() + i * d.cols, d.cols });
        d.y.push_back(rows[i].target);
    }
    return d;
}

/// A subset of rows of an encoded dataset.
struct batch_ref {
    const encoded_dataset *data = nullptr;
    std::span<const std::size_t> indices;
};

inline std::vector<std::size_t> all_indices(const encoded_dataset &d) {
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), std::size_t{ 0 });
    return idx;
}

// ---------------------------------------------------------------------------
// Differentiable decision tree

/// How the leaf mixture p becomes the class distribution. `identity` uses p
/// directly; the softmax variants re-normalize e^{+p} or e^{-p}.
enum class output_head { identity, softmax_standard, softmax_negated };

struct ddt_config {
    int depth = 6;
    double lambda_base = 0.1;
    output_head head = output_head::identity;

    friend bool operator==(const ddt_config &, const ddt_config &) = default;
};

/// Per-sample forward state. Node indices are heap-ordered: inner nodes
/// 0..I-1 (children of i at 2i+1 left, 2i+2 right), leaves I..2I.
struct path_state {
    std::vector<double> z;       // x.w_i + b_i per inner node
    std::vector<double> branch;  // p_i, probability of the right branch
    std::vector<double> path;    // P for every node; root is 1
    std::array<double, num_classes> mixture{};  // sum_l P_l Q_l
};

class ddt {
  public:
    ddt() = default;

    ddt(std::size_t inputs, const ddt_config &cfg, std::uint64_t seed) : inputs_(inputs), cfg_(cfg) {
        if (cfg.depth < 1 || cfg.depth > 16) {
            throw config_error("tree depth must be in 1..16");
        }
        if (cfg.lambda_base < 0) {
            throw config_error("lambda_base must be non-negative");
        }
        inner_ = (std::size_t{ 1 } << cfg.depth) - 1;
        leaves_ = inner_ + 1;
        params_.assign(inner_ * inputs_ + inner_ + leaves_ * num_classes + 1, 0.0);
        rng_engine rng(derive_seed(seed, { stream::init }));
        std::normal_distribution<double> w(0.0, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(inputs_, 1))));
        for (std::size_t k = 0; k < inner_ * inputs_; ++k) {
            params_[k] = w(rng);
        }
        // biases, leaf logits and log-temperature start at zero (T = 1)
    }

    [[nodiscard]] std::size_t inputs() const noexcept { return inputs_; }
    [[nodiscard]] std::size_t inner_nodes() const noexcept { return inner_; }
    [[nodiscard]] std::size_t leaf_count() const noexcept { return leaves_; }
    [[nodiscard]] const ddt_config &config() const noexcept { return cfg_; }
    [[nodiscard]] std::span<double> parameters() noexcept { return params_; }
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
    [[nodiscard]] double temperature() const noexcept { return std::exp(params_.back()); }

    [[nodiscard]] std::span<double> weights(std::size_t node) noexcept { return { params_.data() + node * inputs_, inputs_ }; }
    [[nodiscard]] double &bias(std::size_t node) noexcept { return params_[inner_ * inputs_ + node]; }
    [[nodiscard]] std::span<double> leaf_logits(std::size_t leaf) noexcept {
        return { params_.data() + bias_offset() + inner_ + leaf * num_classes, num_classes };
    }
    double &log_temperature() noexcept { return params_.back(); }

    /// Depth of inner node i (root is 0).
    [[nodiscard]] static int node_depth(std::size_t i) noexcept { return static_cast<int>(std::bit_width(i + 1)) - 1; }

    [[nodiscard]] double node_lambda(std::size_t i) const noexcept { return cfg_.lambda_base * std::ldexp(1.0, -node_depth(i)); }

    void forward(std::span<const double> x, path_state &st) const {
        st.z.resize(inner_);
        st.branch.resize(inner_);
        st.path.assign(inner_ + leaves_, 0.0);
        const double temp = temperature();
        st.path[0] = 1.0;
        for (std::size_t i = 0; i < inner_; ++i) {
            const double *w = params_.data() + i * inputs_;
            double z = params_[bias_offset() + i];
            for (std::size_t j = 0; j < inputs_; ++j) {
                z += w[j] * x[j];
            }
            st.z[i] = z;
            st.branch[i] = sigmoid(temp * z);
            st.path[2 * i + 1] = st.path[i] * (1.0 - st.branch[i]);
            st.path[2 * i + 2] = st.path[i] * st.branch[i];
        }
        st.mixture.fill(0.0);
        for (std::size_t l = 0; l < leaves_; ++l) {
            const auto q = leaf_distribution(l);
            const double pl = st.path[inner_ + l];
            for (std::size_t c = 0; c < num_classes; ++c) {
                st.mixture[c] += pl * q[c];
            }
        }
    }

    /// Leaf class distribution Q_l.
    [[nodiscard]] class_distribution leaf_distribution(std::size_t leaf) const noexcept {
        return softmax5({ params_.data() + bias_offset() + inner_ + leaf * num_classes, num_classes });
    }

    [[nodiscard]] class_distribution head(const std::array<double, num_classes> &mixture) const noexcept {
        switch (cfg_.head) {
        case output_head::softmax_standard:
            return softmax5(mixture, softmax_sign::standard);
        case output_head::softmax_negated:
            return softmax5(mixture, softmax_sign::negated);
        case output_head::identity:
            break;
        }
        return class_distribution{ mixture };
    }

    [[nodiscard]] class_distribution predict_proba(std::span<const double> x) const {
        path_state st;
        forward(x, st);
        return head(st.mixture);
    }

    /// Balanced-split penalty over a batch of forward states.
    [[nodiscard]] double penalty(std::span<const path_state> states) const {
        double total = 0.0;
        for (std::size_t i = 0; i < inner_; ++i) {
            const auto [alpha, mass] = node_alpha(states, i);
            (void) mass;
            const double a = std::clamp(alpha, alpha_clamp, 1.0 - alpha_clamp);
            total -= node_lambda(i) * (0.5 * std::log(a) + 0.5 * std::log(1.0 - a));
        }
        return total;
    }

    /// Mean cross-entropy over the batch plus the balanced-split penalty.
    [[nodiscard]] double loss(const batch_ref &b) const {
        std::vector<path_state> states(b.indices.size());
        double ce = 0.0;
        for (std::size_t k = 0; k < b.indices.size(); ++k) {
            forward(b.data->row(b.indices[k]), states[k]);
            ce += cross_entropy(head(states[k].mixture), b.data->y[b.indices[k]]);
        }
        return ce / static_cast<double>(b.indices.size()) + penalty(states);
    }

    double loss_and_gradient(const batch_ref &b, std::span<double> grad) const {
        std::fill(grad.begin(), grad.end(), 0.0);
        const std::size_t n = b.indices.size();
        std::vector<path_state> states(n);
        double ce = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            forward(b.data->row(b.indices[k]), states[k]);
            ce += cross_entropy(head(states[k].mixture), b.data->y[b.indices[k]]);
        }
        const double pen = penalty(states);

        // dPenalty/dalpha_i together with alpha_i and the path mass S_i.
        std::vector<double> alpha(inner_), mass(inner_), dpen(inner_, 0.0);
        for (std::size_t i = 0; i < inner_; ++i) {
            std::tie(alpha[i], mass[i]) = node_alpha(states, i);
            if (mass[i] > mass_floor && alpha[i] > alpha_clamp && alpha[i] < 1.0 - alpha_clamp) {
                dpen[i] = -node_lambda(i) * 0.5 * (1.0 / alpha[i] - 1.0 / (1.0 - alpha[i]));
            }
        }

        const double temp = temperature();
        const std::size_t leaf_off = bias_offset() + inner_;
        double dtemp = 0.0;
        std::vector<double> g_node(inner_ + leaves_);
        std::vector<class_distribution> leaf_q(leaves_);
        for (std::size_t l = 0; l < leaves_; ++l) {
            leaf_q[l] = leaf_distribution(l);
        }

        for (std::size_t k = 0; k < n; ++k) {
            const path_state &st = states[k];
            const auto x = b.data->row(b.indices[k]);
            const std::size_t y = b.data->y[b.indices[k]];

            // dCE/dmixture, already divided by the batch size
            std::array<double, num_classes> g{};
            const class_distribution out = head(st.mixture);
            if (out[y] > probability_floor) {
                if (cfg_.head == output_head::identity) {
                    g[y] = -1.0 / out[y];
                } else {
                    const double s = cfg_.head == output_head::softmax_standard ? 1.0 : -1.0;
                    for (std::size_t c = 0; c < num_classes; ++c) {
                        g[c] = s * (out[c] - (c == y ? 1.0 : 0.0));
                    }
                }
            }
            for (double &v : g) {
                v /= static_cast<double>(n);
            }

            for (std::size_t l = 0; l < leaves_; ++l) {
                const class_distribution &q = leaf_q[l];
                double h = 0.0;
                for (std::size_t c = 0; c < num_classes; ++c) {
                    h += g[c] * q[c];
                }
                g_node[inner_ + l] = h;
                const double pl = st.path[inner_ + l];
                double *gl = grad.data() + leaf_off + l * num_classes;
                for (std::size_t c = 0; c < num_classes; ++c) {
                    gl[c] += pl * q[c] * (g[c] - h);
                }
            }

            for (std::size_t ii = inner_; ii-- > 0;) {
                const double p = st.branch[ii];
                const double path = st.path[ii];
                const double gl = g_node[2 * ii + 1];
                const double gr = g_node[2 * ii + 2];
                double dp = path * (gr - gl);
                double gi = (1.0 - p) * gl + p * gr;
                if (dpen[ii] != 0.0) {
                    dp += dpen[ii] * path / mass[ii];
                    gi += dpen[ii] * (p - alpha[ii]) / mass[ii];
                }
                g_node[ii] = gi;
                const double dsig = dp * p * (1.0 - p);
                const double dz = dsig * temp;
                dtemp += dsig * st.z[ii];
                double *gw = grad.data() + ii * inputs_;
                for (std::size_t j = 0; j < inputs_; ++j) {
                    gw[j] += dz * x[j];
                }
                grad[bias_offset() + ii] += dz;
            }
        }
        grad.back() = dtemp * temp;  // through T = exp(log T)
        return ce / static_cast<double>(n) + pen;
    }

    friend bool operator==(const ddt &a, const ddt &b) { return a.inputs_ == b.inputs_ && a.cfg_ == b.cfg_ && a.params_ == b.params_; }

  private:
    static constexpr double alpha_clamp = 1e-6;
    static constexpr double mass_floor = 1e-300;

    [[nodiscard]] std::size_t bias_offset() const noexcept { return inner_ * inputs_; }

    // (alpha_i, S_i) with alpha_i = sum P_i p_i / sum P_i; 0.5 for an unvisited node.
    [[nodiscard]] std::pair<double, double> node_alpha(std::span<const path_state> states, std::size_t i) const noexcept {
        double num = 0.0;
        double den = 0.0;
        for (const auto &st : states) {
            num += st.path[i] * st.branch[i];
            den += st.path[i];
        }
        if (den <= mass_floor) {
            return { 0.5, den };
        }
        return { num / den, den };
    }

    std::size_t inputs_ = 0;
    ddt_config cfg_{};
    std::size_t inner_ = 0;
    std::size_t leaves_ = 0;
    std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Multilayer perceptron

enum class activation { relu, tanh };

struct mlp_config {
    std::vector<std::size_t> hidden{ 128, 64, 32 };
    activation act = activation::relu;

    friend bool operator==(const mlp_config &, const mlp_config &) = default;
};

class mlp {
  public:
    mlp() = default;

    mlp(std::size_t inputs, const mlp_config &cfg, std::uint64_t seed) : cfg_(cfg) {
        widths_.push_back(inputs);
        widths_.insert(widths_.end(), cfg.hidden.begin(), cfg.hidden.end());
        widths_.push_back(num_classes);
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            offsets_.push_back(total);
            total += widths_[l + 1] * widths_[l] + widths_[l + 1];
        }
        params_.assign(total, 0.0);

        rng_engine rng(derive_seed(seed, { stream::init }));
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            const bool output = l + 2 == widths_.size();
            const double gain = (!output && cfg.act == activation::relu) ? 2.0 : 1.0;
            std::normal_distribution<double> w(0.0, std::sqrt(gain / static_cast<double>(std::max<std::size_t>(widths_[l], 1))));
            for (std::size_t k = 0; k < widths_[l + 1] * widths_[l]; ++k) {
                params_[offsets_[l] + k] = w(rng);
            }
        }
    }

    [[nodiscard]] std::size_t inputs() const noexcept { return widths_.front(); }
    [[nodiscard]] const mlp_config &config() const noexcept { return cfg_; }
    [[nodiscard]] const std::vector<std::size_t> &widths() const noexcept { return widths_; }
    [[nodiscard]] std::span<double> parameters() noexcept { return params_; }
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
    [[nodiscard]] std::size_t layer_count() const noexcept { return widths_.size() - 1; }

    /// Weights of layer l, row-major (out x in).
    [[nodiscard]] std::span<double> layer_weights(std::size_t l) noexcept { return { params_.data() + offsets_[l], widths_[l + 1] * widths_[l] }; }
    [[nodiscard]] std::span<double> layer_bias(std::size_t l) noexcept {
        return { params_.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1] };
    }

    /// acts[0] = x; acts[l+1] = output of layer l (activated for hidden
    /// layers, raw logits for the last).
    void forward(std::span<const double> x, std::vector<std::vector<double>> &acts) const {
        acts.resize(widths_.size());
        acts[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            const std::size_t in = widths_[l];
            const std::size_t out = widths_[l + 1];
            const double *w = params_.data() + offsets_[l];
            const double *bias = w + out * in;
            auto &a = acts[l + 1];
            a.resize(out);
            const bool hidden = l + 2 < widths_.size();
            for (std::size_t o = 0; o < out; ++o) {
                double s = bias[o];
                const double *wr = w + o * in;
                const double *prev = acts[l].data();
                for (std::size_t i = 0; i < in; ++i) {
                    s += wr[i] * prev[i];
                }
                if (hidden) {
                    s = cfg_.act == activation::relu ? std::max(s, 0.0) : std::tanh(s);
                }
                a[o] = s;
            }
        }
    }

    [[nodiscard]] class_distribution predict_proba(std::span<const double> x) const {
        std::vector<std::vector<double>> acts;
        forward(x, acts);
        return softmax5(acts.back());
    }

    [[nodiscard]] double loss(const batch_ref &b) const {
        std::vector<std::vector<double>> acts;
        double ce = 0.0;
        for (const std::size_t r : b.indices) {
            forward(b.data->row(r), acts);
            ce += cross_entropy(softmax5(acts.back()), b.data->y[r]);
        }
        return ce / static_cast<double>(b.indices.size());
    }

    double loss_and_gradient(const batch_ref &b, std::span<double> grad) const {
        std::fill(grad.begin(), grad.end(), 0.0);
        const double inv_n = 1.0 / static_cast<double>(b.indices.size());
        std::vector<std::vector<double>> acts;
        std::vector<double> delta, prev_delta;
        double ce = 0.0;
        for (const std::size_t r : b.indices) {
            forward(b.data->row(r), acts);
            const std::size_t y = b.data->y[r];
            const class_distribution out = softmax5(acts.back());
            ce += cross_entropy(out, y);

            delta.assign(num_classes, 0.0);
            if (out[y] > probability_floor) {
                for (std::size_t c = 0; c < num_classes; ++c) {
                    delta[c] = (out[c] - (c == y ? 1.0 : 0.0)) * inv_n;
                }
            }
            for (std::size_t l = layer_count(); l-- > 0;) {
                const std::size_t in = widths_[l];
                const std::size_t out_w = widths_[l + 1];
                const double *w = params_.data() + offsets_[l];
                double *gw = grad.data() + offsets_[l];
                double *gb = gw + out_w * in;
                const auto &a_in = acts[l];
                for (std::size_t o = 0; o < out_w; ++o) {
                    const double d = delta[o];
                    gb[o] += d;
                    if (d == 0.0) {
                        continue;
                    }
                    double *gwr = gw + o * in;
                    for (std::size_t i = 0; i < in; ++i) {
                        gwr[i] += d * a_in[i];
                    }
                }
                if (l == 0) {
                    break;
                }
                prev_delta.assign(in, 0.0);
                for (std::size_t o = 0; o < out_w; ++o) {
                    const double d = delta[o];
                    if (d == 0.0) {
                        continue;
                    }
                    const double *wr = w + o * in;
                    for (std::size_t i = 0; i < in; ++i) {
                        prev_delta[i] += d * wr[i];
                    }
                }
                for (std::size_t i = 0; i < in; ++i) {
                    const double a = a_in[i];
                    prev_delta[i] *= cfg_.act == activation::relu ? (a > 0.0 ? 1.0 : 0.0) : (1.0 - a * a);
                }
                delta.swap(prev_delta);
            }
        }
        return ce * inv_n;
    }

    friend bool operator==(const mlp &a, const mlp &b) { return a.widths_ == b.widths_ && a.cfg_ == b.cfg_ && a.params_ == b.params_; }

  private:
    mlp_config cfg_{};
    std::vector<std::size_t> widths_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Training

enum class optimizer_kind { adam, sgd };

struct train_config {
    int epochs = 500;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    optimizer_kind optimizer = optimizer_kind::adam;
    std::uint64_t seed = 0;

    friend bool operator==(const train_config &, const train_config &) = default;
};

/// Mini-batch descent on the model's own objective. Returns the mean
/// training loss of each epoch.
template <typename Model>
std::vector<double> train(Model &model, const encoded_dataset &data, const train_config &cfg) {
    if (data.size() == 0) {
        throw empty_train_set_error("cannot train on an empty dataset");
    }
    if (cfg.batch_size == 0 || !(cfg.learning_rate > 0)) {
        throw config_error("batch size and learning rate must be positive");
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;

    std::span<double> params = model.parameters();
    std::vector<double> grad(params.size()), m(params.size(), 0.0), v(params.size(), 0.0);
    std::vector<std::size_t> order = all_indices(data);
    rng_engine rng(derive_seed(cfg.seed, { stream::shuffle }));
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(std::max(cfg.epochs, 0)));
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const batch_ref b{ &data, std::span<const std::size_t>(order).subspan(start, len) };
            const double l = model.loss_and_gradient(b, grad);
            if (!std::isfinite(l)) {
                throw diverged_loss_error("loss became non-finite at epoch " + std::to_string(epoch));
            }
            epoch_loss += l * static_cast<double>(len);
            ++step;
            if (cfg.optimizer == optimizer_kind::sgd) {
                for (std::size_t k = 0; k < params.size(); ++k) {
                    params[k] -= cfg.learning_rate * grad[k];
                }
                continue;
            }
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < params.size(); ++k) {
                m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
                params[k] -= cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
            }
        }
        trace.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Runtime model selection

enum class model_family { ddt, mlp };

/// Everything needed to build and train one classifier.
struct model_spec {
    model_family family = model_family::ddt;
    ddt_config tree{};
    mlp_config net{};
    input_encoding encoding = input_encoding::raw;
    train_config training{};

    friend bool operator==(const model_spec &, const model_spec &) = default;
};

/// A trained DDT or MLP together with its input encoding.
class classifier {
  public:
    classifier() = default;
    classifier(std::variant<ddt, mlp> model, input_encoding enc) : model_(std::move(model)), encoding_(enc) {}

    [[nodiscard]] class_distribution predict_proba(std::span<const double> x) const {
        return std::visit([&](const auto &m) { return m.predict_proba(x); }, model_);
    }

    [[nodiscard]] class_distribution predict_proba(const feature_row &row) const {
        std::vector<double> x(encoded_width(row.features.size(), encoding_));
        encode_row(row.features, encoding_, x);
        return predict_proba(x);
    }

    [[nodiscard]] input_encoding encoding() const noexcept { return encoding_; }
    [[nodiscard]] const std::variant<ddt, mlp> &model() const noexcept { return model_; }
    [[nodiscard]] std::size_t parameter_count() const {
        return std::visit([](const auto &m) { return m.parameters().size(); }, model_);
    }

    friend bool operator==(const classifier &, const classifier &) = default;

  private:
    std::variant<ddt, mlp> model_;
    input_encoding encoding_ = input_encoding::raw;
};

struct trained_classifier {
    classifier model;
    std::vector<double> loss_trace;
};

/// Fresh model from `spec`, initialized and shuffled from `seed`.
inline trained_classifier fit_classifier(const model_spec &spec, const std::vector<feature_row> &rows, std::uint64_t seed) {
    if (rows.empty()) {
        throw empty_train_set_error("cannot train on an empty dataset");
    }
    const encoded_dataset data = encode(rows, spec.encoding);
    train_config tc = spec.training;
    tc.seed = seed;
    if (spec.family == model_family::ddt) {
        ddt m(data.cols, spec.tree, seed);
        auto trace = train(m, data, tc);
        return { classifier(std::move(m), spec.encoding), std::move(trace) };
    }
    mlp m(data.cols, spec.net, seed);
    auto trace = train(m, data, tc);
    return { classifier(std::move(m), spec.encoding), std::move(trace) };
}

}  // namespace conpred
