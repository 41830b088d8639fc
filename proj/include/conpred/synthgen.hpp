#pragma once

// Synthetic trading days: noisy sine waves (or straight lines) sampled once
// per minute and aggregated into normalized five-minute candles.

#include "conpred/errors.hpp"
#include "conpred/random.hpp"
#include "conpred/series.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace conpred {

inline constexpr std::size_t samples_per_day = 375;
inline constexpr std::size_t samples_per_candle = 5;
inline constexpr std::size_t candles_per_day = samples_per_day / samples_per_candle;

struct noise_spec {
    double sigma = 0.0;    // base noise std, price units
    double sigma_p = 0.0;  // peak noise std, relative amplitude

    friend bool operator==(const noise_spec &, const noise_spec &) = default;
};

/// The eight (sigma, sigma_p) pairs of the experiment grid, in table order.
inline const std::vector<noise_spec> &noise_grid() {
    static const std::vector<noise_spec> grid{ { 0.0, 0.0 },  { 0.0, 0.05 },  { 0.01, 0.0 },  { 0.01, 0.05 },
                                               { 0.03, 0.0 }, { 0.05, 0.05 }, { 0.075, 0.0 }, { 0.075, 0.05 } };
    return grid;
}

inline std::string noise_label(const noise_spec &n) { return fmt::format("[{:g},{:g}]", n.sigma, n.sigma_p); }

inline std::string synth_filename(const noise_spec &n) { return fmt::format("synth_{:g}_{:g}.csv", n.sigma, n.sigma_p); }

struct wave_spec {
    double amplitude = 0.05;
    int peaks = 1;         // K, the frequency parameter of sin((K+1)/2 pi t)
    bool phase90 = false;  // phase 0 or pi/2
    int direction = 1;     // +1 or -1
    int era = 0;

    [[nodiscard]] double phase() const noexcept { return phase90 ? std::numbers::pi / 2.0 : 0.0; }
    [[nodiscard]] double angular_frequency() const noexcept { return (peaks + 1) * std::numbers::pi / 2.0; }

    friend bool operator==(const wave_spec &, const wave_spec &) = default;
};

struct synth_config {
    double amplitude_min = 0.02;
    double amplitude_max = 0.10;
    int peaks_min = 0;
    int peaks_max = 8;
};

/// Draws the wave for one era from a stream keyed only by (seed, era).
inline wave_spec plan_era(std::uint64_t seed, int era, const synth_config &cfg = {}) {
    if (cfg.amplitude_max < cfg.amplitude_min || cfg.peaks_max < cfg.peaks_min) {
        throw config_error("empty amplitude or peak range");
    }
    rng_engine rng(derive_seed(seed, { stream::wave, static_cast<std::uint64_t>(era) }));
    std::uniform_real_distribution<double> amp(cfg.amplitude_min, cfg.amplitude_max);
    std::uniform_int_distribution<int> peaks(cfg.peaks_min, cfg.peaks_max);
    std::bernoulli_distribution coin(0.5);

    wave_spec w;
    w.era = era;
    w.amplitude = cfg.amplitude_min == cfg.amplitude_max ? cfg.amplitude_min : amp(rng);
    w.peaks = peaks(rng);
    w.phase90 = coin(rng);
    w.direction = coin(rng) ? 1 : -1;
    return w;
}

[[nodiscard]] inline double sample_time(std::size_t j) noexcept {
    return static_cast<double>(j) / static_cast<double>(samples_per_day - 1);
}

/// Half-open sample-index ranges [first, last) between consecutive zero
/// crossings of sin(w t + phase) on t in [0,1]. The day boundaries close
/// the first and last range, so the count follows from the frequency and
/// can differ from `peaks` (sin(2 pi t) for K=3 yields two ranges).
inline std::vector<std::pair<std::size_t, std::size_t>> peak_intervals(const wave_spec &spec) {
    if (spec.peaks < 1) {
        throw config_error("peak_intervals requires peaks >= 1");
    }
    const double w = spec.angular_frequency();
    const double phi = spec.phase();
    std::vector<double> bounds{ 0.0 };
    for (int n = 0;; ++n) {
        const double t = (n * std::numbers::pi - phi) / w;
        if (t >= 1.0 - 1e-12) {
            break;
        }
        if (t > 1e-12) {
            bounds.push_back(t);
        }
    }
    bounds.push_back(1.0);

    std::vector<std::pair<std::size_t, std::size_t>> intervals;
    std::size_t j = 0;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        const bool last = k + 2 == bounds.size();
        const std::size_t first = j;
        while (j < samples_per_day && (last || sample_time(j) < bounds[k + 1])) {
            ++j;
        }
        if (j == first) {
            throw empty_interval_error(fmt::format("peak interval {} of K={} holds no samples", k, spec.peaks));
        }
        intervals.emplace_back(first, j);
    }
    return intervals;
}

/// Raw minute prices. Standard-normal draws come from streams keyed by
/// (seed, era) and are scaled by the noise spec, so different noise levels
/// perturb the same waves with proportional noise.
inline std::vector<double> sample_wave(const wave_spec &spec, const noise_spec &noise, std::uint64_t seed) {
    rng_engine base_rng(derive_seed(seed, { stream::base_noise, static_cast<std::uint64_t>(spec.era) }));
    rng_engine peak_rng(derive_seed(seed, { stream::peak_noise, static_cast<std::uint64_t>(spec.era) }));
    std::normal_distribution<double> unit(0.0, 1.0);

    std::vector<double> f(samples_per_day);
    for (std::size_t j = 0; j < samples_per_day; ++j) {
        f[j] = 1.0 + noise.sigma * unit(base_rng);
    }
    const double dir = spec.direction >= 0 ? 1.0 : -1.0;
    if (spec.peaks == 0) {
        for (std::size_t j = 0; j < samples_per_day; ++j) {
            f[j] += dir * spec.amplitude * sample_time(j);
        }
        return f;
    }
    const double w = spec.angular_frequency();
    const double phi = spec.phase();
    for (const auto &[first, last] : peak_intervals(spec)) {
        const double scale = spec.amplitude * (1.0 + noise.sigma_p * unit(peak_rng));
        for (std::size_t j = first; j < last; ++j) {
            f[j] += dir * scale * std::sin(w * sample_time(j) + phi);
        }
    }
    return f;
}

/// Groups of five samples become one candle; prices are divided by the
/// close of the first candle.
inline era_series to_candles(std::span<const double> prices, int era) {
    if (prices.size() != samples_per_day) {
        throw length_mismatch_error(fmt::format("expected {} prices, got {}", samples_per_day, prices.size()));
    }
    era_series s;
    s.era = era;
    s.candles.reserve(candles_per_day);
    for (std::size_t c = 0; c < candles_per_day; ++c) {
        const auto window = prices.subspan(c * samples_per_candle, samples_per_candle);
        const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
        s.candles.push_back(candle{ window.front(), *hi, *lo, window.back(), 1.0 });
    }
    const double first_close = s.candles.front().close;
    if (first_close == 0.0) {
        throw zero_first_close_error("first candle closes at zero");
    }
    s.first_close_raw = first_close;
    for (candle &cd : s.candles) {
        cd.open /= first_close;
        cd.high /= first_close;
        cd.low /= first_close;
        cd.close /= first_close;
    }
    return s;
}

inline std::vector<era_series> build_dataset(const noise_spec &noise, int eras, std::uint64_t seed, const synth_config &cfg = {},
                                             int first_era = 0) {
    if (eras < 1) {
        throw config_error("build_dataset requires at least one era");
    }
    std::vector<era_series> out;
    out.reserve(static_cast<std::size_t>(eras));
    for (int e = first_era; e < first_era + eras; ++e) {
        const wave_spec w = plan_era(seed, e, cfg);
        out.push_back(to_candles(sample_wave(w, noise, seed), e));
    }
    return out;
}

}  // namespace conpred
