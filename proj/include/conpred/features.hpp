#pragma once

// Technical, logical and temporal features over normalized candles, the
// 10-candle-ahead target, and 5-bin percentile discretization.

#include "conpred/csv.hpp"
#include "conpred/errors.hpp"
#include "conpred/numerics.hpp"
#include "conpred/series.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace conpred {

inline constexpr double missing = std::numeric_limits<double>::quiet_NaN();
inline constexpr std::size_t num_bins = 5;
inline constexpr std::size_t num_cuts = num_bins - 1;

struct feature_spec {
    std::vector<std::size_t> price_ma_windows{ 10, 20 };
    std::vector<std::size_t> volume_ma_windows{ 10, 20 };
    std::size_t rsi_period = 14;
    std::size_t macd_fast = 12;
    std::size_t macd_slow = 26;
    std::size_t macd_signal = 9;
    std::size_t bollinger_window = 20;
    double bollinger_width = 2.0;
    std::vector<std::size_t> slope_windows{ 3, 5, 10 };
    std::size_t target_horizon = 10;
    bool ema_sma_seed = true;  // false: seed each EMA with its first input
    std::set<std::string> change_length_exclude;
};

/// Named real-valued columns for one series; NaN marks warm-up positions.
struct column_set {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    void add(std::string name, std::vector<double> values) {
        names.push_back(std::move(name));
        columns.push_back(std::move(values));
    }

    [[nodiscard]] const std::vector<double> &operator[](std::string_view name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) {
            throw config_error("unknown column '" + std::string(name) + "'");
        }
        return columns[static_cast<std::size_t>(it - names.begin())];
    }
};

namespace detail {

inline std::vector<double> sma(std::span<const double> x, std::size_t w) {
    std::vector<double> out(x.size(), missing);
    for (std::size_t t = w == 0 ? 0 : w - 1; t < x.size(); ++t) {
        double s = 0.0;
        for (std::size_t k = t + 1 - w; k <= t; ++k) {
            s += x[k];
        }
        out[t] = s / static_cast<double>(w);
    }
    return out;
}

// EMA seeded with the simple mean of its first n defined inputs, or with
// its first defined input.
inline std::vector<double> ema(std::span<const double> x, std::size_t n, bool sma_seed = true) {
    std::vector<double> out(x.size(), missing);
    const double alpha = 2.0 / (static_cast<double>(n) + 1.0);
    std::size_t seen = 0;
    double acc = 0.0;
    double prev = missing;
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (std::isnan(x[t])) {
            continue;
        }
        if (!sma_seed && seen == 0) {
            seen = n;
            prev = x[t];
            out[t] = prev;
            continue;
        }
        if (seen < n) {
            acc += x[t];
            if (++seen == n) {
                prev = acc / static_cast<double>(n);
                out[t] = prev;
            }
            continue;
        }
        prev = alpha * x[t] + (1.0 - alpha) * prev;
        out[t] = prev;
    }
    return out;
}

inline std::vector<double> rsi(std::span<const double> close, std::size_t period) {
    std::vector<double> out(close.size(), missing);
    if (close.size() <= period) {
        return out;
    }
    double gain = 0.0;
    double loss = 0.0;
    for (std::size_t t = 1; t <= period; ++t) {
        const double d = close[t] - close[t - 1];
        gain += std::max(d, 0.0);
        loss += std::max(-d, 0.0);
    }
    gain /= static_cast<double>(period);
    loss /= static_cast<double>(period);
    const auto value = [](double g, double l) {
        if (l == 0.0) {
            return g == 0.0 ? 50.0 : 100.0;
        }
        return 100.0 - 100.0 / (1.0 + g / l);
    };
    out[period] = value(gain, loss);
    const double n = static_cast<double>(period);
    for (std::size_t t = period + 1; t < close.size(); ++t) {
        const double d = close[t] - close[t - 1];
        gain = (gain * (n - 1.0) + std::max(d, 0.0)) / n;
        loss = (loss * (n - 1.0) + std::max(-d, 0.0)) / n;
        out[t] = value(gain, loss);
    }
    return out;
}

}  // namespace detail

/// Least-squares slope of the trailing `w` values ending at each index.
inline std::vector<double> trailing_slope(std::span<const double> x, std::size_t w) {
    std::vector<double> out(x.size(), missing);
    if (w < 2) {
        return out;
    }
    const double n = static_cast<double>(w);
    const double xbar = (n - 1.0) / 2.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
        sxx += (static_cast<double>(k) - xbar) * (static_cast<double>(k) - xbar);
    }
    for (std::size_t t = w - 1; t < x.size(); ++t) {
        double sxy = 0.0;
        for (std::size_t k = 0; k < w; ++k) {
            sxy += (static_cast<double>(k) - xbar) * x[t + 1 - w + k];
        }
        out[t] = sxy / sxx;
    }
    return out;
}

/// OHLCV base columns plus moving averages, RSI, MACD and Bollinger bands.
inline column_set compute_indicators(const era_series &series, const feature_spec &spec = {}) {
    const std::size_t n = series.candles.size();
    std::vector<double> open(n), high(n), low(n), close(n), volume(n);
    for (std::size_t t = 0; t < n; ++t) {
        const candle &c = series.candles[t];
        open[t] = c.open;
        high[t] = c.high;
        low[t] = c.low;
        close[t] = c.close;
        volume[t] = c.volume;
    }

    column_set cs;
    for (const std::size_t w : spec.price_ma_windows) {
        cs.add(fmt::format("sma_close_{}", w), detail::sma(close, w));
    }
    for (const std::size_t w : spec.volume_ma_windows) {
        cs.add(fmt::format("sma_volume_{}", w), detail::sma(volume, w));
    }
    cs.add(fmt::format("rsi_{}", spec.rsi_period), detail::rsi(close, spec.rsi_period));

    const auto fast = detail::ema(close, spec.macd_fast, spec.ema_sma_seed);
    const auto slow = detail::ema(close, spec.macd_slow, spec.ema_sma_seed);
    std::vector<double> macd(n, missing);
    for (std::size_t t = 0; t < n; ++t) {
        macd[t] = fast[t] - slow[t];  // NaN propagates through warm-up
    }
    const auto signal = detail::ema(macd, spec.macd_signal, spec.ema_sma_seed);
    std::vector<double> hist(n, missing);
    for (std::size_t t = 0; t < n; ++t) {
        hist[t] = macd[t] - signal[t];
    }
    cs.add("macd", macd);
    cs.add("macd_signal", signal);
    cs.add("macd_hist", std::move(hist));

    const std::size_t bw = spec.bollinger_window;
    const auto mid = detail::sma(close, bw);
    std::vector<double> upper(n, missing), lower(n, missing), pctb(n, missing);
    for (std::size_t t = 0; t < n; ++t) {
        if (std::isnan(mid[t])) {
            continue;
        }
        double var = 0.0;
        for (std::size_t k = t + 1 - bw; k <= t; ++k) {
            var += (close[k] - mid[t]) * (close[k] - mid[t]);
        }
        const double sd = std::sqrt(var / static_cast<double>(bw));
        upper[t] = mid[t] + spec.bollinger_width * sd;
        lower[t] = mid[t] - spec.bollinger_width * sd;
        pctb[t] = upper[t] > lower[t] ? (close[t] - lower[t]) / (upper[t] - lower[t]) : 0.5;
    }
    cs.add("bb_upper", std::move(upper));
    cs.add("bb_lower", std::move(lower));
    cs.add("bb_pctb", std::move(pctb));

    // Base columns go first in the final layout.
    column_set out;
    out.add("open", std::move(open));
    out.add("high", std::move(high));
    out.add("low", std::move(low));
    out.add("close", std::move(close));
    out.add("volume", std::move(volume));
    for (std::size_t i = 0; i < cs.names.size(); ++i) {
        out.add(cs.names[i], std::move(cs.columns[i]));
    }
    return out;
}

/// open-close, high-low, the difference of the two price moving averages,
/// and trailing close slopes.
inline column_set compute_logical(const column_set &indicators, const feature_spec &spec = {}) {
    const auto &open = indicators["open"];
    const auto &close = indicators["close"];
    const auto &high = indicators["high"];
    const auto &low = indicators["low"];
    const std::size_t n = close.size();

    column_set cs;
    std::vector<double> oc(n), hl(n);
    for (std::size_t t = 0; t < n; ++t) {
        oc[t] = open[t] - close[t];
        hl[t] = high[t] - low[t];
    }
    cs.add("open_close", std::move(oc));
    cs.add("high_low", std::move(hl));
    if (spec.price_ma_windows.size() >= 2) {
        const std::size_t short_w = spec.price_ma_windows[0];
        const std::size_t long_w = spec.price_ma_windows[1];
        const auto &s = indicators[fmt::format("sma_close_{}", short_w)];
        const auto &l = indicators[fmt::format("sma_close_{}", long_w)];
        std::vector<double> diff(n);
        for (std::size_t t = 0; t < n; ++t) {
            diff[t] = l[t] - s[t];
        }
        cs.add(fmt::format("sma{}_sma{}", long_w, short_w), std::move(diff));
    }
    for (const std::size_t w : spec.slope_windows) {
        cs.add(fmt::format("slope_{}", w), trailing_slope(close, w));
    }
    return cs;
}

/// Signed length of the strictly monotone run ending at each index.
inline std::vector<int> change_length(std::span<const double> x) {
    std::vector<int> out(x.size(), 0);
    for (std::size_t t = 1; t < x.size(); ++t) {
        if (std::isnan(x[t]) || std::isnan(x[t - 1])) {
            continue;
        }
        if (x[t] > x[t - 1]) {
            out[t] = out[t - 1] > 0 ? out[t - 1] + 1 : 1;
        } else if (x[t] < x[t - 1]) {
            out[t] = out[t - 1] < 0 ? out[t - 1] - 1 : -1;
        }
    }
    return out;
}

/// close(t + horizon) - close(t); NaN where the horizon runs past the series.
inline std::vector<double> compute_target(const era_series &series, std::size_t horizon = 10) {
    const std::size_t n = series.candles.size();
    std::vector<double> out(n, missing);
    for (std::size_t t = 0; t + horizon < n; ++t) {
        out[t] = series.candles[t + horizon].close - series.candles[t].close;
    }
    return out;
}

/// Every feature column for one series in final layout: base, indicators,
/// logical, then change-lengths.
inline column_set compute_feature_columns(const era_series &series, const feature_spec &spec = {}) {
    column_set all = compute_indicators(series, spec);
    column_set logical = compute_logical(all, spec);
    for (std::size_t i = 0; i < logical.names.size(); ++i) {
        all.add(logical.names[i], std::move(logical.columns[i]));
    }
    const std::size_t numeric = all.names.size();
    for (std::size_t i = 0; i < numeric; ++i) {
        if (spec.change_length_exclude.contains(all.names[i])) {
            continue;
        }
        const auto cl = change_length(all.columns[i]);
        all.add("cl_" + all.names[i], std::vector<double>(cl.begin(), cl.end()));
    }
    return all;
}

struct raw_row {
    int era = 0;
    int t = 0;
    std::vector<double> values;
    double target = 0.0;
};

struct raw_feature_table {
    std::vector<std::string> names;
    std::vector<raw_row> rows;
};

/// Real-valued feature rows for every candle with complete features and a
/// full target horizon.
inline raw_feature_table build_feature_table(const std::vector<era_series> &series, const feature_spec &spec = {}) {
    raw_feature_table table;
    for (const era_series &s : series) {
        const column_set cols = compute_feature_columns(s, spec);
        const auto target = compute_target(s, spec.target_horizon);
        if (table.names.empty()) {
            table.names = cols.names;
        }
        for (std::size_t t = 0; t < s.candles.size(); ++t) {
            if (std::isnan(target[t])) {
                continue;
            }
            raw_row row{ s.era, static_cast<int>(t), {}, target[t] };
            row.values.reserve(cols.columns.size());
            bool complete = true;
            for (const auto &col : cols.columns) {
                complete = complete && !std::isnan(col[t]);
                row.values.push_back(col[t]);
            }
            if (complete) {
                table.rows.push_back(std::move(row));
            }
        }
    }
    if (table.names.empty()) {
        table.names = compute_feature_columns(era_series{}, spec).names;
    }
    return table;
}

// ---------------------------------------------------------------------------
// Discretization

struct bin_thresholds {
    std::vector<std::string> names;  // feature columns
    std::vector<std::array<double, num_cuts>> cuts;
    std::array<double, num_cuts> target_cuts{};
};

/// Cuts between the order statistics at each 20% boundary, so values equal
/// to a cut fall into the lower bin and each bin of continuous data holds
/// n/5 rows rounded either way.
inline std::array<double, num_cuts> percentile_cuts(std::vector<double> values) {
    const std::size_t n = values.size();
    if (n < num_bins) {
        throw insufficient_reference_error("need at least " + std::to_string(num_bins) + " reference values, got " + std::to_string(n));
    }
    std::sort(values.begin(), values.end());
    std::array<double, num_cuts> cuts{};
    for (std::size_t k = 1; k <= num_cuts; ++k) {
        const std::size_t m = k * n / num_bins;  // count at or below the cut
        cuts[k - 1] = values[m - 1] == values[m] ? values[m - 1] : 0.5 * (values[m - 1] + values[m]);
    }
    return cuts;
}

inline bin_thresholds fit_bins(const raw_feature_table &reference) {
    bin_thresholds th;
    th.names = reference.names;
    std::vector<double> column(reference.rows.size());
    for (std::size_t j = 0; j < reference.names.size(); ++j) {
        for (std::size_t r = 0; r < reference.rows.size(); ++r) {
            column[r] = reference.rows[r].values[j];
        }
        th.cuts.push_back(percentile_cuts(column));
    }
    for (std::size_t r = 0; r < reference.rows.size(); ++r) {
        column[r] = reference.rows[r].target;
    }
    th.target_cuts = percentile_cuts(column);
    return th;
}

/// bin 0 iff v <= c1, bin k iff c_k < v <= c_{k+1}, bin 4 iff v > c4.
[[nodiscard]] inline std::uint8_t bin_of(double v, const std::array<double, num_cuts> &cuts) noexcept {
    std::uint8_t b = 0;
    while (b < num_cuts && v > cuts[b]) {
        ++b;
    }
    return b;
}

struct feature_row {
    int era = 0;
    int t = 0;
    std::vector<std::uint8_t> features;
    std::uint8_t target = 0;

    friend bool operator==(const feature_row &, const feature_row &) = default;
};

inline std::vector<feature_row> apply_bins(const raw_feature_table &table, const bin_thresholds &th) {
    if (table.names != th.names) {
        throw config_error("feature columns do not match the fitted thresholds");
    }
    std::vector<feature_row> out;
    out.reserve(table.rows.size());
    for (const raw_row &r : table.rows) {
        feature_row fr{ r.era, r.t, std::vector<std::uint8_t>(r.values.size()), bin_of(r.target, th.target_cuts) };
        for (std::size_t j = 0; j < r.values.size(); ++j) {
            fr.features[j] = bin_of(r.values[j], th.cuts[j]);
        }
        out.push_back(std::move(fr));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline void write_bins_csv(const std::string &path, const bin_thresholds &th) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot open '" + path + "' for writing");
    }
    out << "feature,c1,c2,c3,c4\n";
    const auto line = [&](const std::string &name, const std::array<double, num_cuts> &c) {
        out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", name, c[0], c[1], c[2], c[3]);
    };
    for (std::size_t j = 0; j < th.names.size(); ++j) {
        line(th.names[j], th.cuts[j]);
    }
    line("target", th.target_cuts);
}

inline bin_thresholds read_bins_csv(const std::string &path) {
    const csv_table table = read_csv(path);
    const std::size_t f = table.column("feature");
    const std::array<std::size_t, num_cuts> cols{ table.column("c1"), table.column("c2"), table.column("c3"), table.column("c4") };
    bin_thresholds th;
    bool have_target = false;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::array<double, num_cuts> c{};
        for (std::size_t k = 0; k < num_cuts; ++k) {
            c[k] = parse_double(table.rows[r][cols[k]], table.line_of(r), "cut");
        }
        if (table.rows[r][f] == "target") {
            th.target_cuts = c;
            have_target = true;
        } else {
            th.names.push_back(table.rows[r][f]);
            th.cuts.push_back(c);
        }
    }
    if (!have_target) {
        throw parse_error(1, "bins file has no target row");
    }
    return th;
}

inline void write_features_csv(const std::string &path, const std::vector<std::string> &names, const std::vector<feature_row> &rows) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot open '" + path + "' for writing");
    }
    out << "era,t";
    for (const auto &n : names) {
        out << ',' << n;
    }
    out << ",target\n";
    for (const auto &r : rows) {
        out << r.era << ',' << r.t;
        for (const auto v : r.features) {
            out << ',' << static_cast<int>(v);
        }
        out << ',' << static_cast<int>(r.target) << '\n';
    }
}

struct feature_file {
    std::vector<std::string> names;
    std::vector<feature_row> rows;
};

inline feature_file read_features_csv(const std::string &path) {
    const csv_table table = read_csv(path);
    if (table.header.size() < 3 || table.header.front() != "era" || table.header[1] != "t" || table.header.back() != "target") {
        throw parse_error(1, "feature header must be era,t,<features...>,target");
    }
    feature_file ff;
    ff.names.assign(table.header.begin() + 2, table.header.end() - 1);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &row = table.rows[r];
        const std::size_t line = table.line_of(r);
        const auto to_bin = [&](const std::string &s) {
            const long v = parse_long(s, line, "bin");
            if (v < 0 || v >= static_cast<long>(num_bins)) {
                throw parse_error(line, "bin out of range '" + s + "'");
            }
            return static_cast<std::uint8_t>(v);
        };
        feature_row fr;
        fr.era = static_cast<int>(parse_long(row[0], line, "era"));
        fr.t = static_cast<int>(parse_long(row[1], line, "t"));
        for (std::size_t j = 2; j + 1 < row.size(); ++j) {
            fr.features.push_back(to_bin(row[j]));
        }
        fr.target = to_bin(row.back());
        ff.rows.push_back(std::move(fr));
    }
    return ff;
}

}  // namespace conpred
