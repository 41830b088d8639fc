#pragma once

#include "conpred/csv.hpp"
#include "conpred/errors.hpp"
#include "conpred/series.hpp"

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace conpred {

struct raw_candle {
    std::string time;  // HH:MM[:SS], compared lexicographically
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;
};

struct raw_day_record {
    std::string ticker;
    std::chrono::sys_days date{};
    std::vector<raw_candle> candles;
};

using volume_baseline = std::map<std::string, double>;

inline constexpr std::size_t full_session_candles = 75;

inline std::chrono::sys_days parse_date(std::string_view s, std::size_t line) {
    // YYYY-MM-DD
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw parse_error(line, "bad date '" + std::string(s) + "'");
    }
    const long y = parse_long(s.substr(0, 4), line, "year");
    const long m = parse_long(s.substr(5, 2), line, "month");
    const long d = parse_long(s.substr(8, 2), line, "day");
    const std::chrono::year_month_day ymd{ std::chrono::year(static_cast<int>(y)), std::chrono::month(static_cast<unsigned>(m)),
                                           std::chrono::day(static_cast<unsigned>(d)) };
    if (!ymd.ok()) {
        throw parse_error(line, "invalid date '" + std::string(s) + "'");
    }
    return std::chrono::sys_days(ymd);
}

inline std::vector<raw_day_record> parse_ohlcv_csv(std::istream &in) {
    const csv_table table = parse_csv(in);
    if (table.rows.empty()) {
        throw empty_file_error("OHLCV file has no data rows");
    }
    const std::size_t tk = table.column("ticker");
    const std::size_t dt = table.column("date");
    const std::size_t tm = table.column("time");
    const std::size_t o = table.column("open");
    const std::size_t h = table.column("high");
    const std::size_t l = table.column("low");
    const std::size_t c = table.column("close");
    const std::size_t v = table.column("volume");

    std::map<std::pair<std::string, std::chrono::sys_days>, std::vector<raw_candle>> grouped;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &row = table.rows[r];
        const std::size_t line = table.line_of(r);
        if (row[tk].empty()) {
            throw parse_error(line, "empty ticker");
        }
        if (row[tm].empty()) {
            throw parse_error(line, "empty time");
        }
        raw_candle cd{ row[tm], parse_double(row[o], line, "open"), parse_double(row[h], line, "high"), parse_double(row[l], line, "low"),
                       parse_double(row[c], line, "close"), parse_double(row[v], line, "volume") };
        if (!(cd.open > 0 && cd.high > 0 && cd.low > 0 && cd.close > 0)) {
            throw parse_error(line, "prices must be positive");
        }
        if (!(cd.volume >= 0)) {
            throw parse_error(line, "volume must be non-negative");
        }
        grouped[{ row[tk], parse_date(row[dt], line) }].push_back(std::move(cd));
    }

    std::vector<raw_day_record> days;
    days.reserve(grouped.size());
    for (auto &[key, candles] : grouped) {
        std::stable_sort(candles.begin(), candles.end(), [](const raw_candle &a, const raw_candle &b) { return a.time < b.time; });
        days.push_back(raw_day_record{ key.first, key.second, std::move(candles) });
    }
    return days;
}

inline std::vector<raw_day_record> parse_ohlcv_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open '" + path + "'");
    }
    return parse_ohlcv_csv(in);
}

inline volume_baseline read_volume_baseline(const std::string &path) {
    const csv_table table = read_csv(path);
    const std::size_t tk = table.column("ticker");
    const std::size_t av = table.column("avg_volume");
    volume_baseline out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const double v = parse_double(table.rows[r][av], table.line_of(r), "avg_volume");
        if (!(v > 0)) {
            throw parse_error(table.line_of(r), "avg_volume must be positive");
        }
        out[table.rows[r][tk]] = v;
    }
    return out;
}

/// Divides OHLC by the first candle's close; era is the day count since
/// `reference_date`. Volume is left raw (see normalize_volume).
inline era_series normalize_day(const raw_day_record &day, std::chrono::sys_days reference_date) {
    if (day.candles.empty()) {
        throw data_error("day with no candles for " + day.ticker);
    }
    const double first_close = day.candles.front().close;
    if (!(first_close > 0)) {
        throw zero_first_close_error("first close is not positive for " + day.ticker);
    }
    era_series s;
    s.era = static_cast<int>((day.date - reference_date).count());
    s.ticker = day.ticker;
    s.first_close_raw = first_close;
    s.partial = day.candles.size() < full_session_candles;
    s.candles.reserve(day.candles.size());
    for (const raw_candle &rc : day.candles) {
        s.candles.push_back(candle{ rc.open / first_close, rc.high / first_close, rc.low / first_close, rc.close / first_close, rc.volume });
    }
    return s;
}

inline std::vector<double> normalize_volume(const raw_day_record &day, const volume_baseline &baseline) {
    const auto it = baseline.find(day.ticker);
    if (it == baseline.end()) {
        throw missing_baseline_error(day.ticker);
    }
    std::vector<double> out;
    out.reserve(day.candles.size());
    for (const raw_candle &rc : day.candles) {
        out.push_back(rc.volume / it->second);
    }
    return out;
}

/// Full market pipeline: price and volume normalization for every day.
inline std::vector<era_series> normalize_market(const std::vector<raw_day_record> &days, const volume_baseline &baseline,
                                                std::chrono::sys_days reference_date) {
    std::vector<era_series> out;
    out.reserve(days.size());
    for (const auto &day : days) {
        era_series s = normalize_day(day, reference_date);
        const auto vol = normalize_volume(day, baseline);
        for (std::size_t i = 0; i < vol.size(); ++i) {
            s.candles[i].volume = vol[i];
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace conpred
