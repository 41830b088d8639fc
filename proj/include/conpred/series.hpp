#pragma once

#include "conpred/csv.hpp"
#include "conpred/errors.hpp"

#include <fmt/format.h>

#include <cstddef>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace conpred {

struct candle {
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;

    friend bool operator==(const candle &, const candle &) = default;
};

/// One trading day (real or synthetic) of normalized candles.
struct era_series {
    int era = 0;
    std::string ticker;  // empty for synthetic data
    std::vector<candle> candles;
    double first_close_raw = 1.0;
    bool partial = false;  // fewer candles than a full session

    friend bool operator==(const era_series &, const era_series &) = default;
};

/// Writes era,candle_index,open,high,low,close,volume (with a leading
/// ticker column when any series carries one).
inline void write_era_csv(const std::string &path, const std::vector<era_series> &series) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot open '" + path + "' for writing");
    }
    bool with_ticker = false;
    for (const auto &s : series) {
        with_ticker = with_ticker || !s.ticker.empty();
    }
    out << (with_ticker ? "ticker," : "") << "era,candle_index,open,high,low,close,volume\n";
    for (const auto &s : series) {
        for (std::size_t i = 0; i < s.candles.size(); ++i) {
            const candle &c = s.candles[i];
            if (with_ticker) {
                out << s.ticker << ',';
            }
            out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.era, i, c.open, c.high, c.low, c.close, c.volume);
        }
    }
}

inline std::vector<era_series> read_era_csv(const std::string &path) {
    const csv_table table = read_csv(path);
    const std::size_t era_col = table.column("era");
    const std::size_t idx_col = table.column("candle_index");
    const std::size_t o = table.column("open");
    const std::size_t h = table.column("high");
    const std::size_t l = table.column("low");
    const std::size_t c = table.column("close");
    const std::size_t v = table.column("volume");
    const auto ticker_col = table.find_column("ticker");

    std::map<std::pair<std::string, int>, std::vector<std::pair<long, candle>>> grouped;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto &row = table.rows[r];
        const std::size_t line = table.line_of(r);
        const std::string ticker = ticker_col ? row[*ticker_col] : std::string{};
        const int era = static_cast<int>(parse_long(row[era_col], line, "era"));
        const long idx = parse_long(row[idx_col], line, "candle_index");
        candle cd{ parse_double(row[o], line, "open"), parse_double(row[h], line, "high"), parse_double(row[l], line, "low"),
                   parse_double(row[c], line, "close"), parse_double(row[v], line, "volume") };
        grouped[{ ticker, era }].emplace_back(idx, cd);
    }

    std::vector<era_series> out;
    out.reserve(grouped.size());
    for (auto &[key, items] : grouped) {
        std::stable_sort(items.begin(), items.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
        era_series s;
        s.ticker = key.first;
        s.era = key.second;
        for (auto &item : items) {
            s.candles.push_back(item.second);
        }
        out.push_back(std::move(s));
    }
    std::stable_sort(out.begin(), out.end(), [](const era_series &a, const era_series &b) { return a.era < b.era; });
    return out;
}

}  // namespace conpred
