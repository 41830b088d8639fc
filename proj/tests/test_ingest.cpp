#include "conpred/ingest.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>

using namespace conpred;
namespace ts = testing_support;
using namespace std::chrono;

namespace {

const char *fixture = "ticker,date,time,open,high,low,close,volume\n"
                      "AAA,2023-01-03,09:20,101,103,100,102,1500\n"
                      "AAA,2023-01-03,09:15,99,101,98,100,2000\n"
                      "BBB,2023-01-03,09:15,50,51,49,50,0\n"
                      "AAA,2023-01-04,09:15,102,102,101,101,1000\n"
                      "BBB,2023-01-04,09:15,51,52,50,52.5,400\n"
                      "BBB,2023-01-04,09:20,52.5,53,52,53,300\n";

std::vector<raw_day_record> parse(const std::string &text) {
    std::istringstream in(text);
    return parse_ohlcv_csv(in);
}

}  // namespace

TEST(ParseOhlcv, GroupsByTickerAndDateSortedByTime) {
    const auto days = parse(fixture);
    ASSERT_EQ(days.size(), 4u);
    EXPECT_EQ(days[0].ticker, "AAA");
    EXPECT_EQ(days[0].date, sys_days(2023y / January / 3));
    ASSERT_EQ(days[0].candles.size(), 2u);
    EXPECT_EQ(days[0].candles[0].time, "09:15");
    EXPECT_DOUBLE_EQ(days[0].candles[0].close, 100);
    EXPECT_DOUBLE_EQ(days[0].candles[1].close, 102);
    EXPECT_EQ(days[3].ticker, "BBB");
    EXPECT_EQ(days[3].date, sys_days(2023y / January / 4));
}

TEST(ParseOhlcv, ReportsLineNumbers) {
    const std::string bad = "ticker,date,time,open,high,low,close,volume\n"
                            "AAA,2023-01-03,09:15,99,101,98,100,2000\n"
                            "AAA,2023-01-03,09:20,99,101,98,abc,2000\n";
    try {
        parse(bad);
        FAIL() << "expected parse_error";
    } catch (const parse_error &e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(ParseOhlcv, RejectsInvalidRecords) {
    const std::string head = "ticker,date,time,open,high,low,close,volume\n";
    EXPECT_THROW(parse(head + "AAA,2023-02-30,09:15,1,1,1,1,1\n"), parse_error);
    EXPECT_THROW(parse(head + "AAA,2023-01-03,09:15,1,1,1,-1,1\n"), parse_error);
    EXPECT_THROW(parse(head + "AAA,2023-01-03,09:15,1,1,1,1,-5\n"), parse_error);
    EXPECT_THROW(parse(head + "AAA,2023-01-03,09:15,1,1,1\n"), parse_error);
    EXPECT_THROW(parse(head + ",2023-01-03,09:15,1,1,1,1,1\n"), parse_error);
    EXPECT_THROW(parse(head), empty_file_error);
    EXPECT_THROW(parse(""), empty_file_error);
    EXPECT_THROW(parse("ticker,date,open\nA,2023-01-01,1\n"), parse_error);
}

TEST(NormalizeDay, DividesByFirstClose) {
    raw_day_record d{ "X", sys_days(2023y / March / 1), { { "09:15", 99, 101, 98, 100, 10 }, { "09:20", 100, 106, 100, 105, 20 } } };
    const auto s = normalize_day(d, sys_days(2023y / March / 1));
    EXPECT_EQ(s.era, 0);
    EXPECT_EQ(s.candles[0].close, 1.0);
    EXPECT_DOUBLE_EQ(s.candles[1].close, 1.05);
    EXPECT_DOUBLE_EQ(s.candles[1].high, 1.06);
    EXPECT_DOUBLE_EQ(s.first_close_raw, 100);
    EXPECT_TRUE(s.partial);
    EXPECT_EQ(normalize_day(d, sys_days(2023y / February / 27)).era, 2);
}

TEST(NormalizeDay, SingleCandleAndErrors) {
    raw_day_record one{ "X", sys_days(2023y / March / 1), { { "09:15", 7, 8, 6, 7.5, 1 } } };
    const auto s = normalize_day(one, sys_days(2023y / March / 1));
    ASSERT_EQ(s.candles.size(), 1u);
    EXPECT_EQ(s.candles[0].close, 1.0);
    raw_day_record empty{ "X", sys_days(2023y / March / 1), {} };
    EXPECT_THROW(normalize_day(empty, sys_days(2023y / March / 1)), data_error);
    raw_day_record zero{ "X", sys_days(2023y / March / 1), { { "09:15", 1, 1, 1, 0, 1 } } };
    EXPECT_THROW(normalize_day(zero, sys_days(2023y / March / 1)), zero_first_close_error);
}

TEST(NormalizeVolume, DividesByBaseline) {
    raw_day_record d{ "X", sys_days(2023y / March / 1), { { "09:15", 1, 1, 1, 1, 2000 }, { "09:20", 1, 1, 1, 1, 0 } } };
    const auto v = normalize_volume(d, { { "X", 1000.0 } });
    EXPECT_DOUBLE_EQ(v[0], 2.0);
    EXPECT_DOUBLE_EQ(v[1], 0.0);
    try {
        normalize_volume(d, { { "Y", 1.0 } });
        FAIL() << "expected missing_baseline_error";
    } catch (const missing_baseline_error &e) {
        EXPECT_EQ(e.ticker(), "X");
    }
}

TEST(NormalizeMarket, FullPipelineFromFiles) {
    const auto dir = ts::temp_dir("ingest");
    ts::write_file(dir / "ohlcv.csv", fixture);
    ts::write_file(dir / "base.csv", "ticker,avg_volume\nAAA,1000\nBBB,100\n");
    const auto days = parse_ohlcv_csv((dir / "ohlcv.csv").string());
    const auto base = read_volume_baseline((dir / "base.csv").string());
    const auto eras = normalize_market(days, base, sys_days(2023y / January / 3));
    ASSERT_EQ(eras.size(), 4u);
    for (const auto &e : eras) {
        EXPECT_EQ(e.candles.front().close, 1.0);
    }
    EXPECT_EQ(eras[0].era, 0);
    EXPECT_EQ(eras[1].era, 1);
    EXPECT_DOUBLE_EQ(eras[0].candles[0].volume, 2.0);
    EXPECT_DOUBLE_EQ(eras[3].candles[1].volume, 3.0);
    EXPECT_DOUBLE_EQ(eras[3].candles[1].close, 53.0 / 52.5);

    // era CSV written with a ticker column reads back ordered by era
    write_era_csv((dir / "eras.csv").string(), eras);
    const auto back = read_era_csv((dir / "eras.csv").string());
    auto expected = eras;
    std::stable_sort(expected.begin(), expected.end(), [](const auto &a, const auto &b) { return a.era < b.era; });
    ASSERT_EQ(back.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(back[i].ticker, expected[i].ticker);
        EXPECT_EQ(back[i].era, expected[i].era);
        EXPECT_EQ(back[i].candles, expected[i].candles);
    }
    ts::write_file(dir / "bad_base.csv", "ticker,avg_volume\nAAA,0\n");
    EXPECT_THROW(read_volume_baseline((dir / "bad_base.csv").string()), parse_error);
    EXPECT_THROW(parse_ohlcv_csv((dir / "missing.csv").string()), data_error);
}
