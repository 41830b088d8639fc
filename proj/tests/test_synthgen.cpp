#include "conpred/series.hpp"
#include "conpred/synthgen.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

using namespace conpred;
namespace ts = testing_support;

TEST(PlanEra, DeterministicPerSeedAndEra) {
    EXPECT_EQ(plan_era(7, 0), plan_era(7, 0));
    bool differs = false;
    for (int e = 1; e < 20; ++e) {
        differs = differs || !(plan_era(7, e) == plan_era(7, 0));
    }
    EXPECT_TRUE(differs);
}

TEST(PlanEra, RespectsRanges) {
    synth_config cfg;
    cfg.amplitude_min = 0.05;
    cfg.amplitude_max = 0.10;
    cfg.peaks_min = 0;
    cfg.peaks_max = 0;
    for (int e = 0; e < 200; ++e) {
        const auto w = plan_era(1, e, cfg);
        EXPECT_EQ(w.peaks, 0);
        EXPECT_GE(w.amplitude, 0.05);
        EXPECT_LE(w.amplitude, 0.10);
        EXPECT_TRUE(w.direction == 1 || w.direction == -1);
    }
    cfg.peaks_max = -1;
    EXPECT_THROW(plan_era(1, 0, cfg), config_error);
}

TEST(PlanEra, PhaseAndDirectionAreBothDrawn) {
    std::set<std::pair<bool, int>> seen;
    for (int e = 0; e < 100; ++e) {
        const auto w = plan_era(3, e);
        seen.insert({ w.phase90, w.direction });
    }
    EXPECT_EQ(seen.size(), 4u);
}

TEST(PeakIntervals, PartitionAllSamplesForManyFrequencies) {
    for (int k = 1; k <= 20; ++k) {
        for (const bool phase90 : { false, true }) {
            wave_spec w;
            w.peaks = k;
            w.phase90 = phase90;
            const auto iv = peak_intervals(w);
            ASSERT_FALSE(iv.empty());
            EXPECT_EQ(iv.front().first, 0u);
            EXPECT_EQ(iv.back().second, samples_per_day);
            for (std::size_t i = 0; i < iv.size(); ++i) {
                EXPECT_LT(iv[i].first, iv[i].second);
                if (i > 0) {
                    EXPECT_EQ(iv[i].first, iv[i - 1].second);
                }
            }
        }
    }
}

TEST(PeakIntervals, CountFollowsZeroCrossings) {
    // sin((K+1)/2 pi t) with phase 0 crosses zero inside (0,1) at
    // t = 2n/(K+1); each crossing adds one interval.
    for (int k = 1; k <= 20; ++k) {
        wave_spec w;
        w.peaks = k;
        int interior = 0;
        for (int n = 1; n * 2 < k + 1; ++n) {
            ++interior;  // t = 2n/(K+1) < 1
        }
        EXPECT_EQ(peak_intervals(w).size(), static_cast<std::size_t>(interior + 1)) << "K=" << k;
    }
    wave_spec one;
    one.peaks = 1;
    ASSERT_EQ(peak_intervals(one).size(), 1u);
    wave_spec three;
    three.peaks = 3;
    const auto iv = peak_intervals(three);
    ASSERT_EQ(iv.size(), 2u);
    EXPECT_EQ(iv[0].second, 187u);  // t_187 = 0.5 exactly opens the second interval
}

TEST(PeakIntervals, SignIsConstantWithinEachInterval) {
    for (int k = 1; k <= 12; ++k) {
        for (const bool phase90 : { false, true }) {
            wave_spec w;
            w.peaks = k;
            w.phase90 = phase90;
            for (const auto &[a, b] : peak_intervals(w)) {
                int sign = 0;
                for (std::size_t j = a; j < b; ++j) {
                    const double v = std::sin(w.angular_frequency() * sample_time(j) + w.phase());
                    if (std::abs(v) < 1e-9) {
                        continue;
                    }
                    const int s = v > 0 ? 1 : -1;
                    if (sign == 0) {
                        sign = s;
                    }
                    EXPECT_EQ(s, sign) << "K=" << k << " j=" << j;
                }
            }
        }
    }
}

TEST(PeakIntervals, RejectsLine) {
    wave_spec w;
    w.peaks = 0;
    EXPECT_THROW(peak_intervals(w), config_error);
}

TEST(SampleWave, NoiselessLine) {
    wave_spec w;
    w.peaks = 0;
    w.amplitude = 0.1;
    w.direction = 1;
    const auto f = sample_wave(w, {}, 1);
    EXPECT_DOUBLE_EQ(f.front(), 1.0);
    EXPECT_NEAR(f.back(), 1.1, 1e-15);
}

TEST(SampleWave, NoiselessSinePeak) {
    wave_spec w;
    w.peaks = 1;
    w.amplitude = 0.07;
    const auto f = sample_wave(w, {}, 1);
    const double top = *std::max_element(f.begin(), f.end());
    EXPECT_NEAR(top, 1.07, 0.07 * (1 - std::cos(std::numbers::pi / 374)));
    for (std::size_t j = 0; j < f.size(); ++j) {
        EXPECT_NEAR(f[j], 1.0 + 0.07 * std::sin(std::numbers::pi * sample_time(j)), 1e-15);
    }
}

TEST(SampleWave, BaseNoiseHasZeroMean) {
    wave_spec w;
    w.peaks = 2;
    w.amplitude = 0.05;
    const auto clean = sample_wave(w, {}, 0);
    const noise_spec noisy{ 0.01, 0.0 };
    double sum = 0.0;
    std::size_t n = 0;
    for (int era = 0; era < 300; ++era) {
        w.era = era;
        const auto f = sample_wave(w, noisy, 9);
        for (std::size_t j = 0; j < f.size(); ++j) {
            sum += f[j] - clean[j];
            ++n;
        }
    }
    EXPECT_NEAR(sum / static_cast<double>(n), 0.0, 3 * 0.01 / std::sqrt(static_cast<double>(n)));
}

TEST(SampleWave, PeakNoiseScalesWholeIntervals) {
    wave_spec w;
    w.peaks = 5;
    w.amplitude = 0.05;
    const auto clean = sample_wave(w, {}, 4);
    const auto noisy = sample_wave(w, { 0.0, 0.05 }, 4);
    for (const auto &[a, b] : peak_intervals(w)) {
        double ratio = 0.0;
        for (std::size_t j = a; j < b; ++j) {
            const double base = clean[j] - 1.0;
            if (std::abs(base) < 1e-6) {
                continue;
            }
            const double r = (noisy[j] - 1.0) / base;
            if (ratio == 0.0) {
                ratio = r;
            }
            EXPECT_NEAR(r, ratio, 1e-9);
        }
    }
}

TEST(ToCandles, MatchesBruteForceWindows) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(1.0, 0.05);
    std::vector<double> p(samples_per_day);
    for (auto &v : p) {
        v = n(rng);
    }
    const auto s = to_candles(p, 3);
    ASSERT_EQ(s.candles.size(), 75u);
    EXPECT_EQ(s.era, 3);
    const double base = p[4];
    for (std::size_t c = 0; c < 75; ++c) {
        double hi = -1e9, lo = 1e9;
        for (std::size_t k = 0; k < 5; ++k) {
            hi = std::max(hi, p[c * 5 + k]);
            lo = std::min(lo, p[c * 5 + k]);
        }
        EXPECT_DOUBLE_EQ(s.candles[c].open, p[c * 5] / base);
        EXPECT_DOUBLE_EQ(s.candles[c].close, p[c * 5 + 4] / base);
        EXPECT_DOUBLE_EQ(s.candles[c].high, hi / base);
        EXPECT_DOUBLE_EQ(s.candles[c].low, lo / base);
        EXPECT_DOUBLE_EQ(s.candles[c].volume, 1.0);
        EXPECT_LE(s.candles[c].low, std::min(s.candles[c].open, s.candles[c].close));
        EXPECT_GE(s.candles[c].high, std::max(s.candles[c].open, s.candles[c].close));
    }
    EXPECT_EQ(s.candles[0].close, 1.0);
}

TEST(ToCandles, AscendingAndConstantSeries) {
    std::vector<double> up(samples_per_day);
    for (std::size_t j = 0; j < up.size(); ++j) {
        up[j] = static_cast<double>(j + 1);
    }
    const auto s = to_candles(up, 0);
    EXPECT_DOUBLE_EQ(s.first_close_raw, 5.0);
    EXPECT_DOUBLE_EQ(s.candles[0].open, 0.2);
    EXPECT_DOUBLE_EQ(s.candles[0].close, 1.0);
    const auto flat = to_candles(std::vector<double>(samples_per_day, 2.5), 0);
    for (const auto &c : flat.candles) {
        EXPECT_EQ(c.open, 1.0);
        EXPECT_EQ(c.high, 1.0);
        EXPECT_EQ(c.low, 1.0);
        EXPECT_EQ(c.close, 1.0);
    }
}

TEST(ToCandles, Errors) {
    EXPECT_THROW(to_candles(std::vector<double>(374, 1.0), 0), length_mismatch_error);
    std::vector<double> z(samples_per_day, 1.0);
    z[4] = 0.0;
    EXPECT_THROW(to_candles(z, 0), zero_first_close_error);
}

TEST(BuildDataset, DeterministicAndSharedWaves) {
    const auto a = build_dataset({ 0.01, 0.05 }, 10, 3);
    const auto b = build_dataset({ 0.01, 0.05 }, 10, 3);
    EXPECT_EQ(a, b);
    const auto clean = build_dataset({}, 10, 3);
    for (int e = 0; e < 10; ++e) {
        EXPECT_EQ(a[static_cast<std::size_t>(e)].era, e);
        EXPECT_FALSE(a[static_cast<std::size_t>(e)].candles == clean[static_cast<std::size_t>(e)].candles);
        EXPECT_EQ(a[static_cast<std::size_t>(e)].candles[0].close, 1.0);
    }
}

TEST(BuildDataset, NoiselessClosesLieOnTheWave) {
    const auto data = build_dataset({}, 30, 8);
    for (const auto &s : data) {
        const auto w = plan_era(8, s.era);
        for (std::size_t c = 0; c < s.candles.size(); ++c) {
            const double t = sample_time(c * 5 + 4);
            const double dir = w.direction;
            const double raw =
                w.peaks == 0 ? 1.0 + dir * w.amplitude * t : 1.0 + dir * w.amplitude * std::sin(w.angular_frequency() * t + w.phase());
            EXPECT_NEAR(s.candles[c].close * s.first_close_raw, raw, 1e-12);
        }
    }
}

TEST(BuildDataset, DistinctEraIds) {
    const auto data = build_dataset({}, 100, 1);
    std::set<int> ids;
    for (const auto &s : data) {
        ids.insert(s.era);
    }
    EXPECT_EQ(ids.size(), 100u);
    EXPECT_EQ(*ids.begin(), 0);
    EXPECT_EQ(*ids.rbegin(), 99);
    EXPECT_THROW(build_dataset({}, 0, 1), config_error);
}

TEST(NoiseGrid, EightLevelsAndLabels) {
    ASSERT_EQ(noise_grid().size(), 8u);
    EXPECT_EQ(noise_label(noise_grid().back()), "[0.075,0.05]");
    EXPECT_EQ(synth_filename(noise_grid()[3]), "synth_0.01_0.05.csv");
}

TEST(EraCsv, RoundTripIsExact) {
    const auto data = build_dataset({ 0.03, 0.0 }, 4, 2);
    const auto dir = ts::temp_dir("era_csv");
    const auto path = (dir / "eras.csv").string();
    write_era_csv(path, data);
    const auto back = read_era_csv(path);
    ASSERT_EQ(back.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        EXPECT_EQ(back[i].era, data[i].era);
        EXPECT_EQ(back[i].candles, data[i].candles);
    }
    EXPECT_EQ(ts::slurp(path).substr(0, 43), "era,candle_index,open,high,low,close,volume");
}
