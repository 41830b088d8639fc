#include "conpred/harness.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace conpred;
namespace ts = testing_support;

namespace {

std::vector<feature_row> era_rows(int eras, int per_era) {
    std::vector<feature_row> rows;
    for (int e = eras - 1; e >= 0; --e) {
        for (int t = per_era - 1; t >= 0; --t) {
            rows.push_back({ e, t, { static_cast<std::uint8_t>(t % 5) }, static_cast<std::uint8_t>(t % 5) });
        }
    }
    return rows;
}

experiment_config small_config(int id) {
    experiment_config c;
    c.id = id;
    c.noise_levels = { { 0.03, 0.0 } };
    c.eras = 6;
    c.reference_eras = 6;
    c.single_eras = 3;
    c.model.training.epochs = 4;
    c.model.training.learning_rate = 1e-2;
    c.seed = 11;
    return c;
}

run_report fake_report(double sigma, double sigma_p, std::uint64_t salt) {
    run_report r;
    r.noise = { sigma, sigma_p };
    r.train_data = r.test_data = noise_label(r.noise);
    r.seed = salt;
    r.config_hash = "0123456789abcdef";
    r.base_test_accuracy = 0.25 + 0.01 * static_cast<double>(salt);
    r.cascade_test_accuracy = 0.5;
    r.cascade_test_support = 0.125;
    r.levels = { { 1, 0.5, 0.75, 10, 5, 0.6, 0.05 }, { 2, 0.25, std::nullopt, 5, 0, std::nullopt, 0.0 } };
    r.cascade_trades = { 4.0, 0.0, 3, 4.0 / 3.0, std::numeric_limits<double>::infinity(), 1.5 };
    r.base_confusion.counts[0][0] = static_cast<int>(salt) + 1;
    r.cascade_confusion.counts[4][3] = 2;
    return r;
}

// Field count of one CSV line, honouring double quotes.
std::size_t field_count(const std::string &line) {
    std::size_t n = 1;
    bool quoted = false;
    for (const char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            ++n;
        }
    }
    return n;
}

}  // namespace

TEST(Splits, TemporalPrefixPerEra) {
    const auto s = split_temporal(era_rows(1, 65));
    ASSERT_EQ(s.train.size(), 52u);
    ASSERT_EQ(s.test.size(), 13u);
    EXPECT_EQ(s.train.back().t, 51);
    EXPECT_EQ(s.test.front().t, 52);
    const auto multi = split_temporal(era_rows(4, 32));
    EXPECT_EQ(multi.train.size(), 4u * 25u);
    for (const auto &tr : multi.train) {
        EXPECT_LT(tr.t, 25);
    }
    for (const auto &te : multi.test) {
        EXPECT_GE(te.t, 25);
    }
}

TEST(Splits, DisjointEraHalves) {
    const auto s = split_eras(era_rows(10, 3));
    std::set<int> tr, te;
    for (const auto &r : s.train) {
        tr.insert(r.era);
    }
    for (const auto &r : s.test) {
        te.insert(r.era);
    }
    EXPECT_EQ(tr, (std::set<int>{ 0, 1, 2, 3, 4 }));
    EXPECT_EQ(te, (std::set<int>{ 5, 6, 7, 8, 9 }));
    const auto odd = split_eras(era_rows(11, 3));
    EXPECT_EQ(odd.train.size(), odd.test.size());
    EXPECT_THROW(split_eras(era_rows(1, 3)), too_few_eras_error);
}

TEST(Splits, EraPairsNeverSelfPaired) {
    const std::vector<int> eras{ 3, 5, 8, 13 };
    const auto p = sample_era_pairs(eras, 0, 9);
    ASSERT_EQ(p.size(), 4u);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(p[i].first, eras[i]);
        EXPECT_NE(p[i].first, p[i].second);
    }
    const auto many = sample_era_pairs(eras, 400, 9);
    std::set<int> partners;
    for (const auto &[a, b] : many) {
        EXPECT_NE(a, b);
        partners.insert(b);
    }
    EXPECT_EQ(partners.size(), 4u);
    EXPECT_EQ(sample_era_pairs(eras, 10, 1), sample_era_pairs(eras, 10, 1));
    EXPECT_THROW(sample_era_pairs({ 1 }, 1, 0), too_few_eras_error);
}

TEST(Experiment, SingleSourceTrainAndTestAreDisjoint) {
    auto cfg = small_config(1);
    dataset_cache cache(cfg);
    const auto &rows = cache.synthetic(cfg.noise_levels[0], cfg.noise_levels[0], cfg.eras);
    EXPECT_EQ(rows.size(), 6u * 32u);
    for (const auto &s : { split_temporal(rows), split_eras(rows) }) {
        std::set<std::pair<int, int>> keys;
        for (const auto &r : s.train) {
            keys.insert({ r.era, r.t });
        }
        for (const auto &r : s.test) {
            EXPECT_EQ(keys.count({ r.era, r.t }), 0u);
        }
    }
}

TEST(Experiment, CrossNoiseRouting) {
    const auto five = run_experiment(small_config(5));
    ASSERT_EQ(five.size(), 1u);
    EXPECT_EQ(five[0].train_data, "[0,0]");
    EXPECT_EQ(five[0].test_data, "[0.03,0]");
    EXPECT_EQ(five[0].train_rows, 6u * 32u);
    EXPECT_EQ(five[0].test_rows, 6u * 32u);
    const auto six = run_experiment(small_config(6));
    EXPECT_EQ(six[0].train_data, "[0.03,0]");
    EXPECT_EQ(six[0].test_data, "[0,0]");
}

TEST(Experiment, ProtocolUnitsAndRowCounts) {
    const auto one = run_experiment(small_config(1))[0];
    EXPECT_EQ(one.units, 1u);
    EXPECT_EQ(one.train_rows + one.test_rows, 6u * 32u);
    const auto three = run_experiment(small_config(3))[0];
    EXPECT_EQ(three.units, 3u);
    auto cfg4 = small_config(4);
    cfg4.pairs = 5;
    EXPECT_EQ(run_experiment(cfg4)[0].units, 5u);
    const auto two = run_experiment(small_config(2))[0];
    EXPECT_EQ(two.train_rows, 3u * 32u);
    EXPECT_EQ(two.test_rows, 3u * 32u);
}

TEST(Experiment, DeterministicForFixedSeed) {
    const auto cfg = small_config(1);
    const json a = run_experiment(cfg);
    const json b = run_experiment(cfg);
    EXPECT_EQ(a.dump(), b.dump());
    auto other = cfg;
    other.seed = 12;
    EXPECT_NE(json(run_experiment(other)).dump(), a.dump());
}

TEST(Experiment, ReportShape) {
    const auto r = run_experiment(small_config(1))[0];
    EXPECT_EQ(r.experiment, 1);
    EXPECT_EQ(r.seed, 11u);
    EXPECT_EQ(r.config_hash.size(), 16u);
    ASSERT_TRUE(r.base_test_accuracy.has_value());
    EXPECT_GE(r.cascade_test_support, 0.0);
    EXPECT_LE(r.cascade_test_support, 1.0);
    EXPECT_EQ(r.base_confusion.total(), static_cast<int>(r.test_rows));
    double shares = 0.0;
    for (const auto &l : r.levels) {
        shares += l.test_support_share;
    }
    EXPECT_NEAR(shares, r.cascade_test_support, 1e-12);
}

TEST(Config, JsonRoundTripAndHash) {
    auto cfg = small_config(4);
    cfg.model.family = model_family::mlp;
    cfg.cascade.min_level_accuracy = 0.3;
    const json j = cfg;
    const auto back = j.get<experiment_config>();
    EXPECT_EQ(json(back).dump(), j.dump());
    auto reseeded = cfg;
    reseeded.seed = 999;
    EXPECT_EQ(config_hash(reseeded), config_hash(cfg));
    auto changed = cfg;
    changed.model.training.learning_rate = 5e-3;
    EXPECT_NE(config_hash(changed), config_hash(cfg));
}

TEST(Config, PartialOverridesKeepDefaults) {
    const auto cfg = json::parse(R"({"id": 2, "model": {"training": {"epochs": 7}}})").get<experiment_config>();
    EXPECT_EQ(cfg.id, 2);
    EXPECT_EQ(cfg.eras, 200);
    EXPECT_EQ(cfg.model.training.epochs, 7);
    EXPECT_DOUBLE_EQ(cfg.model.training.learning_rate, 2e-4);
}

TEST(Config, Validation) {
    auto cfg = small_config(1);
    cfg.id = 7;
    EXPECT_THROW(run_experiment(cfg), config_error);
    cfg = small_config(5);
    cfg.source = data_source::market;
    cfg.market_eras = "x.csv";
    EXPECT_THROW(cfg.validate(), config_error);
    cfg = small_config(1);
    cfg.noise_levels.clear();
    EXPECT_THROW(cfg.validate(), config_error);
    cfg = small_config(1);
    cfg.train_fraction = 1.0;
    EXPECT_THROW(cfg.validate(), config_error);
    EXPECT_THROW(json::parse(R"({"noise_levels": [[0.1]]})").get<experiment_config>(), config_error);
}

TEST(CrossValidation, FoldsFollowEras) {
    const auto rows = era_rows(5, 4);
    const auto folds = era_folds(rows, 5);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(folds[i], rows[i].era);  // leave one era out
    }
    const auto two = era_folds(rows, 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(two[i], rows[i].era % 2);
    }
    EXPECT_THROW(era_folds(rows, 6), too_few_rows_error);
    EXPECT_THROW(era_folds(rows, 1), too_few_rows_error);
}

TEST(CrossValidation, GridOrderAndSelection) {
    model_spec base;
    base.training.epochs = 3;
    const auto grid = expand_grid(base, cv_grid{});
    ASSERT_EQ(grid.size(), 8u);
    EXPECT_DOUBLE_EQ(grid[0].training.learning_rate, 1e-2);
    EXPECT_DOUBLE_EQ(grid[0].tree.lambda_base, 0.0);
    EXPECT_EQ(grid[0].training.batch_size, 64u);
    EXPECT_EQ(grid[1].training.batch_size, 128u);
    EXPECT_DOUBLE_EQ(grid[2].tree.lambda_base, 0.1);
    EXPECT_DOUBLE_EQ(grid[4].training.learning_rate, 1e-3);

    const auto rows = era_rows(4, 40);
    const auto single = crossval({ base }, 2, rows, 1);
    EXPECT_EQ(single.chosen, 0u);
    EXPECT_EQ(single.mean_accuracy.size(), 1u);

    // an untrained model cannot beat one fitted to a learnable target
    model_spec untrained = base;
    untrained.training.epochs = 0;
    model_spec fitted = base;
    fitted.training.epochs = 200;
    fitted.training.learning_rate = 5e-2;
    fitted.encoding = input_encoding::one_hot;
    untrained.encoding = input_encoding::one_hot;
    const auto res = crossval({ untrained, fitted }, 2, rows, 1);
    EXPECT_EQ(res.chosen, 1u);
    EXPECT_GT(res.mean_accuracy[1], 0.9);

    // equal scores go to the smaller model, then the earlier point
    model_spec deep = untrained;
    deep.tree.depth = untrained.tree.depth + 1;
    const auto tie = crossval({ deep, untrained, untrained }, 2, rows, 1);
    if (tie.mean_accuracy[0] == tie.mean_accuracy[1]) {
        EXPECT_EQ(tie.chosen, 1u);
    }
    EXPECT_EQ(crossval({ untrained, untrained }, 2, rows, 1).chosen, 0u);
    EXPECT_THROW(crossval({}, 2, rows, 1), config_error);
}

TEST(Reports, EmptyListGivesHeaders) {
    const auto files = render_csv({});
    EXPECT_EQ(files.size(), 6u);
    for (const auto &[name, text] : files) {
        EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1) << name;
    }
}

TEST(Reports, NoiseSeriesHasOneRowPerLevel) {
    std::vector<run_report> reports;
    std::uint64_t salt = 0;
    for (const auto &n : noise_grid()) {
        reports.push_back(fake_report(n.sigma, n.sigma_p, salt++));
    }
    const auto files = render_csv(reports);
    EXPECT_EQ(std::count(files.at("accuracy_vs_noise.csv").begin(), files.at("accuracy_vs_noise.csv").end(), '\n'), 9);
    EXPECT_EQ(std::count(files.at("support_vs_noise.csv").begin(), files.at("support_vs_noise.csv").end(), '\n'), 9);
    EXPECT_EQ(std::count(files.at("levels.csv").begin(), files.at("levels.csv").end(), '\n'), 17);
    EXPECT_EQ(std::count(files.at("confusion.csv").begin(), files.at("confusion.csv").end(), '\n'), 81);
    EXPECT_NE(files.at("trades.csv").find(",inf,"), std::string::npos);
    EXPECT_NE(files.at("support_vs_noise.csv").find("1,ddt,0.075,0.05,0.125000\n"), std::string::npos);
}

TEST(Reports, RowsMatchHeaderWidth) {
    std::vector<run_report> reports{ fake_report(0, 0, 1), fake_report(0.075, 0.05, 2) };
    reports[1].train_data = "[0,0]";
    for (const auto &[name, text] : render_csv(reports)) {
        std::istringstream in(text);
        std::string header, line;
        std::getline(in, header);
        while (std::getline(in, line)) {
            EXPECT_EQ(field_count(line), field_count(header)) << name << ": " << line;
        }
    }
    EXPECT_NE(render_csv(reports).at("summary.csv").find(",\"[0,0]\",\"[0.075,0.05]\","), std::string::npos);
}

TEST(Reports, JsonAndCsvAgree) {
    std::vector<run_report> reports{ fake_report(0, 0, 1), fake_report(0.01, 0.05, 2) };
    const auto dir = ts::temp_dir("reports");
    emit_report(reports, report_format::both, dir);
    const auto back = read_report_json(dir / "report.json");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_TRUE(std::isinf(*back[0].cascade_trades.drar));
    EXPECT_FALSE(back[0].levels[1].test_accuracy.has_value());
    for (const auto &[name, text] : render_csv(back)) {
        EXPECT_EQ(ts::slurp(dir / name), text) << name;
    }
    ts::write_file(dir / "bad.json", R"({"format": "other", "reports": []})");
    EXPECT_THROW(read_report_json(dir / "bad.json"), data_error);
}
