#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "mmlab/synthetic.hpp"
#include "mmlab/ticks.hpp"

using namespace mmlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "mmlab_marketdata_test";
    fs::create_directories(dir);
    return dir;
}

fs::path write_text(const std::string& name, const std::string& contents) {
    const fs::path p = temp_dir() / name;
    std::ofstream out(p, std::ios::trunc);
    out << contents;
    return p;
}

const std::string kHeader =
    "update_time,ask_price1,ask_price2,ask_price3,ask_price4,ask_price5,"
    "bid_price1,bid_price2,bid_price3,bid_price4,bid_price5,"
    "ask_vol1,ask_vol2,ask_vol3,ask_vol4,ask_vol5,"
    "bid_vol1,bid_vol2,bid_vol3,bid_vol4,bid_vol5,"
    "last_price,volume,open_interest,turnover";

std::string row(const std::string& time, std::int64_t ask1, std::int64_t bid1,
                std::int64_t last, std::int64_t vol = 3) {
    std::string r = time;
    for (int i = 0; i < 5; ++i) r += ',' + std::to_string(ask1 + i);
    for (int i = 0; i < 5; ++i) r += ',' + std::to_string(bid1 - i);
    for (int i = 0; i < 10; ++i) r += ",10";
    r += ',' + std::to_string(last) + ',' + std::to_string(vol) + ",1000,15000";
    return r;
}

}  // namespace

TEST(ParseTickCsv, AcceptsWellFormedFileAndConvertsToTicks) {
    const auto path = write_text(
        "ok.csv", kHeader + "\n" + row("2022-02-01T09:00:00.000", 5065, 5064, 5064) + "\n" +
                      row("2022-02-01T09:00:00.500", 5066, 5064, 5065) + "\n" +
                      row("2022-02-01T09:00:01.000", 5065, 5063, 5064) + "\n");
    const TickSeries s = parse_tick_csv(path, 1.0);
    ASSERT_EQ(s.records.size(), 3u);
    EXPECT_EQ(s.session_id, "2022-02-01");
    EXPECT_EQ(s.records[0].ask_price[0], 5065);
    EXPECT_EQ(s.records[0].bid_price[0], 5064);
    EXPECT_EQ(s.records[1].ask_price[4], 5070);
    EXPECT_EQ(s.records[2].update_time_ms - s.records[1].update_time_ms, 500);
}

TEST(ParseTickCsv, RoundTripIsIdentity) {
    SyntheticConfig cfg;
    cfg.n_ticks = 200;
    cfg.seed = 42;
    const TickSeries original = gen_synthetic(cfg);
    const auto path = temp_dir() / "roundtrip.csv";
    write_tick_csv(original, path);
    const TickSeries reread = parse_tick_csv(path, original.tick_size);
    ASSERT_EQ(reread.records.size(), original.records.size());
    for (std::size_t i = 0; i < original.records.size(); ++i)
        EXPECT_EQ(reread.records[i], original.records[i]) << "row " << i;
    EXPECT_EQ(reread.session_id, original.session_id);
}

TEST(ParseTickCsv, FractionalTickSizeRoundTrips) {
    SyntheticConfig cfg;
    cfg.n_ticks = 50;
    cfg.seed = 7;
    TickSeries original = gen_synthetic(cfg);
    original.tick_size = 0.5;  // prices written as currency, halved tick
    const auto path = temp_dir() / "halftick.csv";
    write_tick_csv(original, path);
    const TickSeries reread = parse_tick_csv(path, 0.5);
    ASSERT_EQ(reread.records.size(), original.records.size());
    for (std::size_t i = 0; i < original.records.size(); ++i)
        EXPECT_EQ(reread.records[i], original.records[i]);
}

TEST(ParseTickCsv, RejectsNonMonotoneTime) {
    const auto path = write_text(
        "stuck.csv", kHeader + "\n" + row("2022-02-01T09:00:00.000", 5065, 5064, 5064) + "\n" +
                         row("2022-02-01T09:00:00.000", 5065, 5064, 5064) + "\n");
    try {
        parse_tick_csv(path, 1.0);
        FAIL() << "expected NonMonotoneTime";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::non_monotone_time);
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
    }
}

TEST(ParseTickCsv, RejectsCrossedBook) {
    // ask1 == bid1
    std::string bad = "2022-02-01T09:00:00.000";
    for (int i = 0; i < 5; ++i) bad += ',' + std::to_string(5064 + i);
    for (int i = 0; i < 5; ++i) bad += ',' + std::to_string(5064 - i);
    for (int i = 0; i < 10; ++i) bad += ",10";
    bad += ",5064,3,1000,15000";
    const auto path = write_text("crossed.csv", kHeader + "\n" + bad + "\n");
    try {
        parse_tick_csv(path, 1.0);
        FAIL() << "expected CrossedBook";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::crossed_book);
    }
}

TEST(ParseTickCsv, RejectsBadHeaderAndMalformedNumbers) {
    const auto bad_header = write_text("hdr.csv", "time,price\n1,2\n");
    try {
        parse_tick_csv(bad_header, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::missing_field);
    }

    auto r = row("2022-02-01T09:00:00.000", 5065, 5064, 5064);
    r.replace(r.find("5065"), 4, "50x5");
    const auto bad_num = write_text("num.csv", kHeader + "\n" + r + "\n");
    try {
        parse_tick_csv(bad_num, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::malformed_number);
    }
}

TEST(ParseTickCsv, RejectsZeroDepthRows) {
    std::string r = "2022-02-01T09:00:00.000";
    for (int i = 0; i < 5; ++i) r += ',' + std::to_string(5065 + i);
    for (int i = 0; i < 5; ++i) r += ',' + std::to_string(5064 - i);
    for (int i = 0; i < 10; ++i) r += ",0";
    r += ",5064,3,1000,15000";
    const auto path = write_text("zerodepth.csv", kHeader + "\n" + r + "\n");
    try {
        parse_tick_csv(path, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::zero_depth);
    }
}

TEST(ParseTickCsv, CarriesLastPriceForwardOnZeroVolume) {
    const auto path = write_text(
        "carry.csv", kHeader + "\n" + row("2022-02-01T09:00:00.000", 5065, 5064, 5064, 3) +
                         "\n" + row("2022-02-01T09:00:00.500", 5065, 5064, 5064, 0) + "\n");
    const TickSeries s = parse_tick_csv(path, 1.0);
    EXPECT_FALSE(s.records[0].last_carried);
    EXPECT_TRUE(s.records[1].last_carried);
    EXPECT_EQ(s.records[1].last_price, s.records[0].last_price);
}

TEST(Derive, MatchesBookExample) {
    const auto t = testutil::make_tick(5065, 5064, 5064);
    const DerivedTick d = derive(t);
    EXPECT_DOUBLE_EQ(d.mid, 5064.5);
    EXPECT_EQ(d.spread, 1);
}

TEST(Derive, ImbalanceCases) {
    auto t = testutil::make_tick(5065, 5064, 5064);
    EXPECT_DOUBLE_EQ(derive(t).imbalance, 0.0);  // symmetric depth

    // bid levels 10 each, ask levels 5 each -> (50-25)/75 = 1/3
    for (int i = 0; i < kBookLevels; ++i) t.ask_vol[i] = 5;
    EXPECT_DOUBLE_EQ(derive(t).imbalance, 1.0 / 3.0);

    // one-sided book: imbalance pegs at +1
    for (int i = 0; i < kBookLevels; ++i) t.ask_vol[i] = 0;
    EXPECT_DOUBLE_EQ(derive(t).imbalance, 1.0);

    for (int i = 0; i < kBookLevels; ++i) t.bid_vol[i] = 0;
    EXPECT_THROW(derive(t), Error);
}

TEST(Derive, PureFunction) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto t = testutil::make_tick(5000 + rng.uniform_int(1, 5), 4999, 5000);
        for (int i = 0; i < kBookLevels; ++i) {
            t.ask_vol[i] = rng.uniform_int(0, 20);
            t.bid_vol[i] = rng.uniform_int(1, 20);
        }
        const DerivedTick a = derive(t);
        const DerivedTick b = derive(t);
        EXPECT_EQ(a.mid, b.mid);
        EXPECT_EQ(a.spread, b.spread);
        EXPECT_EQ(a.imbalance, b.imbalance);
        EXPECT_GE(a.imbalance, -1.0);
        EXPECT_LE(a.imbalance, 1.0);
    }
}

TEST(SplitSessions, ChronologicalDisjointSplit) {
    std::vector<TickSeries> sessions;
    for (int i = 0; i < 12; ++i) {
        SyntheticConfig cfg;
        cfg.n_ticks = 10;
        cfg.seed = static_cast<std::uint64_t>(i);
        cfg.start_time_ms = 1643706000000 + static_cast<std::int64_t>(i) * 86400000;
        sessions.push_back(gen_synthetic(cfg));
    }
    const auto split = split_sessions(sessions, {5, 2, 5});
    ASSERT_EQ(split.train.size(), 5u);
    ASSERT_EQ(split.val.size(), 2u);
    ASSERT_EQ(split.test.size(), 5u);
    // order preserved, no session in two splits
    EXPECT_EQ(split.train.front().session_id, sessions[0].session_id);
    EXPECT_EQ(split.val.front().session_id, sessions[5].session_id);
    EXPECT_EQ(split.test.back().session_id, sessions[11].session_id);
    EXPECT_LT(split.train.back().session_id, split.val.front().session_id);
    EXPECT_LT(split.val.back().session_id, split.test.front().session_id);
}

TEST(SplitSessions, DegenerateAndInsufficient) {
    SyntheticConfig cfg;
    cfg.n_ticks = 10;
    std::vector<TickSeries> one = {gen_synthetic(cfg)};
    const auto split = split_sessions(one, {0, 0, 1});
    EXPECT_TRUE(split.train.empty());
    EXPECT_TRUE(split.val.empty());
    ASSERT_EQ(split.test.size(), 1u);

    std::vector<TickSeries> four;
    for (int i = 0; i < 4; ++i) {
        cfg.start_time_ms = 1643706000000 + i * 86400000;
        four.push_back(gen_synthetic(cfg));
    }
    try {
        split_sessions(four, {5, 2, 5});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::insufficient_sessions);
    }
}

TEST(GenSynthetic, DeterministicForFixedSeed) {
    SyntheticConfig cfg;
    cfg.n_ticks = 500;
    cfg.seed = 99;
    const TickSeries a = gen_synthetic(cfg);
    const TickSeries b = gen_synthetic(cfg);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i], b.records[i]);
}

TEST(GenSynthetic, LengthAndInvariants) {
    for (const MidModel model :
         {MidModel::mean_reverting, MidModel::trending, MidModel::random_walk}) {
        SyntheticConfig cfg;
        cfg.n_ticks = 100;
        cfg.seed = 5;
        cfg.mid_model = model;
        cfg.drift = model == MidModel::trending ? 0.05 : 0.0;
        const TickSeries s = gen_synthetic(cfg);
        ASSERT_EQ(s.records.size(), 100u);
        for (std::size_t i = 0; i < s.records.size(); ++i) {
            ASSERT_NO_THROW(validate_record(s.records[i]));
            EXPECT_GT(s.records[i].ask_price[0], s.records[i].bid_price[0]);
            if (i > 0) {
                EXPECT_GT(s.records[i].update_time_ms, s.records[i - 1].update_time_ms);
            }
        }
    }
}

// Mean reversion leaves a negative footprint in the lag-1 autocorrelation of
// tick returns; estimated here empirically on generated output.
TEST(GenSynthetic, MeanRevertingReturnsAnticorrelated) {
    SyntheticConfig cfg;
    cfg.n_ticks = 10000;
    cfg.seed = 11;
    cfg.reversion_strength = 0.5;
    const TickSeries s = gen_synthetic(cfg);

    std::vector<double> returns;
    for (std::size_t i = 1; i < s.records.size(); ++i)
        returns.push_back(
            static_cast<double>(s.records[i].last_price - s.records[i - 1].last_price));
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < returns.size(); ++i)
        num += (returns[i] - mean) * (returns[i + 1] - mean);
    for (double r : returns) den += (r - mean) * (r - mean);
    const double lag1 = num / den;
    EXPECT_LT(lag1, -0.05) << "lag-1 autocorrelation " << lag1;
}
