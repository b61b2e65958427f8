#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mmlab/csv.hpp"
#include "mmlab/error.hpp"

namespace mmlab {

constexpr int kBookLevels = 5;

// One 500 ms exchange snapshot. Prices are integer tick counts; the
// currency-per-tick factor lives on the owning TickSeries. Integer prices keep
// spread arithmetic and the wealth identity exact.
struct TickRecord {
    std::int64_t update_time_ms = 0;
    std::array<std::int64_t, kBookLevels> ask_price{};  // level 1..5, strictly increasing
    std::array<std::int64_t, kBookLevels> bid_price{};  // level 1..5, strictly decreasing
    std::array<std::int64_t, kBookLevels> ask_vol{};
    std::array<std::int64_t, kBookLevels> bid_vol{};
    std::int64_t last_price = 0;
    std::int64_t volume = 0;
    std::int64_t open_interest = 0;
    double turnover = 0.0;
    // set when volume == 0 and last_price was carried forward from the prior row
    bool last_carried = false;

    std::int64_t total_bid_vol() const {
        std::int64_t s = 0;
        for (auto v : bid_vol) s += v;
        return s;
    }
    std::int64_t total_ask_vol() const {
        std::int64_t s = 0;
        for (auto v : ask_vol) s += v;
        return s;
    }

    friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

// Throws on any violated book invariant. `where` prefixes the message.
inline void validate_record(const TickRecord& r, const std::string& where = {}) {
    if (r.ask_price[0] <= r.bid_price[0])
        raise(Errc::crossed_book, where + "ask1 " + format_int(r.ask_price[0]) +
                                      " <= bid1 " + format_int(r.bid_price[0]));
    for (int i = 0; i < kBookLevels; ++i) {
        if (r.ask_price[i] < 0 || r.bid_price[i] < 0)
            raise(Errc::malformed_number, where + "negative price level");
        if (r.ask_vol[i] < 0 || r.bid_vol[i] < 0)
            raise(Errc::malformed_number, where + "negative volume level");
    }
    for (int i = 1; i < kBookLevels; ++i) {
        if (r.ask_price[i] <= r.ask_price[i - 1])
            raise(Errc::malformed_number, where + "ask prices not strictly increasing");
        if (r.bid_price[i] >= r.bid_price[i - 1])
            raise(Errc::malformed_number, where + "bid prices not strictly decreasing");
    }
    if (r.last_price < 0 || r.volume < 0 || r.open_interest < 0 || r.turnover < 0.0)
        raise(Errc::malformed_number, where + "negative field");
    // zero total depth leaves the imbalance feature undefined; reject at the gate
    if (r.total_bid_vol() + r.total_ask_vol() == 0)
        raise(Errc::zero_depth, where + "book has no depth on either side");
}

// One trading session: one input file = one day.
struct TickSeries {
    std::string session_id;  // date tag, YYYY-MM-DD
    double tick_size = 1.0;  // quote currency per tick
    std::vector<TickRecord> records;

    std::size_t size() const { return records.size(); }
};

struct DerivedTick {
    double mid = 0.0;          // ticks; half-tick values are exact in binary
    std::int64_t spread = 0;   // ticks
    double imbalance = 0.0;    // in [-1, 1]
};

inline DerivedTick derive(const TickRecord& t) {
    const std::int64_t bid_depth = t.total_bid_vol();
    const std::int64_t ask_depth = t.total_ask_vol();
    if (bid_depth + ask_depth == 0)
        raise(Errc::zero_depth, "imbalance undefined: zero depth on both sides");
    DerivedTick d;
    d.mid = static_cast<double>(t.ask_price[0] + t.bid_price[0]) / 2.0;
    d.spread = t.ask_price[0] - t.bid_price[0];
    d.imbalance = static_cast<double>(bid_depth - ask_depth) /
                  static_cast<double>(bid_depth + ask_depth);
    return d;
}

// mid price in half-ticks; exact integer, used by the env's account arithmetic
inline std::int64_t mid_half_ticks(const TickRecord& t) {
    return t.ask_price[0] + t.bid_price[0];
}

namespace detail {

inline const std::array<std::string, 25>& tick_csv_header() {
    static const std::array<std::string, 25> h = {
        "update_time", "ask_price1", "ask_price2", "ask_price3", "ask_price4", "ask_price5",
        "bid_price1",  "bid_price2", "bid_price3", "bid_price4", "bid_price5", "ask_vol1",
        "ask_vol2",    "ask_vol3",   "ask_vol4",   "ask_vol5",   "bid_vol1",   "bid_vol2",
        "bid_vol3",    "bid_vol4",   "bid_vol5",   "last_price", "volume",     "open_interest",
        "turnover"};
    return h;
}

inline std::int64_t price_to_ticks(std::string_view field, double tick_size,
                                   const std::string& where) {
    double v = 0.0;
    if (!try_parse_double(field, v))
        raise(Errc::malformed_number, where + "bad price '" + std::string(field) + "'");
    const double ratio = v / tick_size;
    const std::int64_t ticks = static_cast<std::int64_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(ticks)) > 1e-6)
        raise(Errc::malformed_number,
              where + "price " + std::string(field) + " not aligned to tick size");
    return ticks;
}

inline std::int64_t parse_count(std::string_view field, const std::string& where) {
    std::int64_t v = 0;
    if (try_parse_int(field, v)) return v;
    double d = 0.0;  // tolerate "10.0"-style integral floats
    if (try_parse_double(field, d) && d == std::floor(d))
        return static_cast<std::int64_t>(d);
    raise(Errc::malformed_number, where + "bad count '" + std::string(field) + "'");
}

}  // namespace detail

// Loads and validates a session file. Rows that violate any TickRecord
// invariant are rejected with their data-row index (1-based).
inline TickSeries parse_tick_csv(const std::filesystem::path& path, double tick_size) {
    std::ifstream in(path);
    if (!in) raise(Errc::missing_field, "cannot open " + path.string());
    if (tick_size <= 0.0) raise(Errc::bad_config, "tick_size must be positive");

    std::string line;
    if (!std::getline(in, line)) raise(Errc::missing_field, path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto& expected = detail::tick_csv_header();
    const auto header = split_csv_line(line);
    if (header.size() != expected.size())
        raise(Errc::missing_field, path.string() + ": header has " +
                                       format_int(static_cast<std::int64_t>(header.size())) +
                                       " fields, expected 25");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (header[i] != expected[i])
            raise(Errc::missing_field,
                  path.string() + ": header field " + format_int(static_cast<std::int64_t>(i)) +
                      " is '" + std::string(header[i]) + "', expected '" + expected[i] + "'");
    }

    TickSeries series;
    series.tick_size = tick_size;
    std::int64_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const std::string where = path.string() + ": data row " + format_int(row) + ": ";
        const auto f = split_csv_line(line);
        if (f.size() != expected.size())
            raise(Errc::missing_field, where + "expected 25 fields, got " +
                                           format_int(static_cast<std::int64_t>(f.size())));

        TickRecord r;
        if (!try_parse_iso8601_ms(f[0], r.update_time_ms))
            raise(Errc::malformed_number, where + "bad timestamp '" + std::string(f[0]) + "'");
        for (int i = 0; i < kBookLevels; ++i) {
            r.ask_price[i] = detail::price_to_ticks(f[1 + i], tick_size, where);
            r.bid_price[i] = detail::price_to_ticks(f[6 + i], tick_size, where);
            r.ask_vol[i] = detail::parse_count(f[11 + i], where);
            r.bid_vol[i] = detail::parse_count(f[16 + i], where);
        }
        r.last_price = detail::price_to_ticks(f[21], tick_size, where);
        r.volume = detail::parse_count(f[22], where);
        r.open_interest = detail::parse_count(f[23], where);
        if (!try_parse_double(f[24], r.turnover))
            raise(Errc::malformed_number, where + "bad turnover '" + std::string(f[24]) + "'");

        if (!series.records.empty()) {
            if (r.update_time_ms <= series.records.back().update_time_ms)
                raise(Errc::non_monotone_time,
                      where + "timestamp does not advance past previous row");
            // zero-volume interval: the exchange printed no trade, so the last
            // price carries forward from the previous row
            if (r.volume == 0) {
                r.last_price = series.records.back().last_price;
                r.last_carried = true;
            }
        }
        validate_record(r, where);
        series.records.push_back(r);
    }
    if (series.records.empty()) raise(Errc::missing_field, path.string() + ": no data rows");
    series.session_id = date_tag(series.records.front().update_time_ms);
    return series;
}

inline void write_tick_csv(const TickSeries& series, const std::filesystem::path& path) {
    std::string out;
    const auto& header = detail::tick_csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    const double ts = series.tick_size;
    for (const auto& r : series.records) {
        out += format_iso8601_ms(r.update_time_ms);
        for (int i = 0; i < kBookLevels; ++i)
            out += ',' + format_double(static_cast<double>(r.ask_price[i]) * ts);
        for (int i = 0; i < kBookLevels; ++i)
            out += ',' + format_double(static_cast<double>(r.bid_price[i]) * ts);
        for (int i = 0; i < kBookLevels; ++i) out += ',' + format_int(r.ask_vol[i]);
        for (int i = 0; i < kBookLevels; ++i) out += ',' + format_int(r.bid_vol[i]);
        out += ',' + format_double(static_cast<double>(r.last_price) * ts);
        out += ',' + format_int(r.volume);
        out += ',' + format_int(r.open_interest);
        out += ',' + format_double(r.turnover);
        out += '\n';
    }
    write_file_atomic(path, out);
}

struct SplitCounts {
    std::size_t train = 5;
    std::size_t val = 2;
    std::size_t test = 5;

    std::size_t total() const { return train + val + test; }
};

struct SessionSplit {
    std::vector<TickSeries> train;
    std::vector<TickSeries> val;
    std::vector<TickSeries> test;
};

// Contiguous chronological split: train takes the earliest sessions, test the
// latest of the consumed prefix. Sessions must already be date-sorted.
inline SessionSplit split_sessions(std::vector<TickSeries> sessions, const SplitCounts& counts) {
    if (counts.total() > sessions.size())
        raise(Errc::insufficient_sessions,
              "need " + format_int(static_cast<std::int64_t>(counts.total())) + " sessions, have " +
                  format_int(static_cast<std::int64_t>(sessions.size())));
    for (std::size_t i = 1; i < sessions.size(); ++i) {
        if (sessions[i].session_id < sessions[i - 1].session_id)
            raise(Errc::bad_config, "sessions not sorted by date");
    }
    SessionSplit split;
    auto it = std::make_move_iterator(sessions.begin());
    split.train.assign(it, it + static_cast<std::ptrdiff_t>(counts.train));
    it += static_cast<std::ptrdiff_t>(counts.train);
    split.val.assign(it, it + static_cast<std::ptrdiff_t>(counts.val));
    it += static_cast<std::ptrdiff_t>(counts.val);
    split.test.assign(it, it + static_cast<std::ptrdiff_t>(counts.test));
    return split;
}

}  // namespace mmlab
