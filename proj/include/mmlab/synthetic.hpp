#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "mmlab/error.hpp"
#include "mmlab/rng.hpp"
#include "mmlab/ticks.hpp"

namespace mmlab {

enum class MidModel { mean_reverting, trending, random_walk };

inline const char* to_string(MidModel m) {
    switch (m) {
        case MidModel::mean_reverting: return "mean-reverting";
        case MidModel::trending: return "trending";
        case MidModel::random_walk: return "random-walk";
    }
    return "?";
}

inline MidModel mid_model_from_string(std::string_view s) {
    if (s == "mean-reverting" || s == "mr") return MidModel::mean_reverting;
    if (s == "trending" || s == "trend") return MidModel::trending;
    if (s == "random-walk" || s == "rw") return MidModel::random_walk;
    raise(Errc::bad_config, "unknown mid model '" + std::string(s) + "'");
}

struct SyntheticConfig {
    std::int64_t n_ticks = 10000;
    std::uint64_t seed = 1;
    MidModel mid_model = MidModel::mean_reverting;
    double reversion_strength = 0.5;  // pull per step toward the anchor
    double drift = 0.0;               // ticks per step, trending model
    std::int64_t base_spread = 2;     // ticks
    std::int64_t depth_scale = 10;    // contracts per book level
    double noise_amplitude = 2.0;     // bounded uniform mid noise, ticks
    std::int64_t anchor_price = 5000; // ticks
    std::int64_t start_time_ms = 1643706000000;  // 2022-02-01T09:00:00.000

    void validate() const {
        if (n_ticks < 2) raise(Errc::bad_config, "n_ticks must be >= 2");
        if (base_spread < 1) raise(Errc::bad_config, "base_spread must be >= 1");
        if (reversion_strength < 0.0) raise(Errc::bad_config, "reversion_strength must be >= 0");
        if (depth_scale < 1) raise(Errc::bad_config, "depth_scale must be >= 1");
        if (noise_amplitude <= 0.0) raise(Errc::bad_config, "noise_amplitude must be > 0");
    }
};

// Deterministic synthetic session. The mid is an anchor process plus a
// transient component; for the mean-reverting model the transient is a
// discretized Ornstein-Uhlenbeck pull with bounded uniform noise, while rare
// one-tick anchor moves stand in for permanent information arrival (the part
// of the price a maker cannot earn back). The spread wanders slowly in
// [1, base_spread + 2] so that quoting is profitable in some regimes and not
// in others.
inline TickSeries gen_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0x7159));

    TickSeries series;
    series.tick_size = 1.0;
    series.records.reserve(static_cast<std::size_t>(cfg.n_ticks));

    double anchor = static_cast<double>(cfg.anchor_price);
    double transient = 0.0;
    std::int64_t spread = cfg.base_spread;
    std::int64_t open_interest = 1000000;
    std::int64_t prev_last = cfg.anchor_price;

    for (std::int64_t t = 0; t < cfg.n_ticks; ++t) {
        const double noise = (rng.uniform01() * 2.0 - 1.0) * cfg.noise_amplitude;
        switch (cfg.mid_model) {
            case MidModel::mean_reverting:
                transient += -cfg.reversion_strength * transient + noise;
                // permanent level shifts, ~5% of steps
                if (rng.uniform01() < 0.05) anchor += (rng.bernoulli(0.5) ? 1.0 : -1.0);
                break;
            case MidModel::trending:
                anchor += cfg.drift;
                transient += noise;
                break;
            case MidModel::random_walk:
                transient += noise;
                break;
        }
        const double mid = anchor + transient;
        const std::int64_t center = static_cast<std::int64_t>(std::llround(mid));

        // slow integer walk on the quoted spread
        const double u = rng.uniform01();
        if (u < 0.1)
            spread = std::max<std::int64_t>(1, spread - 1);
        else if (u > 0.9)
            spread = std::min<std::int64_t>(cfg.base_spread + 2, spread + 1);

        TickRecord r;
        r.update_time_ms = cfg.start_time_ms + 500 * t;
        r.ask_price[0] = center + (spread + 1) / 2;
        r.bid_price[0] = r.ask_price[0] - spread;
        for (int lvl = 1; lvl < kBookLevels; ++lvl) {
            r.ask_price[lvl] = r.ask_price[0] + lvl;
            r.bid_price[lvl] = r.bid_price[0] - lvl;
        }
        for (int lvl = 0; lvl < kBookLevels; ++lvl) {
            r.ask_vol[lvl] = rng.uniform_int(1, 2 * cfg.depth_scale);
            r.bid_vol[lvl] = rng.uniform_int(1, 2 * cfg.depth_scale);
        }

        std::int64_t last = center + rng.uniform_int(-1, 1);
        if (last < 0) last = 0;
        std::int64_t traded =
            3 * std::abs(last - prev_last) + rng.uniform_int(0, 4);
        if (t == 0) traded = std::max<std::int64_t>(traded, 1);
        if (traded == 0) {
            last = prev_last;  // no trade printed, carry the last price
            r.last_carried = true;
        }
        r.last_price = last;
        r.volume = traded;
        r.turnover = static_cast<double>(traded * last) * series.tick_size;
        open_interest = std::max<std::int64_t>(0, open_interest + rng.uniform_int(-5, 5));
        r.open_interest = open_interest;

        validate_record(r);
        series.records.push_back(r);
        prev_last = last;
    }
    series.session_id = date_tag(cfg.start_time_ms);
    return series;
}

}  // namespace mmlab
