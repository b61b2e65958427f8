#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmlab/csv.hpp"
#include "mmlab/env.hpp"
#include "mmlab/error.hpp"

namespace mmlab {

// One logged decision; what the PDP estimator consumes.
struct Decision {
    StateVector state;
    Action action = Action::NN;
};

enum class StateVar : int {
    imbalance = 0,
    volatility = 1,
    inventory = 2,
    spread = 3,
    d_inv_value = 4,
};

inline const std::string& to_string(StateVar v) {
    return state_var_names()[static_cast<std::size_t>(v)];
}

inline StateVar state_var_from_string(std::string_view s) {
    const auto& names = state_var_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == s) return static_cast<StateVar>(i);
    raise(Errc::bad_config, "unknown state variable '" + std::string(s) + "'");
}

inline double feature_of(const StateVector& s, StateVar v) {
    return s.as_array()[static_cast<std::size_t>(v)];
}

// Empirical action frequencies per bin of one state variable. Bins whose
// sample count falls under min_count are kept but flagged unreliable.
struct PDPTable {
    std::string variable;
    std::vector<double> edges;  // bin i covers [edges[i], edges[i+1])
    std::vector<std::int64_t> counts;
    std::vector<std::array<double, kNumActions>> probs;
    std::vector<std::uint8_t> reliable;
    std::int64_t min_count = 100;

    std::size_t bins() const { return counts.size(); }
};

struct PdpOptions {
    int bins = 20;                      // ignored when edges are given
    std::vector<double> edges;          // explicit bin edges, optional
    double lo = 0.0, hi = 0.0;          // truncation range; required unless edges given
    std::int64_t min_count = 100;
    bool integer_aligned = false;       // half-integer edges so each integer has its own bin
};

// Default per-variable truncation: spread [1, 15]; inventory [-10, 10] on
// integer-aligned bins; imbalance [-1, 1]; the unbounded features at their
// empirical 1st-99th percentiles.
inline PdpOptions default_pdp_options(StateVar var, std::span<const Decision> log) {
    PdpOptions opt;
    switch (var) {
        case StateVar::spread:
            opt.lo = 1.0;
            opt.hi = 15.0;
            opt.integer_aligned = true;
            return opt;
        case StateVar::inventory:
            opt.lo = -10.0;
            opt.hi = 10.0;
            opt.integer_aligned = true;
            return opt;
        case StateVar::imbalance:
            opt.lo = -1.0;
            opt.hi = 1.0;
            return opt;
        case StateVar::volatility:
        case StateVar::d_inv_value:
            break;
    }
    if (log.empty()) raise(Errc::empty_log, "empty decision log");
    std::vector<double> values;
    values.reserve(log.size());
    for (const auto& d : log) values.push_back(feature_of(d.state, var));
    std::sort(values.begin(), values.end());
    auto nearest_rank = [&](double pct) {
        const auto n = static_cast<double>(values.size());
        std::size_t k = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
        if (k > 0) --k;
        return values[std::min(k, values.size() - 1)];
    };
    opt.lo = nearest_rank(1.0);
    opt.hi = nearest_rank(99.0);
    if (opt.lo >= opt.hi) {  // near-constant feature: pad a degenerate range
        opt.lo -= 0.5;
        opt.hi += 0.5;
    }
    return opt;
}

inline PDPTable estimate_pdp(std::span<const Decision> log, StateVar var,
                             const PdpOptions& options) {
    if (log.empty()) raise(Errc::empty_log, "empty decision log");

    PDPTable table;
    table.variable = to_string(var);
    table.min_count = options.min_count;

    if (!options.edges.empty()) {
        if (options.edges.size() < 2 || !std::is_sorted(options.edges.begin(), options.edges.end()))
            raise(Errc::bad_range, "explicit edges must be sorted, length >= 2");
        table.edges = options.edges;
    } else {
        if (!(options.lo < options.hi)) raise(Errc::bad_range, "need lo < hi");
        if (options.integer_aligned) {
            // half-integer edges: each integer value in [lo, hi] gets one bin
            const std::int64_t lo = static_cast<std::int64_t>(std::ceil(options.lo));
            const std::int64_t hi = static_cast<std::int64_t>(std::floor(options.hi));
            if (hi < lo) raise(Errc::bad_range, "integer-aligned range holds no integers");
            for (std::int64_t v = lo; v <= hi + 1; ++v)
                table.edges.push_back(static_cast<double>(v) - 0.5);
        } else {
            if (options.bins < 1) raise(Errc::bad_range, "need at least one bin");
            const double width = (options.hi - options.lo) / options.bins;
            for (int i = 0; i <= options.bins; ++i)
                table.edges.push_back(options.lo + width * i);
        }
    }

    const std::size_t n_bins = table.edges.size() - 1;
    table.counts.assign(n_bins, 0);
    std::vector<std::array<std::int64_t, kNumActions>> action_counts(
        n_bins, std::array<std::int64_t, kNumActions>{});

    for (const auto& d : log) {
        const double x = feature_of(d.state, var);
        // truncation: samples outside the edge span are dropped
        if (x < table.edges.front() || x > table.edges.back()) continue;
        std::size_t bin;
        if (x == table.edges.back()) {
            bin = n_bins - 1;  // right edge closes the last bin
        } else {
            bin = static_cast<std::size_t>(
                      std::upper_bound(table.edges.begin(), table.edges.end(), x) -
                      table.edges.begin()) - 1;
        }
        table.counts[bin] += 1;
        action_counts[bin][static_cast<std::size_t>(d.action)] += 1;
    }

    table.probs.assign(n_bins, {});
    table.reliable.assign(n_bins, 0);
    for (std::size_t i = 0; i < n_bins; ++i) {
        if (table.counts[i] > 0) {
            for (int a = 0; a < kNumActions; ++a)
                table.probs[i][static_cast<std::size_t>(a)] =
                    static_cast<double>(action_counts[i][static_cast<std::size_t>(a)]) /
                    static_cast<double>(table.counts[i]);
        }
        table.reliable[i] = table.counts[i] >= options.min_count ? 1 : 0;
    }
    return table;
}

inline PDPTable estimate_pdp(std::span<const Decision> log, StateVar var) {
    return estimate_pdp(log, var, default_pdp_options(var, log));
}

inline void write_pdp_csv(const PDPTable& table, const std::filesystem::path& path) {
    std::string out = "bin_lo,bin_hi,count,p_NN,p_NB,p_AN,p_AB,reliable\n";
    for (std::size_t i = 0; i < table.bins(); ++i) {
        out += format_double(table.edges[i]) + ',' + format_double(table.edges[i + 1]) + ',' +
               format_int(table.counts[i]);
        for (int a = 0; a < kNumActions; ++a)
            out += ',' + format_double(table.probs[i][static_cast<std::size_t>(a)]);
        out += ',' + format_int(table.reliable[i]) + '\n';
    }
    write_file_atomic(path, out);
}

inline std::vector<Decision> decisions_from_steps(std::span<const StepRecord> steps) {
    std::vector<Decision> log;
    log.reserve(steps.size());
    for (const auto& s : steps) log.push_back({s.state, s.action});
    return log;
}

}  // namespace mmlab
