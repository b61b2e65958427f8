#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "mmlab/agents.hpp"
#include "mmlab/csv.hpp"
#include "mmlab/env.hpp"
#include "mmlab/error.hpp"
#include "mmlab/ticks.hpp"

namespace mmlab {

// One session's backtest: the full step log plus the paths the plots and
// metrics need.
struct SessionResult {
    std::string session_id;
    std::vector<StepRecord> steps;
    std::vector<double> cash_path;       // ticks, after each step
    std::vector<double> inv_value_path;  // ticks
    std::vector<double> wealth_path;     // ticks
    std::vector<std::int64_t> inventory_path;
    std::int64_t trading_times = 0;  // fills, both sides counted
    double final_wealth = 0.0;       // ticks
};

struct BacktestReport {
    double tick_size = 1.0;
    std::vector<SessionResult> sessions;

    std::int64_t total_trades() const {
        std::int64_t n = 0;
        for (const auto& s : sessions) n += s.trading_times;
        return n;
    }
    double total_wealth_change() const {  // ticks
        double w = 0.0;
        for (const auto& s : sessions) w += s.final_wealth;
        return w;
    }
};

namespace detail {

inline SessionResult backtest_session(const AgentSpec& agent, const TickSeries& series,
                                      const EnvConfig& config, std::uint64_t seed) {
    SessionResult res;
    res.session_id = series.session_id;
    MarketEnv env(series, config);
    Rng rng(derive_seed(seed, 0xBAC7));
    StateVector s = env.reset();
    while (!env.done()) {
        const std::int64_t t = static_cast<std::int64_t>(env.cursor());
        const Action a = act(agent, s, rng);
        const auto out = env.step_action(a);
        const auto& acct = env.account();

        StepRecord rec;
        rec.t = t;
        rec.state = s;
        rec.action = a;
        rec.match_ask = out.fill.match_ask;
        rec.match_bid = out.fill.match_bid;
        rec.d_cash = out.d_cash;
        rec.d_inv_value = out.d_inv_value;
        rec.reward = out.reward;
        rec.inventory = acct.inventory;
        rec.wealth = acct.wealth();
        res.steps.push_back(rec);

        res.cash_path.push_back(acct.cash());
        res.inv_value_path.push_back(acct.inv_value());
        res.wealth_path.push_back(acct.wealth());
        res.inventory_path.push_back(acct.inventory);
        res.trading_times += out.fill.fills();
        s = out.state;
    }
    res.final_wealth = env.account().wealth();
    return res;
}

}  // namespace detail

// Runs the agent over each session in order. Sessions are independent, so a
// worker pool may fan them out; results land in session order either way.
inline BacktestReport backtest(const AgentSpec& agent, std::span<const TickSeries> sessions,
                               const EnvConfig& config, std::uint64_t seed = 0, int jobs = 1) {
    BacktestReport report;
    if (sessions.empty()) return report;
    report.tick_size = sessions.front().tick_size;
    report.sessions.resize(sessions.size());

    if (jobs <= 1 || sessions.size() == 1) {
        for (std::size_t i = 0; i < sessions.size(); ++i)
            report.sessions[i] = detail::backtest_session(agent, sessions[i], config, seed);
        return report;
    }

    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), sessions.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= sessions.size()) return;
                report.sessions[i] = detail::backtest_session(agent, sessions[i], config, seed);
            }
        });
    }
    for (auto& t : pool) t.join();
    return report;
}

// Annualized Sharpe of a daily P&L series: mean over sample std, times
// sqrt(252), zero risk-free rate.
inline double annualized_sharpe(std::span<const double> daily_pnl) {
    if (daily_pnl.size() < 2)
        raise(Errc::too_few_days, "need at least 2 days, got " +
                                      format_int(static_cast<std::int64_t>(daily_pnl.size())));
    double mean = 0.0;
    for (double v : daily_pnl) mean += v;
    mean /= static_cast<double>(daily_pnl.size());
    double ss = 0.0;
    for (double v : daily_pnl) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(daily_pnl.size() - 1));
    if (sd == 0.0) raise(Errc::zero_variance, "daily P&L has zero variance");
    return mean / sd * std::sqrt(252.0);
}

// Imbalance of inventory: ln of upper area over lower area of the inventory
// path, step-function integration over unit tick intervals. Both areas are
// floored at 1e-9 so one-sided paths stay finite and the measure stays exactly
// antisymmetric.
inline double imbalance_ratio(std::span<const std::int64_t> inventory_path) {
    if (inventory_path.empty()) raise(Errc::empty_log, "empty inventory path");
    constexpr double kAreaFloor = 1e-9;
    double upper = 0.0, lower = 0.0;
    for (const std::int64_t v : inventory_path) {
        if (v > 0) upper += static_cast<double>(v);
        else lower += static_cast<double>(-v);
    }
    return std::log(std::max(upper, kAreaFloor) / std::max(lower, kAreaFloor));
}

struct Metrics {
    std::optional<double> sharpe;      // absent: < 2 sessions or zero variance
    double imb = 0.0;
    std::optional<double> avg_profit;  // currency per trade; absent when no trades
    std::int64_t trading_times = 0;
};

inline Metrics summarize(const BacktestReport& report) {
    Metrics m;
    m.trading_times = report.total_trades();

    std::vector<double> daily;  // currency
    std::vector<std::int64_t> inv_concat;
    for (const auto& s : report.sessions) {
        daily.push_back(s.final_wealth * report.tick_size);
        inv_concat.insert(inv_concat.end(), s.inventory_path.begin(), s.inventory_path.end());
    }
    if (daily.size() >= 2) {
        try {
            m.sharpe = annualized_sharpe(daily);
        } catch (const Error& e) {
            if (e.code() != Errc::zero_variance) throw;
        }
    }
    if (!inv_concat.empty()) m.imb = imbalance_ratio(inv_concat);
    if (m.trading_times > 0)
        m.avg_profit = report.total_wealth_change() * report.tick_size /
                       static_cast<double>(m.trading_times);
    return m;
}

// Validation-gated model selection: drop checkpoints whose daily trading
// number is not larger than min_daily_trades, take the best Sharpe among the
// rest. If nothing survives, fall back to the most active checkpoint and say
// so.
struct SelectionResult {
    std::size_t index = 0;
    bool fallback_warning = false;
};

inline SelectionResult select_model(std::span<const Checkpoint> checkpoints,
                                    double min_daily_trades = 50.0) {
    if (checkpoints.empty()) raise(Errc::no_checkpoints, "no checkpoints to select from");

    auto trades_of = [](const Checkpoint& c) { return c.val ? c.val->daily_trades : 0.0; };
    auto sharpe_of = [](const Checkpoint& c) -> std::optional<double> {
        return c.val ? c.val->sharpe : std::nullopt;
    };

    SelectionResult res;
    bool found = false;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (trades_of(checkpoints[i]) <= min_daily_trades) continue;
        if (!found) {
            res.index = i;
            found = true;
            continue;
        }
        const auto cur = sharpe_of(checkpoints[res.index]);
        const auto cand = sharpe_of(checkpoints[i]);
        if (cand && (!cur || *cand > *cur)) res.index = i;
    }
    if (found) return res;

    res.fallback_warning = true;
    res.index = 0;
    for (std::size_t i = 1; i < checkpoints.size(); ++i)
        if (trades_of(checkpoints[i]) > trades_of(checkpoints[res.index])) res.index = i;
    return res;
}

// ---------------------------------------------------------------------------
// File surfaces: step logs, plot data, report and metrics JSON/CSV.
// ---------------------------------------------------------------------------

inline void write_step_log_csv(const SessionResult& session, const std::filesystem::path& path) {
    std::string out = step_log_header() + "\n";
    for (const auto& rec : session.steps) out += to_csv_row(rec) + "\n";
    write_file_atomic(path, out);
}

inline std::vector<StepRecord> read_step_log_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::bad_config, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) raise(Errc::empty_log, path.string() + " is empty");
    std::vector<StepRecord> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(step_record_from_csv(line));
    }
    return rows;
}

// wealth / cash / inventory-value / inventory vs time, one file per session
inline void write_plot_csv(const SessionResult& session, const std::filesystem::path& path) {
    std::string out = "t,wealth,cash,inv_value,inventory\n";
    for (std::size_t i = 0; i < session.steps.size(); ++i) {
        out += format_int(session.steps[i].t) + ',' + format_double(session.wealth_path[i]) +
               ',' + format_double(session.cash_path[i]) + ',' +
               format_double(session.inv_value_path[i]) + ',' +
               format_int(session.inventory_path[i]) + '\n';
    }
    write_file_atomic(path, out);
}

// Rebuilds a session result from its step log; paths are reconstructed by
// accumulating the logged deltas.
inline SessionResult session_from_steps(std::string session_id, std::vector<StepRecord> steps) {
    SessionResult res;
    res.session_id = std::move(session_id);
    res.steps = std::move(steps);
    double cash = 0.0, inv_value = 0.0;
    for (const auto& rec : res.steps) {
        cash += rec.d_cash;
        inv_value += rec.d_inv_value;
        res.cash_path.push_back(cash);
        res.inv_value_path.push_back(inv_value);
        res.wealth_path.push_back(rec.wealth);
        res.inventory_path.push_back(rec.inventory);
        res.trading_times += (rec.match_ask ? 1 : 0) + (rec.match_bid ? 1 : 0);
    }
    if (!res.steps.empty()) res.final_wealth = res.steps.back().wealth;
    return res;
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
    nlohmann::json j;
    j["sharpe"] = m.sharpe ? nlohmann::json(*m.sharpe) : nlohmann::json(nullptr);
    j["imb"] = m.imb;
    j["avg_profit"] = m.avg_profit ? nlohmann::json(*m.avg_profit) : nlohmann::json(nullptr);
    j["trading_times"] = m.trading_times;
    return j;
}

// CSV table shaped like the agent-comparison table: one metric per row, one
// agent per column.
inline std::string metrics_table_csv(const std::vector<std::pair<std::string, Metrics>>& agents) {
    std::string out = "metric";
    for (const auto& [name, _] : agents) out += ',' + name;
    out += '\n';
    auto row = [&](const std::string& label, auto getter) {
        out += label;
        for (const auto& [_, m] : agents) {
            out += ',';
            const auto v = getter(m);
            if (v) out += format_double(*v);
        }
        out += '\n';
    };
    row("sharpe", [](const Metrics& m) { return m.sharpe; });
    row("imbalance_ratio",
        [](const Metrics& m) { return std::optional<double>(m.imb); });
    row("avg_profit", [](const Metrics& m) { return m.avg_profit; });
    row("trading_times", [](const Metrics& m) {
        return std::optional<double>(static_cast<double>(m.trading_times));
    });
    return out;
}

}  // namespace mmlab
