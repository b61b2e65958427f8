#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmlab/agents.hpp"
#include "mmlab/csv.hpp"
#include "mmlab/dqn.hpp"
#include "mmlab/env.hpp"
#include "mmlab/eval.hpp"
#include "mmlab/pdp.hpp"
#include "mmlab/synthetic.hpp"
#include "mmlab/ticks.hpp"

namespace mmlab {

// Feature statistics frozen from the training split. The account features
// (inventory, d_inv_value) only take interesting values under a policy that
// actually trades, so the stats come from a capped fixed-quoter rollout
// rather than from raw market data.
inline NormStats compute_norm_stats(std::span<const TickSeries> train_sessions,
                                    const EnvConfig& config, std::int64_t max_inv = 5) {
    const AgentSpec agent = AgentSpec::fawc(max_inv);
    Rng rng(0);
    std::vector<StateVector> samples;
    for (const TickSeries& series : train_sessions) {
        MarketEnv env(series, config);
        StateVector s = env.reset();
        samples.push_back(s);
        while (!env.done()) {
            s = env.step_action(act(agent, s, rng)).state;
            samples.push_back(s);
        }
    }
    return NormStats::from_samples(samples);
}

// Builds the validation callback used during training: greedy backtest on the
// validation sessions, then Sharpe and mean daily trade count.
inline ValidateFn make_validation(std::span<const TickSeries> val_sessions,
                                  const EnvConfig& config, std::uint64_t seed) {
    std::vector<TickSeries> sessions(val_sessions.begin(), val_sessions.end());
    return [sessions, config, seed](const Checkpoint& c) -> std::optional<ValStats> {
        const BacktestReport report =
            backtest(AgentSpec::drla(c), sessions, config, seed);
        ValStats v;
        const Metrics m = summarize(report);
        v.sharpe = m.sharpe;
        v.daily_trades = report.sessions.empty()
                             ? 0.0
                             : static_cast<double>(report.total_trades()) /
                                   static_cast<double>(report.sessions.size());
        return v;
    };
}

struct ReproParams {
    std::size_t sessions = 12;       // 5/2/5 needs twelve trading days
    SyntheticConfig synth;           // per-session template; seed is derived per session
    SplitCounts split;
    EnvConfig env;
    TrainConfig train_cfg;
    std::uint64_t seed = 1;
    std::int64_t fawc_max_inv = 5;
    double min_daily_trades = 50.0;
    int jobs = 1;
};

struct ReproResult {
    std::vector<TickSeries> train_sessions, val_sessions, test_sessions;
    TrainResult training;
    SelectionResult selection;
    BacktestReport report_fa, report_fawc, report_drla;
    Metrics metrics_fa, metrics_fawc, metrics_drla;
};

// generate `count` consecutive trading days from one root seed
inline std::vector<TickSeries> gen_sessions(const SyntheticConfig& base, std::size_t count,
                                            std::uint64_t seed) {
    std::vector<TickSeries> sessions;
    sessions.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SyntheticConfig cfg = base;
        cfg.seed = derive_seed(seed, 100 + i);
        cfg.start_time_ms = base.start_time_ms + static_cast<std::int64_t>(i) * 86400000;
        sessions.push_back(gen_synthetic(cfg));
    }
    return sessions;
}

// The end-to-end protocol on synthetic data: generate sessions, split
// chronologically, freeze normalization stats on the training split, run the
// training loop with validation checkpoints, select the model on the
// validation set, and compare the selected agent against the fixed baselines
// on the test set.
inline ReproResult run_repro(const ReproParams& params) {
    ReproResult res;

    auto sessions = gen_sessions(params.synth, params.sessions, params.seed);
    SessionSplit split = split_sessions(std::move(sessions), params.split);
    res.train_sessions = std::move(split.train);
    res.val_sessions = std::move(split.val);
    res.test_sessions = std::move(split.test);

    TrainConfig cfg = params.train_cfg;
    cfg.seed = derive_seed(params.seed, 7);
    cfg.norm = compute_norm_stats(res.train_sessions, params.env, params.fawc_max_inv);

    std::vector<MarketEnv> envs;
    envs.reserve(res.train_sessions.size());
    for (const auto& s : res.train_sessions) envs.emplace_back(s, params.env);
    std::vector<EpisodicEnv*> episode_ptrs;
    for (auto& e : envs) episode_ptrs.push_back(&e);

    res.training = train(episode_ptrs, cfg,
                         make_validation(res.val_sessions, params.env, params.seed));
    res.selection = select_model(res.training.checkpoints, params.min_daily_trades);
    const Checkpoint& best = res.training.checkpoints[res.selection.index];

    res.report_drla =
        backtest(AgentSpec::drla(best), res.test_sessions, params.env, params.seed, params.jobs);
    res.report_fa =
        backtest(AgentSpec::fa(), res.test_sessions, params.env, params.seed, params.jobs);
    res.report_fawc = backtest(AgentSpec::fawc(params.fawc_max_inv), res.test_sessions,
                               params.env, params.seed, params.jobs);
    res.metrics_drla = summarize(res.report_drla);
    res.metrics_fa = summarize(res.report_fa);
    res.metrics_fawc = summarize(res.report_fawc);
    return res;
}

// ---------------------------------------------------------------------------
// Artifact writing, shared by the CLI subcommands.
// ---------------------------------------------------------------------------

inline void write_report_dir(const BacktestReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json index;
    index["tick_size"] = report.tick_size;
    index["sessions"] = nlohmann::json::array();
    for (const auto& s : report.sessions) {
        write_step_log_csv(s, dir / ("steps_" + s.session_id + ".csv"));
        write_plot_csv(s, dir / ("plot_" + s.session_id + ".csv"));
        index["sessions"].push_back({{"id", s.session_id},
                                     {"steps", "steps_" + s.session_id + ".csv"},
                                     {"trading_times", s.trading_times},
                                     {"final_wealth_ticks", s.final_wealth}});
    }
    write_file_atomic(dir / "report.json", index.dump(2) + "\n");
}

inline BacktestReport read_report_dir(const std::filesystem::path& dir) {
    const auto index = nlohmann::json::parse(read_file(dir / "report.json"));
    BacktestReport report;
    report.tick_size = index.at("tick_size").get<double>();
    for (const auto& entry : index.at("sessions")) {
        const std::string id = entry.at("id").get<std::string>();
        auto steps = read_step_log_csv(dir / entry.at("steps").get<std::string>());
        report.sessions.push_back(session_from_steps(id, std::move(steps)));
    }
    return report;
}

inline void write_pdp_tables(std::span<const Decision> log, const std::filesystem::path& dir,
                             std::int64_t min_count = 100) {
    std::filesystem::create_directories(dir);
    for (int v = 0; v < StateVector::kDim; ++v) {
        const StateVar var = static_cast<StateVar>(v);
        PdpOptions opt = default_pdp_options(var, log);
        opt.min_count = min_count;
        write_pdp_csv(estimate_pdp(log, var, opt), dir / ("pdp_" + to_string(var) + ".csv"));
    }
}

}  // namespace mmlab
