// mmlab command-line driver: synthetic data generation, CSV ingestion, DQN
// training, backtesting, metrics, partial-dependence tables, and the
// end-to-end `repro` pipeline. Every run writes its fully resolved
// configuration (seed included) next to its outputs so it can be replayed.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmlab/mmlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    // data
    std::string data_dir;
    std::string out_dir;
    double tick_size = 1.0;
    // synthetic generation
    std::uint64_t seed = 1;
    std::size_t sessions = 12;
    std::int64_t ticks = 10000;
    std::string mid_model = "mean-reverting";
    double reversion_strength = 0.5;
    double drift = 0.0;
    std::int64_t base_spread = 2;
    std::int64_t depth_scale = 10;
    double noise_amplitude = 2.0;
    // environment
    std::string reward = "punish";
    double commission = 1.0;
    int vol_window = 50;
    int warmup = 50;
    bool fill_on_touch = false;
    bool liquidate_at_close = false;
    bool commission_in_reward = true;
    // split
    std::size_t split_train = 5, split_val = 2, split_test = 5;
    // training
    int epochs = 10;
    double alpha = 1e-3;
    double gamma = 0.95;
    double tau = 0.05;
    double epsilon = 1.0;
    std::size_t buffer_capacity = 100;
    std::size_t batch_size = 64;
    std::int64_t eval_every = 5000;
    bool classic_replay = false;
    std::vector<int> hidden = {64, 64};
    double min_daily_trades = 50.0;
    // backtest
    std::string agent = "fa";
    std::int64_t max_inv = 5;
    std::string checkpoint;
    int jobs = 1;
    // pdp
    std::int64_t min_count = 100;
};

json to_json(const RunConfig& c) {
    return json{{"data", c.data_dir},
                {"out", c.out_dir},
                {"tick_size", c.tick_size},
                {"seed", c.seed},
                {"sessions", c.sessions},
                {"ticks", c.ticks},
                {"mid_model", c.mid_model},
                {"reversion_strength", c.reversion_strength},
                {"drift", c.drift},
                {"base_spread", c.base_spread},
                {"depth_scale", c.depth_scale},
                {"noise_amplitude", c.noise_amplitude},
                {"reward", c.reward},
                {"commission", c.commission},
                {"vol_window", c.vol_window},
                {"warmup", c.warmup},
                {"fill_on_touch", c.fill_on_touch},
                {"liquidate_at_close", c.liquidate_at_close},
                {"commission_in_reward", c.commission_in_reward},
                {"split_train", c.split_train},
                {"split_val", c.split_val},
                {"split_test", c.split_test},
                {"epochs", c.epochs},
                {"alpha", c.alpha},
                {"gamma", c.gamma},
                {"tau", c.tau},
                {"epsilon", c.epsilon},
                {"buffer_capacity", c.buffer_capacity},
                {"batch_size", c.batch_size},
                {"eval_every", c.eval_every},
                {"classic_replay", c.classic_replay},
                {"hidden", c.hidden},
                {"min_daily_trades", c.min_daily_trades},
                {"agent", c.agent},
                {"max_inv", c.max_inv},
                {"checkpoint", c.checkpoint},
                {"jobs", c.jobs},
                {"min_count", c.min_count}};
}

// Applies only the keys present in the file; everything else keeps defaults.
void apply_config_file(const fs::path& path, RunConfig& c) {
    json j;
    try {
        j = json::parse(mmlab::read_file(path));
    } catch (const json::exception& e) {
        mmlab::raise(mmlab::Errc::bad_config, path.string() + ": " + e.what());
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("data", c.data_dir);
    get("out", c.out_dir);
    get("tick_size", c.tick_size);
    get("seed", c.seed);
    get("sessions", c.sessions);
    get("ticks", c.ticks);
    get("mid_model", c.mid_model);
    get("reversion_strength", c.reversion_strength);
    get("drift", c.drift);
    get("base_spread", c.base_spread);
    get("depth_scale", c.depth_scale);
    get("noise_amplitude", c.noise_amplitude);
    get("reward", c.reward);
    get("commission", c.commission);
    get("vol_window", c.vol_window);
    get("warmup", c.warmup);
    get("fill_on_touch", c.fill_on_touch);
    get("liquidate_at_close", c.liquidate_at_close);
    get("commission_in_reward", c.commission_in_reward);
    get("split_train", c.split_train);
    get("split_val", c.split_val);
    get("split_test", c.split_test);
    get("epochs", c.epochs);
    get("alpha", c.alpha);
    get("gamma", c.gamma);
    get("tau", c.tau);
    get("epsilon", c.epsilon);
    get("buffer_capacity", c.buffer_capacity);
    get("batch_size", c.batch_size);
    get("eval_every", c.eval_every);
    get("classic_replay", c.classic_replay);
    get("hidden", c.hidden);
    get("min_daily_trades", c.min_daily_trades);
    get("agent", c.agent);
    get("max_inv", c.max_inv);
    get("checkpoint", c.checkpoint);
    get("jobs", c.jobs);
    get("min_count", c.min_count);
}

mmlab::SyntheticConfig synth_config(const RunConfig& c) {
    mmlab::SyntheticConfig s;
    s.n_ticks = c.ticks;
    s.seed = c.seed;
    s.mid_model = mmlab::mid_model_from_string(c.mid_model);
    s.reversion_strength = c.reversion_strength;
    s.drift = c.drift;
    s.base_spread = c.base_spread;
    s.depth_scale = c.depth_scale;
    s.noise_amplitude = c.noise_amplitude;
    return s;
}

mmlab::EnvConfig env_config(const RunConfig& c) {
    mmlab::EnvConfig e;
    e.reward_kind = mmlab::reward_kind_from_string(c.reward);
    e.commission_per_fill = c.commission;
    e.vol_window = c.vol_window;
    e.warmup = std::max(c.warmup, std::max(c.vol_window, e.d_inv_lag));
    e.fill_on_touch = c.fill_on_touch;
    e.liquidate_at_close = c.liquidate_at_close;
    e.commission_in_reward = c.commission_in_reward;
    return e;
}

mmlab::TrainConfig train_config(const RunConfig& c) {
    mmlab::TrainConfig t;
    t.alpha = c.alpha;
    t.gamma = c.gamma;
    t.tau = c.tau;
    t.epsilon = c.epsilon;
    t.buffer_capacity = c.buffer_capacity;
    t.batch_size = c.batch_size;
    t.epochs = c.epochs;
    t.eval_every = c.eval_every;
    t.classic_replay = c.classic_replay;
    t.hidden = c.hidden;
    t.seed = c.seed;
    return t;
}

std::vector<mmlab::TickSeries> load_sessions(const std::string& dir, double tick_size) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        mmlab::raise(mmlab::Errc::missing_field, "no .csv session files under " + dir);
    std::vector<mmlab::TickSeries> sessions;
    sessions.reserve(files.size());
    for (const auto& f : files) sessions.push_back(mmlab::parse_tick_csv(f, tick_size));
    std::sort(sessions.begin(), sessions.end(),
              [](const auto& a, const auto& b) { return a.session_id < b.session_id; });
    return sessions;
}

void write_resolved_config(const RunConfig& c, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    mmlab::write_file_atomic(out_dir / "resolved_config.json", to_json(c).dump(2) + "\n");
}

void write_training_artifacts(const mmlab::TrainResult& result, const fs::path& out_dir) {
    fs::create_directories(out_dir / "checkpoints");
    std::string log = mmlab::train_log_header() + "\n";
    for (const auto& row : result.log) log += mmlab::to_csv_row(row) + "\n";
    mmlab::write_file_atomic(out_dir / "training_log.csv", log);
    for (const auto& c : result.checkpoints)
        mmlab::save_checkpoint(
            c, out_dir / "checkpoints" /
                   ("checkpoint_" + mmlab::format_int(c.train_step) + ".json"));
}

mmlab::AgentSpec agent_from_config(const RunConfig& c) {
    if (c.agent == "fa") return mmlab::AgentSpec::fa();
    if (c.agent == "fawc") return mmlab::AgentSpec::fawc(c.max_inv);
    if (c.agent == "drla") {
        if (c.checkpoint.empty())
            mmlab::raise(mmlab::Errc::bad_config, "drla agent needs --checkpoint");
        return mmlab::AgentSpec::drla_from_file(c.checkpoint);
    }
    mmlab::raise(mmlab::Errc::bad_config, "unknown agent '" + c.agent + "'");
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int cmd_gen(const RunConfig& c) {
    if (c.out_dir.empty()) mmlab::raise(mmlab::Errc::bad_config, "gen needs --out");
    write_resolved_config(c, c.out_dir);
    const auto sessions = mmlab::gen_sessions(synth_config(c), c.sessions, c.seed);
    for (const auto& s : sessions)
        mmlab::write_tick_csv(s, fs::path(c.out_dir) / ("synth_" + s.session_id + ".csv"));
    std::printf("gen: wrote %zu sessions x %lld ticks to %s\n", sessions.size(),
                static_cast<long long>(c.ticks), c.out_dir.c_str());
    return 0;
}

int cmd_ingest(const RunConfig& c) {
    if (c.data_dir.empty()) mmlab::raise(mmlab::Errc::bad_config, "ingest needs --data");
    const auto sessions = load_sessions(c.data_dir, c.tick_size);
    std::size_t rows = 0;
    for (const auto& s : sessions) {
        std::printf("ingest: %s  %zu ticks\n", s.session_id.c_str(), s.size());
        rows += s.size();
    }
    std::printf("ingest: %zu sessions, %zu ticks total, all invariants hold\n", sessions.size(),
                rows);
    return 0;
}

int cmd_train(const RunConfig& c) {
    if (c.data_dir.empty() || c.out_dir.empty())
        mmlab::raise(mmlab::Errc::bad_config, "train needs --data and --out");
    write_resolved_config(c, c.out_dir);

    auto sessions = load_sessions(c.data_dir, c.tick_size);
    const auto split = mmlab::split_sessions(
        std::move(sessions), {c.split_train, c.split_val, c.split_test});
    const mmlab::EnvConfig env_cfg = env_config(c);

    mmlab::TrainConfig cfg = train_config(c);
    cfg.seed = mmlab::derive_seed(c.seed, 7);
    cfg.norm = mmlab::compute_norm_stats(split.train, env_cfg, c.max_inv);

    std::vector<mmlab::MarketEnv> envs;
    envs.reserve(split.train.size());
    for (const auto& s : split.train) envs.emplace_back(s, env_cfg);
    std::vector<mmlab::EpisodicEnv*> episodes;
    for (auto& e : envs) episodes.push_back(&e);

    const auto result =
        mmlab::train(episodes, cfg, mmlab::make_validation(split.val, env_cfg, c.seed));
    write_training_artifacts(result, c.out_dir);

    const auto selection = mmlab::select_model(result.checkpoints, c.min_daily_trades);
    mmlab::save_checkpoint(result.checkpoints[selection.index],
                           fs::path(c.out_dir) / "checkpoint_best.json");
    if (selection.fallback_warning)
        std::fprintf(stderr,
                     "train: warning: no checkpoint cleared %g daily validation trades; "
                     "kept the most active one\n",
                     c.min_daily_trades);
    std::printf("train: %lld steps, %zu checkpoints, best at step %lld\n",
                static_cast<long long>(result.steps), result.checkpoints.size(),
                static_cast<long long>(result.checkpoints[selection.index].train_step));
    return 0;
}

int cmd_backtest(const RunConfig& c) {
    if (c.data_dir.empty() || c.out_dir.empty())
        mmlab::raise(mmlab::Errc::bad_config, "backtest needs --data and --out");
    write_resolved_config(c, c.out_dir);
    const auto sessions = load_sessions(c.data_dir, c.tick_size);
    const auto report =
        mmlab::backtest(agent_from_config(c), sessions, env_config(c), c.seed, c.jobs);
    mmlab::write_report_dir(report, c.out_dir);
    std::printf("backtest: agent=%s sessions=%zu trades=%lld wealth=%s ticks\n",
                c.agent.c_str(), report.sessions.size(),
                static_cast<long long>(report.total_trades()),
                mmlab::format_double(report.total_wealth_change()).c_str());
    return 0;
}

int cmd_metrics(const RunConfig& c) {
    if (c.data_dir.empty() || c.out_dir.empty())
        mmlab::raise(mmlab::Errc::bad_config, "metrics needs --report (via --data) and --out");
    const auto report = mmlab::read_report_dir(c.data_dir);
    const auto metrics = mmlab::summarize(report);
    fs::create_directories(c.out_dir);
    mmlab::write_file_atomic(fs::path(c.out_dir) / "metrics.json",
                             mmlab::metrics_to_json(metrics).dump(2) + "\n");
    mmlab::write_file_atomic(fs::path(c.out_dir) / "metrics_table.csv",
                             mmlab::metrics_table_csv({{c.agent, metrics}}));
    std::printf("metrics: trades=%lld sharpe=%s imb=%s\n",
                static_cast<long long>(metrics.trading_times),
                metrics.sharpe ? mmlab::format_double(*metrics.sharpe).c_str() : "n/a",
                mmlab::format_double(metrics.imb).c_str());
    return 0;
}

int cmd_pdp(const RunConfig& c) {
    if (c.data_dir.empty() || c.out_dir.empty())
        mmlab::raise(mmlab::Errc::bad_config, "pdp needs --report (via --data) and --out");
    const auto report = mmlab::read_report_dir(c.data_dir);
    std::vector<mmlab::Decision> log;
    for (const auto& s : report.sessions) {
        const auto d = mmlab::decisions_from_steps(s.steps);
        log.insert(log.end(), d.begin(), d.end());
    }
    mmlab::write_pdp_tables(log, c.out_dir, c.min_count);
    std::printf("pdp: %zu decisions -> %s\n", log.size(), c.out_dir.c_str());
    return 0;
}

int cmd_repro(const RunConfig& c) {
    if (c.out_dir.empty()) mmlab::raise(mmlab::Errc::bad_config, "repro needs --out");
    const fs::path out(c.out_dir);
    write_resolved_config(c, out);

    mmlab::ReproParams params;
    params.sessions = c.sessions;
    params.synth = synth_config(c);
    params.split = {c.split_train, c.split_val, c.split_test};
    params.env = env_config(c);
    params.train_cfg = train_config(c);
    params.seed = c.seed;
    params.fawc_max_inv = c.max_inv;
    params.min_daily_trades = c.min_daily_trades;
    params.jobs = c.jobs;

    const auto res = mmlab::run_repro(params);

    fs::create_directories(out / "data");
    auto dump_sessions = [&](const std::vector<mmlab::TickSeries>& group) {
        for (const auto& s : group)
            mmlab::write_tick_csv(s, out / "data" / ("synth_" + s.session_id + ".csv"));
    };
    dump_sessions(res.train_sessions);
    dump_sessions(res.val_sessions);
    dump_sessions(res.test_sessions);

    write_training_artifacts(res.training, out);
    mmlab::save_checkpoint(res.training.checkpoints[res.selection.index],
                           out / "checkpoint_best.json");
    if (res.selection.fallback_warning)
        std::fprintf(stderr, "repro: warning: model selection fell back to the most active "
                             "checkpoint\n");

    mmlab::write_report_dir(res.report_fa, out / "test_fa");
    mmlab::write_report_dir(res.report_fawc, out / "test_fawc");
    mmlab::write_report_dir(res.report_drla, out / "test_drla");

    std::vector<mmlab::Decision> log;
    for (const auto& s : res.report_drla.sessions) {
        const auto d = mmlab::decisions_from_steps(s.steps);
        log.insert(log.end(), d.begin(), d.end());
    }
    mmlab::write_pdp_tables(log, out / "pdp", c.min_count);

    json metrics;
    metrics["seed"] = c.seed;
    metrics["selected_checkpoint_step"] = res.training.checkpoints[res.selection.index].train_step;
    metrics["selection_fallback"] = res.selection.fallback_warning;
    metrics["agents"]["fa"] = mmlab::metrics_to_json(res.metrics_fa);
    metrics["agents"]["fawc"] = mmlab::metrics_to_json(res.metrics_fawc);
    metrics["agents"]["drla"] = mmlab::metrics_to_json(res.metrics_drla);
    mmlab::write_file_atomic(out / "metrics.json", metrics.dump(2) + "\n");
    mmlab::write_file_atomic(out / "metrics_table.csv",
                             mmlab::metrics_table_csv({{"fa", res.metrics_fa},
                                                       {"fawc", res.metrics_fawc},
                                                       {"drla", res.metrics_drla}}));

    std::printf("repro: drla sharpe=%s fa sharpe=%s drla imb=%s fa imb=%s\n",
                res.metrics_drla.sharpe ? mmlab::format_double(*res.metrics_drla.sharpe).c_str()
                                        : "n/a",
                res.metrics_fa.sharpe ? mmlab::format_double(*res.metrics_fa.sharpe).c_str()
                                      : "n/a",
                mmlab::format_double(res.metrics_drla.imb).c_str(),
                mmlab::format_double(res.metrics_fa.imb).c_str());
    return 0;
}

int dispatch(int argc, char** argv) {
    RunConfig cfg;

    // first pass: pick up --config so the file's values become the defaults
    // the real parse can then override
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string_view(argv[i]) == "--config") {
            apply_config_file(argv[i + 1], cfg);
            break;
        }
    }

    CLI::App app{"mmlab: a desk-scale market-making reinforcement-learning laboratory"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "flat JSON config; flags override its values");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat JSON config; flags override its values");
        sub->add_option("--seed", cfg.seed, "root seed for all randomness");
        sub->add_option("--data", cfg.data_dir, "input directory");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--tick-size", cfg.tick_size, "quote currency per tick");
        sub->add_option("--jobs", cfg.jobs, "worker threads for session fan-out");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate synthetic sessions");
    add_common(gen);
    gen->add_option("--sessions", cfg.sessions, "number of trading days");
    gen->add_option("--ticks", cfg.ticks, "ticks per session");
    gen->add_option("--mid-model", cfg.mid_model, "mean-reverting | trending | random-walk");
    gen->add_option("--reversion", cfg.reversion_strength, "mean-reversion strength");
    gen->add_option("--drift", cfg.drift, "trend drift, ticks/step");
    gen->add_option("--spread", cfg.base_spread, "base spread, ticks");
    gen->add_option("--depth", cfg.depth_scale, "book depth scale, contracts");

    CLI::App* ingest = app.add_subcommand("ingest", "validate session CSVs");
    add_common(ingest);

    CLI::App* train = app.add_subcommand("train", "run the DQN training loop");
    add_common(train);
    train->add_option("--epochs", cfg.epochs, "passes over the training sessions");
    train->add_option("--reward", cfg.reward, "sym | punish");
    train->add_option("--commission", cfg.commission, "ticks per fill");
    train->add_option("--alpha", cfg.alpha, "learning rate");
    train->add_option("--gamma", cfg.gamma, "discount");
    train->add_option("--tau", cfg.tau, "soft-update rate");
    train->add_option("--epsilon", cfg.epsilon, "initial explore rate");
    train->add_option("--buffer", cfg.buffer_capacity, "replay buffer capacity");
    train->add_option("--batch", cfg.batch_size, "update batch size");
    train->add_option("--eval-every", cfg.eval_every, "steps between checkpoints");
    train->add_flag("--classic-replay", cfg.classic_replay, "sliding-window replay");
    train->add_option("--max-inv", cfg.max_inv, "inventory cap for the stats rollout");

    CLI::App* backtest = app.add_subcommand("backtest", "run an agent over sessions");
    add_common(backtest);
    backtest->add_option("--agent", cfg.agent, "fa | fawc | drla");
    backtest->add_option("--max-inv", cfg.max_inv, "fawc inventory bound");
    backtest->add_option("--checkpoint", cfg.checkpoint, "drla checkpoint path");
    backtest->add_option("--reward", cfg.reward, "sym | punish");
    backtest->add_option("--commission", cfg.commission, "ticks per fill");

    CLI::App* metrics = app.add_subcommand("metrics", "summarize a backtest report");
    add_common(metrics);
    metrics->add_option("--agent", cfg.agent, "label for the metrics table");

    CLI::App* pdp = app.add_subcommand("pdp", "partial-dependence tables from a report");
    add_common(pdp);
    pdp->add_option("--min-count", cfg.min_count, "reliability threshold per bin");

    CLI::App* repro = app.add_subcommand("repro", "end-to-end synthetic pipeline");
    add_common(repro);
    repro->add_option("--sessions", cfg.sessions, "number of trading days");
    repro->add_option("--ticks", cfg.ticks, "ticks per session");
    repro->add_option("--epochs", cfg.epochs, "training epochs");
    repro->add_option("--reward", cfg.reward, "sym | punish");
    repro->add_option("--commission", cfg.commission, "ticks per fill");
    repro->add_option("--spread", cfg.base_spread, "base spread, ticks");
    repro->add_option("--max-inv", cfg.max_inv, "fawc baseline inventory bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems exit 2; --help exits 0
    }

    try {
        if (gen->parsed()) return cmd_gen(cfg);
        if (ingest->parsed()) return cmd_ingest(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (backtest->parsed()) return cmd_backtest(cfg);
        if (metrics->parsed()) return cmd_metrics(cfg);
        if (pdp->parsed()) return cmd_pdp(cfg);
        if (repro->parsed()) return cmd_repro(cfg);
    } catch (const mmlab::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
