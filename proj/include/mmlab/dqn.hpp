#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmlab/csv.hpp"
#include "mmlab/env.hpp"
#include "mmlab/error.hpp"
#include "mmlab/mlp.hpp"
#include "mmlab/replay.hpp"
#include "mmlab/rng.hpp"

namespace mmlab {

// Per-feature affine standardization, frozen from the training split.
struct NormStats {
    std::array<double, StateVector::kDim> mean{};
    std::array<double, StateVector::kDim> stddev{1.0, 1.0, 1.0, 1.0, 1.0};

    std::array<double, StateVector::kDim> normalize(const StateVector& s) const {
        auto x = s.as_array();
        for (int i = 0; i < StateVector::kDim; ++i) x[i] = (x[i] - mean[i]) / stddev[i];
        return x;
    }

    static NormStats from_samples(std::span<const StateVector> samples) {
        NormStats n;
        if (samples.empty()) return n;
        for (const auto& s : samples) {
            const auto a = s.as_array();
            for (int i = 0; i < StateVector::kDim; ++i) n.mean[i] += a[i];
        }
        for (int i = 0; i < StateVector::kDim; ++i)
            n.mean[i] /= static_cast<double>(samples.size());
        std::array<double, StateVector::kDim> ss{};
        for (const auto& s : samples) {
            const auto a = s.as_array();
            for (int i = 0; i < StateVector::kDim; ++i) {
                const double d = a[i] - n.mean[i];
                ss[i] += d * d;
            }
        }
        for (int i = 0; i < StateVector::kDim; ++i) {
            n.stddev[i] = std::sqrt(ss[i] / static_cast<double>(samples.size()));
            if (n.stddev[i] < 1e-8) n.stddev[i] = 1.0;  // constant feature: leave it centered
        }
        return n;
    }
};

// epsilon-greedy over a Q row; greedy ties break to the lowest action index
inline int select_action(std::span<const double> q, double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) raise(Errc::bad_config, "epsilon must be in [0,1]");
    if (q.empty()) raise(Errc::dimension_mismatch, "empty Q vector");
    if (epsilon > 0.0 && rng.uniform01() < epsilon)
        return static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(q.size()) - 1));
    int best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = static_cast<int>(a);
    return best;
}

// Per-batch diagnostics that feed the convergence log.
struct TdStats {
    double loss = 0.0;
    double mean_q = 0.0;
    double var_q = 0.0;
};

// MSE TD loss over a batch and its analytic gradient. The bootstrap term
// r + gamma * max_a' Q_target(s', a') is a constant with respect to the value
// parameters; terminal transitions use the bare reward as target. States in
// the batch are expected to be already normalized.
inline TdStats td_loss_and_grad(const MLPParams& params, const MLPParams& target_params,
                                std::span<const Transition> batch, double gamma,
                                MLPParams& grad_out) {
    if (batch.empty()) raise(Errc::empty_batch, "TD update needs a non-empty batch");
    if (!params.same_shape(target_params)) raise(Errc::shape_mismatch, "target shape mismatch");
    grad_out = MLPParams::zeros(params.dims);

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    TdStats stats;
    double sum_q = 0.0, sum_q2 = 0.0;

    ForwardTrace trace;
    std::vector<double> delta, delta_prev;
    for (const Transition& tr : batch) {
        const auto x = tr.s.as_array();
        const auto q = forward_trace(params, x, trace);
        if (tr.action < 0 || tr.action >= static_cast<int>(q.size()))
            raise(Errc::dimension_mismatch, "action index out of range");

        double y = tr.reward;
        if (!tr.terminal) {
            const auto x2 = tr.s_next.as_array();
            const auto qt = forward(target_params, x2);
            y += gamma * *std::max_element(qt.begin(), qt.end());
        }
        const double err = q[tr.action] - y;
        stats.loss += err * err * inv_n;
        sum_q += q[tr.action];
        sum_q2 += q[tr.action] * q[tr.action];

        // backprop: dL/dq is nonzero only at the played action
        delta.assign(q.size(), 0.0);
        delta[static_cast<std::size_t>(tr.action)] = 2.0 * err * inv_n;
        for (std::size_t l = params.layers(); l-- > 0;) {
            const auto& a_in = trace.act[l];
            auto& gw = grad_out.w[l];
            auto& gb = grad_out.b[l];
            const std::size_t rows = gb.size();
            const std::size_t cols = a_in.size();
            for (std::size_t i = 0; i < rows; ++i) {
                gb[i] += delta[i];
                double* grow = gw.data() + i * cols;
                for (std::size_t j = 0; j < cols; ++j) grow[j] += delta[i] * a_in[j];
            }
            if (l == 0) break;
            delta_prev.assign(cols, 0.0);
            const auto& wl = params.w[l];
            for (std::size_t i = 0; i < rows; ++i) {
                const double di = delta[i];
                if (di == 0.0) continue;
                const double* wrow = wl.data() + i * cols;
                for (std::size_t j = 0; j < cols; ++j) delta_prev[j] += di * wrow[j];
            }
            // rectifier gate: activations of layer l are post-ReLU
            for (std::size_t j = 0; j < cols; ++j)
                if (a_in[j] <= 0.0) delta_prev[j] = 0.0;
            delta.swap(delta_prev);
        }
    }
    const double n = static_cast<double>(batch.size());
    stats.mean_q = sum_q / n;
    stats.var_q = sum_q2 / n - stats.mean_q * stats.mean_q;
    return stats;
}

// convenience for tests: loss only
inline double td_loss(const MLPParams& params, const MLPParams& target_params,
                      std::span<const Transition> batch, double gamma) {
    if (batch.empty()) raise(Errc::empty_batch, "TD loss needs a non-empty batch");
    double loss = 0.0;
    for (const Transition& tr : batch) {
        const auto q = forward(params, tr.s.as_array());
        double y = tr.reward;
        if (!tr.terminal) {
            const auto qt = forward(target_params, tr.s_next.as_array());
            y += gamma * *std::max_element(qt.begin(), qt.end());
        }
        const double err = q[static_cast<std::size_t>(tr.action)] - y;
        loss += err * err;
    }
    return loss / static_cast<double>(batch.size());
}

struct TrainConfig {
    double alpha = 1e-3;
    enum class AlphaDecay { constant, one_over_t };
    AlphaDecay alpha_decay = AlphaDecay::constant;  // one_over_t: alpha / update index
    double epsilon = 1.0;        // start of the linear decay
    double epsilon_final = 0.01; // reached at the end of the first epoch
    double gamma = 0.95;
    double tau = 0.05;
    std::size_t buffer_capacity = 100;
    std::size_t batch_size = 64;
    int epochs = 10;
    std::int64_t eval_every = 5000;  // steps between validation checkpoints
    std::uint64_t seed = 1;
    bool classic_replay = false;  // sliding-window replay instead of fill-and-flush
    std::vector<int> hidden = {64, 64};
    NormStats norm;

    std::vector<int> layer_dims() const {
        std::vector<int> dims{StateVector::kDim};
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(kNumActions);
        return dims;
    }

    void validate() const {
        if (gamma < 0.0 || gamma >= 1.0) raise(Errc::bad_config, "gamma must be in [0,1)");
        if (tau <= 0.0 || tau > 1.0) raise(Errc::bad_config, "tau must be in (0,1]");
        if (epsilon < 0.0 || epsilon > 1.0) raise(Errc::bad_config, "epsilon must be in [0,1]");
        if (batch_size == 0 || batch_size > buffer_capacity)
            raise(Errc::bad_config, "batch_size must be in [1, buffer_capacity]");
        if (alpha <= 0.0) raise(Errc::bad_config, "alpha must be positive");
        if (epochs < 0) raise(Errc::bad_config, "epochs must be >= 0");
        if (eval_every <= 0) raise(Errc::bad_config, "eval_every must be positive");
        if (hidden.empty()) raise(Errc::bad_config, "need at least one hidden layer");
    }
};

// Validation summary attached to a checkpoint by the model-selection callback.
struct ValStats {
    std::optional<double> sharpe;
    double daily_trades = 0.0;
};

struct Checkpoint {
    int schema_version = 1;
    MLPParams params;
    NormStats norm;
    std::int64_t train_step = 0;
    std::optional<ValStats> val;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
    nlohmann::json j;
    j["schema_version"] = c.schema_version;
    j["layer_dims"] = c.params.dims;
    j["weights"] = c.params.w;
    j["biases"] = c.params.b;
    j["norm_mean"] = c.norm.mean;
    j["norm_std"] = c.norm.stddev;
    j["train_step"] = c.train_step;
    if (c.val) {
        j["val_daily_trades"] = c.val->daily_trades;
        if (c.val->sharpe) j["val_sharpe"] = *c.val->sharpe;
    }
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    Checkpoint c;
    try {
        c.schema_version = j.at("schema_version").get<int>();
        c.params.dims = j.at("layer_dims").get<std::vector<int>>();
        c.params.w = j.at("weights").get<std::vector<std::vector<double>>>();
        c.params.b = j.at("biases").get<std::vector<std::vector<double>>>();
        c.norm.mean = j.at("norm_mean").get<std::array<double, StateVector::kDim>>();
        c.norm.stddev = j.at("norm_std").get<std::array<double, StateVector::kDim>>();
        c.train_step = j.at("train_step").get<std::int64_t>();
        if (j.contains("val_daily_trades")) {
            ValStats v;
            v.daily_trades = j.at("val_daily_trades").get<double>();
            if (j.contains("val_sharpe")) v.sharpe = j.at("val_sharpe").get<double>();
            c.val = v;
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::bad_checkpoint, e.what());
    }
    if (c.params.dims.size() < 2 || c.params.dims.front() != StateVector::kDim ||
        c.params.dims.back() != kNumActions)
        raise(Errc::bad_checkpoint, "layer dims do not match the 5-feature, 4-action contract");
    if (c.params.w.size() != c.params.dims.size() - 1 ||
        c.params.b.size() != c.params.dims.size() - 1)
        raise(Errc::bad_checkpoint, "layer count mismatch");
    for (std::size_t l = 0; l + 1 < c.params.dims.size(); ++l) {
        const std::size_t wn =
            static_cast<std::size_t>(c.params.dims[l + 1]) * static_cast<std::size_t>(c.params.dims[l]);
        if (c.params.w[l].size() != wn ||
            c.params.b[l].size() != static_cast<std::size_t>(c.params.dims[l + 1]))
            raise(Errc::bad_checkpoint, "weight shape mismatch at layer " +
                                            format_int(static_cast<std::int64_t>(l)));
    }
    return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    write_file_atomic(path, checkpoint_to_json(c).dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::bad_checkpoint, path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

struct TrainLogRow {
    std::int64_t step = 0;
    double loss = 0.0;
    double mean_q = 0.0;
    double var_q = 0.0;
    double epsilon = 0.0;
};

inline std::string train_log_header() { return "step,loss,mean_Q,var_Q,epsilon"; }

inline std::string to_csv_row(const TrainLogRow& r) {
    return format_int(r.step) + ',' + format_double(r.loss) + ',' + format_double(r.mean_q) +
           ',' + format_double(r.var_q) + ',' + format_double(r.epsilon);
}

struct TrainResult {
    std::vector<Checkpoint> checkpoints;
    std::vector<TrainLogRow> log;
    MLPParams params;
    MLPParams target;
    std::int64_t steps = 0;
};

// Observer hook, mainly for tests and debugging.
struct StepEvent {
    int epoch = 0;
    std::size_t episode = 0;
    std::int64_t step = 0;
    StateVector state;
    int action = 0;
    double reward = 0.0;
};

using ValidateFn = std::function<std::optional<ValStats>(const Checkpoint&)>;
using StepObserver = std::function<void(const StepEvent&)>;

// The training loop: epsilon-greedy rollout with actions chosen by the slow
// (target) network, transitions buffered, a batch update against the value
// network each time the buffer fills, Polyak update of the target, buffer
// flushed. Episodes are shuffled each epoch. Fully deterministic for a fixed
// seed and episode set.
inline TrainResult train(std::span<EpisodicEnv* const> episodes, const TrainConfig& cfg,
                         const ValidateFn& validate = {}, const StepObserver& on_step = {}) {
    cfg.validate();
    if (episodes.empty()) raise(Errc::bad_config, "need at least one training session");

    Rng rng_shuffle(derive_seed(cfg.seed, 1));
    Rng rng_action(derive_seed(cfg.seed, 2));
    Rng rng_sample(derive_seed(cfg.seed, 3));

    TrainResult res;
    res.params = MLPParams::he_init(cfg.layer_dims(), derive_seed(cfg.seed, 0));
    res.target = res.params;
    ReplayBuffer buffer(cfg.buffer_capacity);

    std::size_t first_epoch_steps = 0;
    for (const EpisodicEnv* e : episodes) first_epoch_steps += e->length_hint();

    auto epsilon_at = [&](std::int64_t step) {
        if (first_epoch_steps == 0 || step >= static_cast<std::int64_t>(first_epoch_steps))
            return cfg.epsilon_final;
        const double frac = static_cast<double>(step) / static_cast<double>(first_epoch_steps);
        return cfg.epsilon + (cfg.epsilon_final - cfg.epsilon) * frac;
    };

    std::int64_t update_count = 0;
    auto record_checkpoint = [&](std::int64_t step) {
        Checkpoint c{1, res.params, cfg.norm, step, std::nullopt};
        if (validate) c.val = validate(c);
        res.checkpoints.push_back(std::move(c));
    };

    record_checkpoint(0);
    std::int64_t next_eval = cfg.eval_every;

    std::vector<std::size_t> order(episodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates shuffle of the episode order
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(
                rng_shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }
        for (const std::size_t ep_idx : order) {
            EpisodicEnv& env = *episodes[ep_idx];
            StateVector s = env.reset();
            bool done = false;
            while (!done) {
                const double eps = epsilon_at(res.steps);
                const auto q = forward(res.target, cfg.norm.normalize(s));
                const int a = select_action(q, eps, rng_action);
                const auto out = env.step(a);
                if (on_step) on_step({epoch, ep_idx, res.steps, s, a, out.reward});

                Transition tr;
                tr.s = StateVector::from_array(cfg.norm.normalize(s));
                tr.action = a;
                tr.s_next = StateVector::from_array(cfg.norm.normalize(out.state));
                tr.reward = out.reward;
                tr.terminal = out.done;
                buffer.push(std::move(tr));

                const bool do_update = cfg.classic_replay ? buffer.size() >= cfg.batch_size
                                                          : buffer.full();
                if (do_update) {
                    const auto batch = buffer.sample(cfg.batch_size, rng_sample);
                    MLPParams grad;
                    const TdStats stats =
                        td_loss_and_grad(res.params, res.target, batch, cfg.gamma, grad);
                    ++update_count;
                    const double alpha = cfg.alpha_decay == TrainConfig::AlphaDecay::one_over_t
                                             ? cfg.alpha / static_cast<double>(update_count)
                                             : cfg.alpha;
                    sgd_apply(res.params, grad, alpha);
                    soft_update(res.target, res.params, cfg.tau);
                    if (!cfg.classic_replay) buffer.clear();
                    res.log.push_back({res.steps, stats.loss, stats.mean_q, stats.var_q, eps});
                }

                ++res.steps;
                if (res.steps == next_eval) {
                    record_checkpoint(res.steps);
                    next_eval += cfg.eval_every;
                }
                s = out.state;
                done = out.done;
            }
        }
    }
    if (res.checkpoints.empty() || res.checkpoints.back().train_step != res.steps)
        record_checkpoint(res.steps);
    return res;
}

}  // namespace mmlab
