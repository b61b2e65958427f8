#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "json.hpp"
#include "mmlab/error.hpp"
#include "mmlab/rng.hpp"

namespace mmlab {

using Policy = std::vector<int>;

// Finite MDP (S, A, P, R, gamma) with dense transition and reward tensors.
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> P;  // [s][a][s'] flattened
    std::vector<double> R;  // [s][a][s'] flattened
    double gamma = 0.9;
    std::vector<std::uint8_t> absorbing;  // optional; empty means none

    double p(int s, int a, int s2) const {
        return P[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double r(int s, int a, int s2) const {
        return R[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double& p(int s, int a, int s2) {
        return P[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double& r(int s, int a, int s2) {
        return R[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    bool is_absorbing(int s) const { return !absorbing.empty() && absorbing[s] != 0; }

    void validate() const {
        if (n_states <= 0 || n_actions <= 0) raise(Errc::bad_config, "empty state/action space");
        if (gamma < 0.0 || gamma >= 1.0) raise(Errc::bad_config, "gamma must be in [0,1)");
        const std::size_t n = static_cast<std::size_t>(n_states) * n_actions * n_states;
        if (P.size() != n || R.size() != n) raise(Errc::bad_config, "P/R tensor size mismatch");
        for (int s = 0; s < n_states; ++s) {
            for (int a = 0; a < n_actions; ++a) {
                double sum = 0.0;
                for (int s2 = 0; s2 < n_states; ++s2) {
                    const double pr = p(s, a, s2);
                    if (pr < 0.0) raise(Errc::bad_config, "negative transition probability");
                    sum += pr;
                }
                if (std::abs(sum - 1.0) > 1e-12)
                    raise(Errc::bad_config, "transition row does not sum to 1");
            }
        }
    }

    double max_abs_reward() const {
        double m = 0.0;
        for (double v : R) m = std::max(m, std::abs(v));
        return m;
    }

    // inverse-CDF sample of the successor state
    int sample_next(int s, int a, Rng& rng) const {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) {
            acc += p(s, a, s2);
            if (u < acc) return s2;
        }
        return n_states - 1;  // guard against cumulative rounding
    }
};

struct QTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> q;

    QTable() = default;
    QTable(int s, int a) : n_states(s), n_actions(a), q(static_cast<std::size_t>(s) * a, 0.0) {}

    double at(int s, int a) const { return q[static_cast<std::size_t>(s) * n_actions + a]; }
    double& at(int s, int a) { return q[static_cast<std::size_t>(s) * n_actions + a]; }

    int greedy_action(int s) const {
        int best = 0;
        for (int a = 1; a < n_actions; ++a)
            if (at(s, a) > at(s, best)) best = a;  // ties keep the lowest index
        return best;
    }
    Policy greedy_policy() const {
        Policy pi(static_cast<std::size_t>(n_states));
        for (int s = 0; s < n_states; ++s) pi[s] = greedy_action(s);
        return pi;
    }
};

namespace detail {

// one-step lookahead value of (s, a)
inline double backup(const TabularMDP& m, const std::vector<double>& v, int s, int a) {
    double q = 0.0;
    for (int s2 = 0; s2 < m.n_states; ++s2) {
        const double pr = m.p(s, a, s2);
        if (pr != 0.0) q += pr * (m.r(s, a, s2) + m.gamma * v[s2]);
    }
    return q;
}

}  // namespace detail

struct ValueIterationResult {
    std::vector<double> v;
    Policy policy;
    std::vector<double> sweep_deltas;  // sup-norm change per sweep, for the contraction check
};

inline ValueIterationResult value_iteration(const TabularMDP& mdp, double tol,
                                            int max_sweeps = 100000) {
    mdp.validate();
    if (tol <= 0.0) raise(Errc::bad_config, "tol must be positive");
    ValueIterationResult res;
    res.v.assign(static_cast<std::size_t>(mdp.n_states), 0.0);
    std::vector<double> next(res.v.size());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta = 0.0;
        for (int s = 0; s < mdp.n_states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < mdp.n_actions; ++a)
                best = std::max(best, detail::backup(mdp, res.v, s, a));
            delta = std::max(delta, std::abs(best - res.v[s]));
            next[s] = best;
        }
        res.v.swap(next);
        res.sweep_deltas.push_back(delta);
        if (delta < tol) break;
    }
    res.policy.assign(static_cast<std::size_t>(mdp.n_states), 0);
    for (int s = 0; s < mdp.n_states; ++s) {
        int best_a = 0;
        double best_q = detail::backup(mdp, res.v, s, 0);
        for (int a = 1; a < mdp.n_actions; ++a) {
            const double q = detail::backup(mdp, res.v, s, a);
            if (q > best_q) {
                best_q = q;
                best_a = a;
            }
        }
        res.policy[s] = best_a;
    }
    return res;
}

// Exact policy evaluation: V = (I - gamma * P_pi)^-1 r_pi, solved by Gaussian
// elimination with partial pivoting. Singular pivots cannot occur for
// gamma < 1; hitting one signals a broken transition matrix.
inline std::vector<double> solve_linear(const TabularMDP& mdp, const Policy& policy) {
    mdp.validate();
    const int n = mdp.n_states;
    if (static_cast<int>(policy.size()) != n) raise(Errc::bad_config, "policy size mismatch");

    std::vector<double> aug(static_cast<std::size_t>(n) * (n + 1), 0.0);
    auto at = [&](int i, int j) -> double& { return aug[static_cast<std::size_t>(i) * (n + 1) + j]; };
    for (int s = 0; s < n; ++s) {
        const int a = policy[s];
        for (int s2 = 0; s2 < n; ++s2) {
            at(s, s2) = (s == s2 ? 1.0 : 0.0) - mdp.gamma * mdp.p(s, a, s2);
            at(s, n) += mdp.p(s, a, s2) * mdp.r(s, a, s2);  // expected one-step reward
        }
    }
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row)
            if (std::abs(at(row, col)) > std::abs(at(pivot, col))) pivot = row;
        if (std::abs(at(pivot, col)) < 1e-12)
            raise(Errc::singular_system, "singular evaluation system (invariant breach)");
        if (pivot != col)
            for (int j = col; j <= n; ++j) std::swap(at(pivot, j), at(col, j));
        for (int row = col + 1; row < n; ++row) {
            const double f = at(row, col) / at(col, col);
            if (f == 0.0) continue;
            for (int j = col; j <= n; ++j) at(row, j) -= f * at(col, j);
        }
    }
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (int row = n - 1; row >= 0; --row) {
        double acc = at(row, n);
        for (int j = row + 1; j < n; ++j) acc -= at(row, j) * v[j];
        v[row] = acc / at(row, row);
    }
    return v;
}

struct PolicyIterationResult {
    std::vector<double> v;
    Policy policy;
    int rounds = 0;
    std::vector<std::vector<double>> round_values;  // evaluation after each round
};

inline PolicyIterationResult policy_iteration(const TabularMDP& mdp) {
    mdp.validate();
    PolicyIterationResult res;
    res.policy.assign(static_cast<std::size_t>(mdp.n_states), 0);
    for (;;) {
        res.v = solve_linear(mdp, res.policy);
        res.round_values.push_back(res.v);
        ++res.rounds;
        bool changed = false;
        for (int s = 0; s < mdp.n_states; ++s) {
            int best_a = 0;
            double best_q = detail::backup(mdp, res.v, s, 0);
            for (int a = 1; a < mdp.n_actions; ++a) {
                const double q = detail::backup(mdp, res.v, s, a);
                if (q > best_q + 1e-13) {
                    best_q = q;
                    best_a = a;
                }
            }
            if (best_a != res.policy[s]) {
                res.policy[s] = best_a;
                changed = true;
            }
        }
        if (!changed) return res;
    }
}

struct LearningSchedule {
    enum class AlphaRule { one_over_visit, constant };
    AlphaRule alpha_rule = AlphaRule::one_over_visit;
    double alpha0 = 0.5;  // used by the constant rule
    double epsilon = 0.1;
    std::int64_t episodes = 10000;
    int max_steps = 100;
    int start_state = -1;  // -1: uniform random start each episode

    void validate() const {
        if (alpha_rule == AlphaRule::constant && (alpha0 <= 0.0 || alpha0 > 1.0))
            raise(Errc::bad_config, "alpha0 must be in (0,1]");
        if (epsilon < 0.0 || epsilon > 1.0) raise(Errc::bad_config, "epsilon must be in [0,1]");
        if (episodes < 0 || max_steps <= 0) raise(Errc::bad_config, "bad episode budget");
    }
};

namespace detail {

// Sampling view of an MDP. The learners below touch the model only through
// this, never through P or R directly.
class MdpSampler {
public:
    explicit MdpSampler(const TabularMDP& m) : m_(m) {}
    int n_states() const { return m_.n_states; }
    int n_actions() const { return m_.n_actions; }
    bool is_absorbing(int s) const { return m_.is_absorbing(s); }
    // returns s', writes the observed reward
    int sample(int s, int a, Rng& rng, double& reward_out) const {
        const int s2 = m_.sample_next(s, a, rng);
        reward_out = m_.r(s, a, s2);
        return s2;
    }

private:
    const TabularMDP& m_;
};

inline int epsilon_greedy(const QTable& q, int s, double eps, Rng& rng) {
    if (eps > 0.0 && rng.uniform01() < eps)
        return static_cast<int>(rng.uniform_int(0, q.n_actions - 1));
    return q.greedy_action(s);
}

template <bool OnPolicy>
QTable td_control(const TabularMDP& mdp, const LearningSchedule& schedule, std::uint64_t seed) {
    mdp.validate();
    schedule.validate();
    const MdpSampler env(mdp);
    Rng rng(derive_seed(seed, OnPolicy ? 0x5A25 : 0x9131));
    QTable q(env.n_states(), env.n_actions());
    std::vector<std::int64_t> visits(q.q.size(), 0);

    auto alpha_for = [&](int s, int a) {
        std::int64_t& n = visits[static_cast<std::size_t>(s) * q.n_actions + a];
        ++n;
        return schedule.alpha_rule == LearningSchedule::AlphaRule::one_over_visit
                   ? 1.0 / static_cast<double>(n)
                   : schedule.alpha0;
    };

    for (std::int64_t ep = 0; ep < schedule.episodes; ++ep) {
        int s = schedule.start_state >= 0
                    ? schedule.start_state
                    : static_cast<int>(rng.uniform_int(0, env.n_states() - 1));
        int a = OnPolicy ? epsilon_greedy(q, s, schedule.epsilon, rng) : 0;
        for (int step = 0; step < schedule.max_steps; ++step) {
            if (env.is_absorbing(s)) break;
            if constexpr (!OnPolicy) a = epsilon_greedy(q, s, schedule.epsilon, rng);
            double reward = 0.0;
            const int s2 = env.sample(s, a, rng, reward);
            const double alpha = alpha_for(s, a);
            double bootstrap;
            int a2 = 0;
            if constexpr (OnPolicy) {
                a2 = epsilon_greedy(q, s2, schedule.epsilon, rng);
                bootstrap = q.at(s2, a2);
            } else {
                bootstrap = q.at(s2, q.greedy_action(s2));
            }
            if (env.is_absorbing(s2)) bootstrap = 0.0;
            q.at(s, a) += alpha * (reward + mdp.gamma * bootstrap - q.at(s, a));
            s = s2;
            if constexpr (OnPolicy) a = a2;
        }
    }
    return q;
}

}  // namespace detail

// Off-policy TD control: bootstrap from max_a' Q(s', a').
inline QTable q_learning(const TabularMDP& mdp, const LearningSchedule& schedule,
                         std::uint64_t seed) {
    return detail::td_control<false>(mdp, schedule, seed);
}

// On-policy TD control: bootstrap from the action actually selected next.
inline QTable sarsa(const TabularMDP& mdp, const LearningSchedule& schedule, std::uint64_t seed) {
    return detail::td_control<true>(mdp, schedule, seed);
}

// ---------------------------------------------------------------------------
// Optional JSON serialization (dims, flattened P and R, gamma).
// ---------------------------------------------------------------------------

inline nlohmann::json mdp_to_json(const TabularMDP& m) {
    return nlohmann::json{{"n_states", m.n_states}, {"n_actions", m.n_actions},
                          {"gamma", m.gamma},       {"P", m.P},
                          {"R", m.R},               {"absorbing", m.absorbing}};
}

inline TabularMDP mdp_from_json(const nlohmann::json& j) {
    TabularMDP m;
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.gamma = j.at("gamma").get<double>();
    m.P = j.at("P").get<std::vector<double>>();
    m.R = j.at("R").get<std::vector<double>>();
    if (j.contains("absorbing")) m.absorbing = j.at("absorbing").get<std::vector<std::uint8_t>>();
    m.validate();
    return m;
}

}  // namespace mmlab
