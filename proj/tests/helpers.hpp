#pragma once

// Shared test fixtures: hand-built ticks, random MDPs, gridworlds, and a
// tabular-MDP adapter for the DQN training loop.

#include <array>
#include <cstdint>
#include <vector>

#include "mmlab/env.hpp"
#include "mmlab/mdp.hpp"
#include "mmlab/rng.hpp"
#include "mmlab/synthetic.hpp"
#include "mmlab/ticks.hpp"

namespace testutil {

// A book with best ask/bid and default depth, deeper levels one tick apart.
inline mmlab::TickRecord make_tick(std::int64_t ask1, std::int64_t bid1, std::int64_t last,
                                   std::int64_t time_ms = 0) {
    mmlab::TickRecord r;
    r.update_time_ms = time_ms;
    for (int i = 0; i < mmlab::kBookLevels; ++i) {
        r.ask_price[i] = ask1 + i;
        r.bid_price[i] = bid1 - i;
        r.ask_vol[i] = 10;
        r.bid_vol[i] = 10;
    }
    r.last_price = last;
    r.volume = 1;
    r.open_interest = 1000;
    r.turnover = static_cast<double>(last);
    return r;
}

// Series with constant book around `mid` and a scripted last-price path.
inline mmlab::TickSeries make_series(const std::vector<std::int64_t>& last_prices,
                                     std::int64_t spread = 2, std::int64_t mid = 5000) {
    mmlab::TickSeries s;
    s.tick_size = 1.0;
    s.session_id = "2022-02-01";
    const std::int64_t ask1 = mid + (spread + 1) / 2;
    for (std::size_t i = 0; i < last_prices.size(); ++i) {
        auto r = make_tick(ask1, ask1 - spread, last_prices[i],
                           1643706000000 + 500 * static_cast<std::int64_t>(i));
        s.records.push_back(r);
    }
    return s;
}

// Random dense MDP with Dirichlet-ish rows and rewards in [-1, 1].
inline mmlab::TabularMDP random_mdp(int n_states, int n_actions, std::uint64_t seed,
                                    double gamma_lo = 0.8, double gamma_hi = 0.95) {
    mmlab::Rng rng(mmlab::derive_seed(seed, 0xADD));
    mmlab::TabularMDP m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.gamma = gamma_lo + rng.uniform01() * (gamma_hi - gamma_lo);
    const std::size_t n = static_cast<std::size_t>(n_states) * n_actions * n_states;
    m.P.assign(n, 0.0);
    m.R.assign(n, 0.0);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double total = 0.0;
            std::vector<double> row(static_cast<std::size_t>(n_states));
            for (auto& v : row) {
                v = rng.uniform01() + 1e-3;
                total += v;
            }
            // exact unit row sum: assign the residual to the last entry
            double acc = 0.0;
            for (int s2 = 0; s2 + 1 < n_states; ++s2) {
                m.p(s, a, s2) = row[static_cast<std::size_t>(s2)] / total;
                acc += m.p(s, a, s2);
            }
            m.p(s, a, n_states - 1) = 1.0 - acc;
            for (int s2 = 0; s2 < n_states; ++s2)
                m.r(s, a, s2) = rng.uniform01() * 2.0 - 1.0;
        }
    }
    return m;
}

// Deterministic 4x4 gridworld: actions up/right/down/left, bumping a wall
// stays put, every move costs 1, entering the goal corner pays +10 and
// absorbs. gamma 0.9.
inline mmlab::TabularMDP gridworld4() {
    constexpr int kSide = 4;
    constexpr int kStates = kSide * kSide;
    constexpr int kActions = 4;
    const int goal = kStates - 1;

    mmlab::TabularMDP m;
    m.n_states = kStates;
    m.n_actions = kActions;
    m.gamma = 0.9;
    m.P.assign(static_cast<std::size_t>(kStates) * kActions * kStates, 0.0);
    m.R.assign(m.P.size(), 0.0);
    m.absorbing.assign(kStates, 0);
    m.absorbing[static_cast<std::size_t>(goal)] = 1;

    constexpr int dr[] = {-1, 0, 1, 0};
    constexpr int dc[] = {0, 1, 0, -1};
    for (int s = 0; s < kStates; ++s) {
        const int row = s / kSide, col = s % kSide;
        for (int a = 0; a < kActions; ++a) {
            if (s == goal) {
                m.p(s, a, s) = 1.0;
                continue;
            }
            int r2 = row + dr[a], c2 = col + dc[a];
            if (r2 < 0 || r2 >= kSide || c2 < 0 || c2 >= kSide) {
                r2 = row;
                c2 = col;
            }
            const int s2 = r2 * kSide + c2;
            m.p(s, a, s2) = 1.0;
            m.r(s, a, s2) = (s2 == goal) ? 10.0 : -1.0;
        }
    }
    return m;
}

// 3x4 cliff world: start bottom-left, goal bottom-right, the two cells
// between them are a cliff (-100, absorbing). Deterministic moves, step cost
// 1, gamma 0.99. The greedy-optimal route hugs the cliff; epsilon-greedy play
// on it occasionally falls in.
inline mmlab::TabularMDP cliffworld(int& start_state, int& goal_state) {
    constexpr int kRows = 3, kCols = 4;
    constexpr int kStates = kRows * kCols;
    constexpr int kActions = 4;
    auto id = [](int r, int c) { return r * kCols + c; };
    start_state = id(2, 0);
    goal_state = id(2, 3);
    const std::array<int, 2> cliff = {id(2, 1), id(2, 2)};

    mmlab::TabularMDP m;
    m.n_states = kStates;
    m.n_actions = kActions;
    m.gamma = 0.99;
    m.P.assign(static_cast<std::size_t>(kStates) * kActions * kStates, 0.0);
    m.R.assign(m.P.size(), 0.0);
    m.absorbing.assign(kStates, 0);
    m.absorbing[static_cast<std::size_t>(goal_state)] = 1;
    for (int c : cliff) m.absorbing[static_cast<std::size_t>(c)] = 1;

    constexpr int dr[] = {-1, 0, 1, 0};
    constexpr int dc[] = {0, 1, 0, -1};
    for (int s = 0; s < kStates; ++s) {
        const int row = s / kCols, col = s % kCols;
        for (int a = 0; a < kActions; ++a) {
            if (m.is_absorbing(s)) {
                m.p(s, a, s) = 1.0;
                continue;
            }
            int r2 = row + dr[a], c2 = col + dc[a];
            if (r2 < 0 || r2 >= kRows || c2 < 0 || c2 >= kCols) {
                r2 = row;
                c2 = col;
            }
            const int s2 = id(r2, c2);
            m.p(s, a, s2) = 1.0;
            double reward = -1.0;
            if (s2 == goal_state) reward = 10.0;
            for (int c : cliff)
                if (s2 == c) reward = -100.0;
            m.r(s, a, s2) = reward;
        }
    }
    return m;
}

// Wraps a tabular MDP as an episodic env for the DQN loop: states become
// one-hot vectors padded to the 5-feature input, actions map one-to-one.
class MdpEnv final : public mmlab::EpisodicEnv {
public:
    MdpEnv(const mmlab::TabularMDP& mdp, int start_state, int max_steps, std::uint64_t seed)
        : mdp_(mdp), start_(start_state), max_steps_(max_steps),
          rng_(mmlab::derive_seed(seed, 0xE417)) {
        if (mdp_.n_actions != mmlab::kNumActions)
            throw std::logic_error("MdpEnv needs a 4-action MDP");
        if (mdp_.n_states > mmlab::StateVector::kDim)
            throw std::logic_error("MdpEnv supports at most 5 states");
    }

    mmlab::StateVector reset() override {
        state_ = start_;
        steps_ = 0;
        return encode(state_);
    }

    Step step(int action) override {
        double reward = 0.0;
        const int next = mdp_.sample_next(state_, action, rng_);
        reward = mdp_.r(state_, action, next);
        state_ = next;
        ++steps_;
        const bool done = steps_ >= max_steps_ || mdp_.is_absorbing(state_);
        return {encode(state_), reward, done};
    }

    std::size_t length_hint() const override { return static_cast<std::size_t>(max_steps_); }

private:
    mmlab::StateVector encode(int s) const {
        std::array<double, mmlab::StateVector::kDim> a{};
        a[static_cast<std::size_t>(s)] = 1.0;
        return mmlab::StateVector::from_array(a);
    }

    const mmlab::TabularMDP& mdp_;
    int start_;
    int max_steps_;
    mmlab::Rng rng_;
    int state_ = 0;
    int steps_ = 0;
};

}  // namespace testutil
