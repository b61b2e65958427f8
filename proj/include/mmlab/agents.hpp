#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>

#include "mmlab/dqn.hpp"
#include "mmlab/env.hpp"
#include "mmlab/error.hpp"
#include "mmlab/rng.hpp"

namespace mmlab {

// Suppresses the side that would push the position further past the bound:
// long at +max_inv loses the bid, short at -max_inv loses the ask. The clip
// fires only at the bound itself, so the position can reach but never exceed
// +/- max_inv.
inline Action clip_action(Action action, std::int64_t inv, std::int64_t max_inv) {
    if (inv >= max_inv && quotes_bid(action))
        action = quotes_ask(action) ? Action::AN : Action::NN;
    if (inv <= -max_inv && quotes_ask(action))
        action = quotes_bid(action) ? Action::NB : Action::NN;
    return action;
}

// The three agents of the comparison experiment: the fixed both-sides quoter,
// the same with a hard inventory cap, and the trained network played greedily.
struct AgentSpec {
    enum class Kind { fa, fawc, drla };
    Kind kind = Kind::fa;
    std::int64_t max_inv = 5;  // fawc only
    Checkpoint checkpoint;     // drla only

    static AgentSpec fa() { return AgentSpec{}; }

    static AgentSpec fawc(std::int64_t max_inv) {
        if (max_inv < 1) raise(Errc::bad_config, "max_inv must be >= 1");
        AgentSpec a;
        a.kind = Kind::fawc;
        a.max_inv = max_inv;
        return a;
    }

    static AgentSpec drla(Checkpoint checkpoint) {
        AgentSpec a;
        a.kind = Kind::drla;
        a.checkpoint = std::move(checkpoint);
        return a;
    }

    static AgentSpec drla_from_file(const std::filesystem::path& path) {
        return drla(load_checkpoint(path));
    }
};

inline const char* to_string(AgentSpec::Kind k) {
    switch (k) {
        case AgentSpec::Kind::fa: return "fa";
        case AgentSpec::Kind::fawc: return "fawc";
        case AgentSpec::Kind::drla: return "drla";
    }
    return "?";
}

inline Action act(const AgentSpec& agent, const StateVector& state, Rng& rng) {
    switch (agent.kind) {
        case AgentSpec::Kind::fa:
            return Action::AB;
        case AgentSpec::Kind::fawc: {
            const std::int64_t inv = static_cast<std::int64_t>(std::llround(state.inventory));
            return clip_action(Action::AB, inv, agent.max_inv);
        }
        case AgentSpec::Kind::drla: {
            const auto q = forward(agent.checkpoint.params,
                                   agent.checkpoint.norm.normalize(state));
            return static_cast<Action>(select_action(q, 0.0, rng));  // greedy inference
        }
    }
    raise(Errc::bad_config, "unknown agent kind");
}

}  // namespace mmlab
