#pragma once

// Umbrella header for the market-making RL laboratory.

#include "mmlab/agents.hpp"
#include "mmlab/csv.hpp"
#include "mmlab/dqn.hpp"
#include "mmlab/env.hpp"
#include "mmlab/error.hpp"
#include "mmlab/eval.hpp"
#include "mmlab/mdp.hpp"
#include "mmlab/mlp.hpp"
#include "mmlab/pdp.hpp"
#include "mmlab/pipeline.hpp"
#include "mmlab/replay.hpp"
#include "mmlab/rng.hpp"
#include "mmlab/synthetic.hpp"
#include "mmlab/ticks.hpp"
