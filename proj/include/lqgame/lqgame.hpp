#pragma once

// Forward and inverse finite-horizon LQG differential games: coupled Riccati
// solve, Euler-Maruyama simulation, and recovery of cost and noise-scaling
// parameters from demonstrations.

#include "lqgame/cost_inference.hpp"
#include "lqgame/game.hpp"
#include "lqgame/metrics.hpp"
#include "lqgame/noise_estimation.hpp"
#include "lqgame/pipeline.hpp"
#include "lqgame/riccati.hpp"
#include "lqgame/simulate.hpp"
#include "lqgame/strategy_estimation.hpp"
#include "lqgame/study.hpp"
