#pragma once

// Umbrella header for the full simulator + learning stack.

#include "airfed/agent.hpp"
#include "airfed/checkpoint.hpp"
#include "airfed/common.hpp"
#include "airfed/config.hpp"
#include "airfed/energy.hpp"
#include "airfed/fedlearn.hpp"
#include "airfed/gat.hpp"
#include "airfed/graph.hpp"
#include "airfed/gru.hpp"
#include "airfed/metrics.hpp"
#include "airfed/policy.hpp"
#include "airfed/radio.hpp"
#include "airfed/rng.hpp"
#include "airfed/scenario.hpp"
#include "airfed/sim.hpp"
#include "airfed/tasking.hpp"
#include "airfed/tensor.hpp"
#include "airfed/trainer.hpp"
#include "airfed/world.hpp"
