#pragma once

// Umbrella header for the MaxEnt toolkit.

#include "maxent/error.hpp"
#include "maxent/random.hpp"
#include "maxent/simplex.hpp"
#include "maxent/constraints.hpp"
#include "maxent/solver.hpp"
#include "maxent/selection.hpp"
#include "maxent/ising.hpp"
#include "maxent/bench.hpp"
#include "maxent/io.hpp"
