#pragma once

// Umbrella header for the PMwc-Tune library.

#include "pmwc/frequency.hpp"
#include "pmwc/optimizer.hpp"
#include "pmwc/polynomial.hpp"
#include "pmwc/simulation.hpp"
#include "pmwc/state_space.hpp"
#include "pmwc/transfer_function.hpp"
#include "pmwc/tuner.hpp"
