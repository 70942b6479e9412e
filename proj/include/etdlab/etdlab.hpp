#pragma once

// Umbrella header for the whole library.

#include "etdlab/config.hpp"
#include "etdlab/emphatic.hpp"
#include "etdlab/experiments.hpp"
#include "etdlab/fixed_point.hpp"
#include "etdlab/instances.hpp"
#include "etdlab/mdp.hpp"
#include "etdlab/simulate.hpp"
