#pragma once

// Umbrella header for the additive isotone regression library.

#include "isotone/backfit.hpp"
#include "isotone/csv.hpp"
#include "isotone/dataset.hpp"
#include "isotone/oracle.hpp"
#include "isotone/pava.hpp"
#include "isotone/rng.hpp"
#include "isotone/simulation.hpp"
