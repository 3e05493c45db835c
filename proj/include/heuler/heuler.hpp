#pragma once

/// @file heuler.hpp
/// @brief Umbrella header for the analysis library (scenario.hpp additionally needs yaml-cpp).

#include "heuler/angular_ode.hpp"
#include "heuler/domain.hpp"
#include "heuler/elliptic_solver.hpp"
#include "heuler/error.hpp"
#include "heuler/exact_solutions.hpp"
#include "heuler/fields.hpp"
#include "heuler/finite_difference.hpp"
#include "heuler/io.hpp"
#include "heuler/rigidity.hpp"
