#pragma once

#include "sublsq/bounds.hpp"
#include "sublsq/distfit.hpp"
#include "sublsq/esp.hpp"
#include "sublsq/estimator.hpp"
#include "sublsq/io.hpp"
#include "sublsq/problem.hpp"
#include "sublsq/rng.hpp"
#include "sublsq/sampling.hpp"
#include "sublsq/solver.hpp"
#include "sublsq/types.hpp"
