#pragma once

#include "maxent_lab/coding_game.hpp"
#include "maxent_lab/config.hpp"
#include "maxent_lab/error.hpp"
#include "maxent_lab/events.hpp"
#include "maxent_lab/exact_engine.hpp"
#include "maxent_lab/experiments.hpp"
#include "maxent_lab/integer_prior.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/lattice_dp.hpp"
#include "maxent_lab/maxent.hpp"
#include "maxent_lab/oracle.hpp"
#include "maxent_lab/predictors.hpp"
#include "maxent_lab/rational.hpp"
#include "maxent_lab/rng.hpp"
