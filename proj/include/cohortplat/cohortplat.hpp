#pragma once

#include "cohortplat/config.hpp"
#include "cohortplat/decision.hpp"
#include "cohortplat/efficacy.hpp"
#include "cohortplat/error.hpp"
#include "cohortplat/ocs.hpp"
#include "cohortplat/random.hpp"
#include "cohortplat/runner.hpp"
#include "cohortplat/scenario.hpp"
#include "cohortplat/stats.hpp"
#include "cohortplat/trajectory.hpp"
#include "cohortplat/trial.hpp"
