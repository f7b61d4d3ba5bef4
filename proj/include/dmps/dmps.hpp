#pragma once

#include "dmps/error.hpp"
#include "dmps/types.hpp"
#include "dmps/schedule.hpp"
#include "dmps/rng.hpp"
#include "dmps/operators.hpp"
#include "dmps/prior_scores.hpp"
#include "dmps/likelihood.hpp"
#include "dmps/sampler.hpp"
#include "dmps/oracle.hpp"
#include "dmps/metrics.hpp"
#include "dmps/io.hpp"
#include "dmps/config.hpp"
#include "dmps/verify.hpp"
#include "dmps/cli.hpp"
