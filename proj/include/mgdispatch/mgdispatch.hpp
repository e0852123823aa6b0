#pragma once

#include "mgdispatch/errors.hpp"
#include "mgdispatch/prob_model.hpp"
#include "mgdispatch/sot.hpp"
#include "mgdispatch/scenario.hpp"
#include "mgdispatch/defaults.hpp"
#include "mgdispatch/dispatch_model.hpp"
#include "mgdispatch/rng.hpp"
#include "mgdispatch/theta_dea.hpp"
#include "mgdispatch/decision_analysis.hpp"
#include "mgdispatch/io.hpp"
#include "mgdispatch/pipeline.hpp"
