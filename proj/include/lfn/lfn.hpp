#pragma once

#include "calibration.hpp"
#include "domain.hpp"
#include "engine.hpp"
#include "flows.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "shocks.hpp"
#include "similarity.hpp"
#include "suite.hpp"
