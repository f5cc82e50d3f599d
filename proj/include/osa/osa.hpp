#pragma once

#include "assign.hpp"
#include "config.hpp"
#include "experiment.hpp"
#include "explore.hpp"
#include "metrics.hpp"
#include "residual.hpp"
#include "rng.hpp"
#include "simcore.hpp"
#include "traffic.hpp"
