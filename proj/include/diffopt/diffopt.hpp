#pragma once

#include "agent.hpp"
#include "env.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "graph.hpp"
#include "metrics.hpp"
#include "options.hpp"
#include "parallel.hpp"
#include "spectral.hpp"
