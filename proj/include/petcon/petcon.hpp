#pragma once

// Umbrella header: the whole library in one include.

#include "petcon/analysis.hpp"
#include "petcon/digraph.hpp"
#include "petcon/engine.hpp"
#include "petcon/errors.hpp"
#include "petcon/io.hpp"
#include "petcon/protocol.hpp"
#include "petcon/runner.hpp"
#include "petcon/scenario.hpp"
#include "petcon/spectral.hpp"
