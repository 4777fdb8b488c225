#pragma once

// Umbrella header for the fedtick simulation library.

#include "fedtick/cli_io.hpp"
#include "fedtick/dataset.hpp"
#include "fedtick/engine.hpp"
#include "fedtick/errors.hpp"
#include "fedtick/federation.hpp"
#include "fedtick/linalg.hpp"
#include "fedtick/objectives.hpp"
#include "fedtick/param_vector.hpp"
#include "fedtick/rng.hpp"
#include "fedtick/runtime_model.hpp"
#include "fedtick/schedules.hpp"
#include "fedtick/theory.hpp"
