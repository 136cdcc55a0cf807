#pragma once

#include "vlorp/errors.hpp"
#include "vlorp/harness.hpp"
#include "vlorp/matrix.hpp"
#include "vlorp/models.hpp"
#include "vlorp/optim.hpp"
#include "vlorp/precision.hpp"
#include "vlorp/projection.hpp"
#include "vlorp/rng.hpp"
#include "vlorp/validate.hpp"
