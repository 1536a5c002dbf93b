#pragma once

#include "freeknot/assembly.hpp"
#include "freeknot/bspline.hpp"
#include "freeknot/config.hpp"
#include "freeknot/constraints.hpp"
#include "freeknot/csv.hpp"
#include "freeknot/energy_opt.hpp"
#include "freeknot/errors.hpp"
#include "freeknot/experiments.hpp"
#include "freeknot/knots.hpp"
#include "freeknot/problems.hpp"
#include "freeknot/quadrature.hpp"
#include "freeknot/rng.hpp"
#include "freeknot/separable.hpp"
#include "freeknot/space.hpp"
#include "freeknot/svg.hpp"
#include "freeknot/tensor.hpp"
#include "freeknot/verify.hpp"
