#pragma once

#include "nonlocal/errors.hpp"
#include "nonlocal/geometry.hpp"
#include "nonlocal/quadrature.hpp"
#include "nonlocal/kernels.hpp"
#include "nonlocal/operators.hpp"
#include "nonlocal/optimizers.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/validation.hpp"
#include "nonlocal/experiments.hpp"
#include "nonlocal/io.hpp"
#include "nonlocal/config.hpp"
#include "nonlocal/cli.hpp"
