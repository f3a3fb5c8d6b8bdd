#pragma once

#include "divdelay/config.hpp"
#include "divdelay/diagnostics.hpp"
#include "divdelay/errors.hpp"
#include "divdelay/kernels.hpp"
#include "divdelay/models.hpp"
#include "divdelay/simulator.hpp"
#include "divdelay/solver.hpp"
#include "divdelay/specfun.hpp"
#include "divdelay/transform.hpp"
