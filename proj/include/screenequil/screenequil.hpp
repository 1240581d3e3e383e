#pragma once

#include "density.hpp"
#include "equilibria.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "market.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "schedule.hpp"
#include "suite.hpp"
#include "welfare.hpp"
