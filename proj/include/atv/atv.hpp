#pragma once

#include "atv/config.hpp"
#include "atv/domain.hpp"
#include "atv/duality.hpp"
#include "atv/errors.hpp"
#include "atv/experiments.hpp"
#include "atv/expr.hpp"
#include "atv/measures.hpp"
#include "atv/operators.hpp"
#include "atv/parallel.hpp"
#include "atv/random.hpp"
#include "atv/report.hpp"
#include "atv/solver.hpp"
#include "atv/tv.hpp"
