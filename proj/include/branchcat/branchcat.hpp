#pragma once

#include "branchcat/coefficients.hpp"
#include "branchcat/config.hpp"
#include "branchcat/criteria.hpp"
#include "branchcat/csv.hpp"
#include "branchcat/errors.hpp"
#include "branchcat/fragmentation.hpp"
#include "branchcat/jump_measure.hpp"
#include "branchcat/model.hpp"
#include "branchcat/montecarlo.hpp"
#include "branchcat/quadrature.hpp"
#include "branchcat/regimes.hpp"
#include "branchcat/rng.hpp"
#include "branchcat/simulate.hpp"
#include "branchcat/special.hpp"
#include "branchcat/stats.hpp"
#include "branchcat/util.hpp"
#include "branchcat/validation.hpp"
#include "branchcat/version.hpp"
