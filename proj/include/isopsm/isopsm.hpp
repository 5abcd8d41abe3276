#pragma once

// Tuning-parameter-free propensity score matching via shape-restricted
// (isotonic) maximum likelihood, with monotone single-index support for
// multivariate covariates.

#include "isopsm/bootstrap.hpp"
#include "isopsm/csv.hpp"
#include "isopsm/data.hpp"
#include "isopsm/errors.hpp"
#include "isopsm/estimators.hpp"
#include "isopsm/index.hpp"
#include "isopsm/link.hpp"
#include "isopsm/logistic.hpp"
#include "isopsm/nelder_mead.hpp"
#include "isopsm/parallel.hpp"
#include "isopsm/pava.hpp"
#include "isopsm/report.hpp"
#include "isopsm/rng.hpp"
#include "isopsm/simulation.hpp"
#include "isopsm/spherical.hpp"
