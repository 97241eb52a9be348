#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chfuq/engine/array.hpp"

namespace chfuq::evalstat {

struct OlsFit {
    std::vector<double> coef;       // intercept first, then one per feature
    std::vector<double> residuals;  // target - fitted
    double r2 = 0.0;                // centered definition; 0 when SST == 0
};

/// Least squares via normal equations with a Cholesky solve. The design
/// matrix is X augmented with an intercept column. Rank deficiency raises.
OlsFit ols_fit(const engine::Array& features, std::span<const double> targets);

struct BPTestResult {
    double statistic = 0.0;  // N * R^2
    std::size_t dof = 0;     // number of features p
    double p_value = 1.0;
    bool reject = false;     // p_value < alpha
    double aux_r2 = 0.0;     // R^2 of the auxiliary regression
};

/// Breusch-Pagan heteroscedasticity test in the studentized (Koenker) form:
/// regress squared residuals on the features, BP = N * R^2, chi-square with
/// p degrees of freedom under the homoscedastic null.
BPTestResult breusch_pagan(std::span<const double> residuals, const engine::Array& features,
                           double alpha);

}  // namespace chfuq::evalstat
