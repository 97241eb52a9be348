#pragma once

#include <cstddef>

namespace chfuq::evalstat {

/// Inverse standard normal CDF (quantile function). Rational approximation,
/// relative error below 1e-9 on (0,1). p in {0,1} or outside -> error.
double normal_ppf(double p);

/// Standard normal CDF via erfc.
double normal_cdf(double z);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Chi-square survival function P(X > x) with dof degrees of freedom.
double chi2_survival(double x, std::size_t dof);

/// Regularized incomplete beta I_x(a, b).
double betainc(double a, double b, double x);

/// CDF of Beta(a, b) at x.
double beta_cdf(double x, double a, double b);

}  // namespace chfuq::evalstat
