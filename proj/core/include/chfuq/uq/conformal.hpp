#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chfuq::uq {

enum class CalibrationKind : std::uint8_t { Vanilla, Adaptive };

/// Split-conformal calibration outcome: the empirical quantile of the
/// nonconformity scores at rank k = ceil((m+1)(1-alpha)). When k exceeds the
/// calibration size the interval is unbounded and `infinite` is set.
struct CalibrationResult {
    CalibrationKind kind = CalibrationKind::Vanilla;
    double q_hat = 0.0;
    std::size_t m = 0;
    double alpha = 0.05;
    bool infinite = false;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// k-th order statistic with k = ceil((m+1)(1-alpha)); ties resolved by
/// order statistic. k > m flags an infinite interval (q_hat is then +inf).
CalibrationResult empirical_quantile(std::span<const double> values, double alpha);

/// Vanilla scores: absolute residuals |y - mu|.
CalibrationResult cp_calibrate_vanilla(std::span<const double> mu, std::span<const double> y,
                                       double alpha);

/// [mu - q, mu + q]; +/-inf sentinels when the calibration was infinite.
Interval cp_interval_vanilla(double mu, const CalibrationResult& result);

/// Normalized scores: |y - mu| / sigma(x); the sigma estimator must be
/// strictly positive.
CalibrationResult cp_calibrate_adaptive(std::span<const double> mu,
                                        std::span<const double> sigma,
                                        std::span<const double> y, double alpha);

/// [mu - sigma q, mu + sigma q].
Interval cp_interval_adaptive(double mu, double sigma, const CalibrationResult& result);

/// Conditional-coverage law of split conformal with n calibration points:
/// Beta(l, n + 1 - l) with l = ceil((1 + n)(1 - alpha)).
struct BetaCoverageLaw {
    std::size_t l = 0;
    double a = 0.0;
    double b = 0.0;
};
BetaCoverageLaw beta_coverage_params(std::size_t n, double alpha);

}  // namespace chfuq::uq
