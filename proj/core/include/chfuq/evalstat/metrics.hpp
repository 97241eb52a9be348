#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace chfuq::evalstat {

/// Mean absolute percentage error, in percent.
double mape(std::span<const double> mu, std::span<const double> y);

/// Root mean squared percentage error, in percent.
double rmspe_metric(std::span<const double> mu, std::span<const double> y);

/// Q2 error: sum (mu - y)^2 / sum (mu - ybar)^2, ybar = mean of y.
double q2(std::span<const double> mu, std::span<const double> y);

double rmse(std::span<const double> mu, std::span<const double> y);

/// Coverage over closed intervals; +/-inf bounds count as covering.
double picp(std::span<const double> lo, std::span<const double> hi, std::span<const double> y);

/// Per-sample relative narrowness of the bounds: 1 - width/(2 mu) when
/// 0 <= width <= 2 mu, else 0.
std::vector<double> informativeness_samples(std::span<const double> mu,
                                            std::span<const double> lo,
                                            std::span<const double> hi);

/// Dataset informativeness, percent.
double informativeness(std::span<const double> mu, std::span<const double> lo,
                       std::span<const double> hi);

/// Per-sample triangular compatibility of y with the interval and its apex.
std::vector<double> calibration_samples(std::span<const double> mu, std::span<const double> lo,
                                        std::span<const double> hi, std::span<const double> y);

/// Dataset triangular calibration, percent.
double calibration_triangular(std::span<const double> mu, std::span<const double> lo,
                              std::span<const double> hi, std::span<const double> y);

/// Per-sample harmonic mean of informativeness and calibration (0 if either
/// component is 0), averaged and scaled to percent.
double uqf(std::span<const double> inform_samples, std::span<const double> calib_samples);

/// Area under the calibration-error curve for a Gaussian predictive
/// distribution: over nominal levels p the central interval is
/// mu +/- sigma * z((1+p)/2); the absolute gap between empirical coverage and
/// p is integrated by trapezoid with exact anchors at p = 0 and p = 1.
double auce(std::span<const double> mu, std::span<const double> sigma, std::span<const double> y,
            std::size_t grid_size);

/// Same calibration-error area for interval methods: the symmetric family is
/// obtained by scaling each interval's half-width around its midpoint with
/// the normal-quantile ratio z((1+p)/2) / z(1 - alpha/2), so at p = 1 - alpha
/// the family reproduces [lo, hi] exactly.
double auce_from_bounds(std::span<const double> lo, std::span<const double> hi,
                        std::span<const double> y, double alpha, std::size_t grid_size);

/// Relative bound width (hi - lo) / mu summaries grouped by a banding column.
struct BandSummary {
    double lo_edge;  // -inf for the first band
    double hi_edge;  // +inf for the last band
    std::size_t count = 0;
    double mean_rel_width = 0.0;
    double std_rel_width = 0.0;
    double max_rel_width = 0.0;
};

/// Bands are (-inf, e0), [e0, e1), ..., [e_last, +inf). Empty bands keep
/// count 0 and are reported as absent by callers.
std::vector<BandSummary> regime_width_summary(std::span<const double> lo,
                                              std::span<const double> hi,
                                              std::span<const double> mu,
                                              std::span<const double> band_key,
                                              std::span<const double> edges);

}  // namespace chfuq::evalstat
