#pragma once

#include <functional>
#include <span>
#include <vector>

#include "chfuq/engine/rng.hpp"
#include "chfuq/uq/conformal.hpp"

namespace chfuq::uq {

/// Supplies the m calibration nonconformity scores for one trial (fresh
/// generator draws, or a resample of a dataset's scores).
using CalibrationSupplier =
    std::function<std::vector<double>(std::size_t trial, engine::Rng& rng)>;

struct CoverageSimulation {
    std::vector<double> picp;  // one empirical coverage per trial
    BetaCoverageLaw law;       // Beta(l, m+1-l) reference
    double mean_coverage = 0.0;
    double ks_distance = 0.0;  // one-sample KS vs the Beta CDF
    double fraction_below_target = 0.0;  // trials with coverage < 1 - alpha
};

/// Repeated split-conformal calibration against a fixed test set, all in
/// score space: per trial the supplier provides m calibration scores, the
/// conformal quantile is taken, and coverage is the fraction of test scores
/// at or below it (an infinite quantile covers everything).
CoverageSimulation coverage_simulation(const CalibrationSupplier& calibration,
                                       std::span<const double> test_scores, std::size_t m,
                                       double alpha, std::size_t trials, std::uint64_t seed);

/// One-sample Kolmogorov-Smirnov distance between a sample and the
/// Beta(a, b) CDF.
double ks_distance_beta(std::span<const double> sample, double a, double b);

}  // namespace chfuq::uq
