#include "chfuq/uq/coverage.hpp"

#include <algorithm>
#include <cmath>

#include "chfuq/common/error.hpp"
#include "chfuq/evalstat/special_functions.hpp"

namespace chfuq::uq {

double ks_distance_beta(std::span<const double> sample, double a, double b) {
    if (sample.empty()) CHFUQ_THROW(Error, "ks_distance_beta: empty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf = evalstat::beta_cdf(sorted[i], a, b);
        const double hi = static_cast<double>(i + 1) / n - cdf;
        const double lo = cdf - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

CoverageSimulation coverage_simulation(const CalibrationSupplier& calibration,
                                       std::span<const double> test_scores, std::size_t m,
                                       double alpha, std::size_t trials, std::uint64_t seed) {
    if (trials < 1) CHFUQ_THROW(Error, "coverage_simulation: trials must be >= 1");
    if (test_scores.empty()) CHFUQ_THROW(Error, "coverage_simulation: empty test set");
    if (m < 1) CHFUQ_THROW(Error, "coverage_simulation: m must be >= 1");

    // Sorted test scores turn per-trial coverage into a binary search.
    std::vector<double> sorted_test(test_scores.begin(), test_scores.end());
    std::sort(sorted_test.begin(), sorted_test.end());
    const double n_test = static_cast<double>(sorted_test.size());

    CoverageSimulation sim;
    sim.law = beta_coverage_params(m, alpha);
    sim.picp.reserve(trials);

    engine::Rng seeder(seed);
    double below = 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        engine::Rng trial_rng(seeder.raw());
        std::vector<double> cal = calibration(t, trial_rng);
        if (cal.size() != m)
            CHFUQ_THROW(Error, "coverage_simulation: supplier gave %zu scores, expected %zu",
                        cal.size(), m);
        const CalibrationResult q = empirical_quantile(cal, alpha);
        double cov;
        if (q.infinite) {
            cov = 1.0;
        } else {
            const auto it =
                std::upper_bound(sorted_test.begin(), sorted_test.end(), q.q_hat);
            cov = static_cast<double>(it - sorted_test.begin()) / n_test;
        }
        sim.picp.push_back(cov);
        total += cov;
        if (cov < 1.0 - alpha) below += 1.0;
    }
    sim.mean_coverage = total / static_cast<double>(trials);
    sim.fraction_below_target = below / static_cast<double>(trials);
    sim.ks_distance = ks_distance_beta(sim.picp, sim.law.a, sim.law.b);
    return sim;
}

}  // namespace chfuq::uq
