#include "chfuq/uq/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chfuq/common/error.hpp"

namespace chfuq::uq {

CalibrationResult empirical_quantile(std::span<const double> values, double alpha) {
    if (values.empty()) CHFUQ_THROW(Error, "empirical_quantile: empty input");
    if (!(alpha > 0.0 && alpha < 1.0))
        CHFUQ_THROW(Error, "empirical_quantile: alpha must be in (0,1), got %g", alpha);
    const std::size_t m = values.size();
    const std::size_t k = static_cast<std::size_t>(
        std::ceil((static_cast<double>(m) + 1.0) * (1.0 - alpha)));

    CalibrationResult out;
    out.m = m;
    out.alpha = alpha;
    if (k > m) {
        out.infinite = true;
        out.q_hat = std::numeric_limits<double>::infinity();
        return out;
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    out.q_hat = sorted[k - 1];
    return out;
}

CalibrationResult cp_calibrate_vanilla(std::span<const double> mu, std::span<const double> y,
                                       double alpha) {
    if (mu.size() != y.size())
        CHFUQ_THROW(Error, "cp_calibrate_vanilla: %zu predictions vs %zu targets", mu.size(),
                    y.size());
    std::vector<double> residuals(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) residuals[i] = std::abs(y[i] - mu[i]);
    CalibrationResult out = empirical_quantile(residuals, alpha);
    out.kind = CalibrationKind::Vanilla;
    return out;
}

Interval cp_interval_vanilla(double mu, const CalibrationResult& result) {
    if (result.kind != CalibrationKind::Vanilla)
        CHFUQ_THROW(Error, "cp_interval_vanilla: calibration is not vanilla");
    if (result.infinite) {
        const double inf = std::numeric_limits<double>::infinity();
        return {-inf, inf};
    }
    return {mu - result.q_hat, mu + result.q_hat};
}

CalibrationResult cp_calibrate_adaptive(std::span<const double> mu,
                                        std::span<const double> sigma,
                                        std::span<const double> y, double alpha) {
    if (mu.size() != y.size() || sigma.size() != y.size())
        CHFUQ_THROW(Error, "cp_calibrate_adaptive: size mismatch (%zu, %zu, %zu)", mu.size(),
                    sigma.size(), y.size());
    std::vector<double> scores(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(sigma[i] > 0.0))
            CHFUQ_THROW(Error, "cp_calibrate_adaptive: sigma[%zu] = %g is not > 0", i, sigma[i]);
        scores[i] = std::abs(y[i] - mu[i]) / sigma[i];
    }
    CalibrationResult out = empirical_quantile(scores, alpha);
    out.kind = CalibrationKind::Adaptive;
    return out;
}

Interval cp_interval_adaptive(double mu, double sigma, const CalibrationResult& result) {
    if (result.kind != CalibrationKind::Adaptive)
        CHFUQ_THROW(Error, "cp_interval_adaptive: calibration is not adaptive");
    if (!(sigma > 0.0)) CHFUQ_THROW(Error, "cp_interval_adaptive: sigma = %g is not > 0", sigma);
    if (result.infinite) {
        const double inf = std::numeric_limits<double>::infinity();
        return {-inf, inf};
    }
    return {mu - sigma * result.q_hat, mu + sigma * result.q_hat};
}

BetaCoverageLaw beta_coverage_params(std::size_t n, double alpha) {
    if (n < 1) CHFUQ_THROW(Error, "beta_coverage_params: n must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        CHFUQ_THROW(Error, "beta_coverage_params: alpha must be in (0,1), got %g", alpha);
    const std::size_t l = static_cast<std::size_t>(
        std::ceil((1.0 + static_cast<double>(n)) * (1.0 - alpha)));
    BetaCoverageLaw law;
    law.l = l;
    law.a = static_cast<double>(l);
    law.b = static_cast<double>(n + 1 - l);
    return law;
}

}  // namespace chfuq::uq
