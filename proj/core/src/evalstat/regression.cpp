#include "chfuq/evalstat/regression.hpp"

#include <cmath>

#include "chfuq/common/error.hpp"
#include "chfuq/evalstat/special_functions.hpp"

namespace chfuq::evalstat {

namespace {

// Cholesky solve of A x = b for symmetric positive definite A (in place).
std::vector<double> spd_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (d <= 0.0 || !std::isfinite(d))
            CHFUQ_THROW(Error, "ols_fit: design matrix is rank deficient (pivot %zu)", j);
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    // Forward then back substitution.
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    return b;
}

}  // namespace

OlsFit ols_fit(const engine::Array& features, std::span<const double> targets) {
    const std::size_t n = features.rows();
    const std::size_t p = features.cols();
    if (targets.size() != n)
        CHFUQ_THROW(Error, "ols_fit: %zu targets for %zu rows", targets.size(), n);
    if (n <= p + 1)
        CHFUQ_THROW(Error, "ols_fit: need more than p+1 = %zu observations, got %zu", p + 1, n);

    const std::size_t d = p + 1;  // intercept column first
    std::vector<double> gram(d * d, 0.0);
    std::vector<double> rhs(d, 0.0);
    auto design = [&](std::size_t row, std::size_t col) -> double {
        return col == 0 ? 1.0 : features.at(row, col - 1);
    };
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = design(r, i);
            rhs[i] += xi * targets[r];
            for (std::size_t j = i; j < d; ++j) gram[i * d + j] += xi * design(r, j);
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) gram[i * d + j] = gram[j * d + i];

    OlsFit fit;
    fit.coef = spd_solve(std::move(gram), std::move(rhs), d);

    double tbar = 0.0;
    for (double t : targets) tbar += t;
    tbar /= static_cast<double>(n);

    fit.residuals.resize(n);
    double ssr = 0.0, sst = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double yhat = 0.0;
        for (std::size_t i = 0; i < d; ++i) yhat += fit.coef[i] * design(r, i);
        fit.residuals[r] = targets[r] - yhat;
        ssr += fit.residuals[r] * fit.residuals[r];
        sst += (targets[r] - tbar) * (targets[r] - tbar);
    }
    // Constant target: the intercept fits exactly; define R^2 = 0.
    fit.r2 = sst == 0.0 ? 0.0 : 1.0 - ssr / sst;
    return fit;
}

BPTestResult breusch_pagan(std::span<const double> residuals, const engine::Array& features,
                           double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        CHFUQ_THROW(Error, "breusch_pagan: alpha must be in (0,1), got %g", alpha);
    const std::size_t n = features.rows();
    if (residuals.size() != n)
        CHFUQ_THROW(Error, "breusch_pagan: %zu residuals for %zu rows", residuals.size(), n);

    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = residuals[i] * residuals[i];

    const OlsFit aux = ols_fit(features, sq);
    BPTestResult out;
    out.dof = features.cols();
    out.aux_r2 = aux.r2;
    out.statistic = static_cast<double>(n) * aux.r2;
    out.p_value = chi2_survival(std::max(0.0, out.statistic), out.dof);
    out.reject = out.p_value < alpha;
    return out;
}

}  // namespace chfuq::evalstat
