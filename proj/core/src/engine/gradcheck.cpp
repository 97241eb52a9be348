#include "chfuq/engine/gradcheck.hpp"

#include <cmath>

#include "chfuq/common/error.hpp"

namespace chfuq::engine {

double finite_difference_check(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> analytic_grad,
                               std::span<const double> point, double step) {
    if (step <= 0.0) CHFUQ_THROW(Error, "finite_difference_check: step must be > 0, got %g", step);
    if (analytic_grad.size() != point.size())
        CHFUQ_THROW(Error, "finite_difference_check: gradient size %zu != point size %zu",
                    analytic_grad.size(), point.size());

    std::vector<double> x(point.begin(), point.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double fp = f(x);
        x[i] = saved - step;
        const double fm = f(x);
        x[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            CHFUQ_THROW(Error, "finite_difference_check: non-finite function value at coord %zu",
                        i);
        const double numeric = (fp - fm) / (2.0 * step);
        const double analytic = analytic_grad[i];
        const double denom = std::abs(analytic) > 1.0 ? std::abs(analytic) : 1.0;
        const double rel = std::abs(analytic - numeric) / denom;
        if (rel > worst) worst = rel;
    }
    return worst;
}

}  // namespace chfuq::engine
