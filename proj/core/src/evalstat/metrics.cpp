#include "chfuq/evalstat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chfuq/common/error.hpp"
#include "chfuq/evalstat/special_functions.hpp"

namespace chfuq::evalstat {

namespace {

void require_equal_nonempty(std::span<const double> a, std::span<const double> b,
                            const char* who) {
    if (a.size() != b.size())
        CHFUQ_THROW(Error, "%s: size mismatch %zu vs %zu", who, a.size(), b.size());
    if (a.empty()) CHFUQ_THROW(Error, "%s: empty input", who);
}

}  // namespace

double mape(std::span<const double> mu, std::span<const double> y) {
    require_equal_nonempty(mu, y, "mape");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) CHFUQ_THROW(Error, "mape: y[%zu] == 0", i);
        s += std::abs((y[i] - mu[i]) / y[i]);
    }
    return 100.0 * s / static_cast<double>(y.size());
}

double rmspe_metric(std::span<const double> mu, std::span<const double> y) {
    require_equal_nonempty(mu, y, "rmspe");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) CHFUQ_THROW(Error, "rmspe: y[%zu] == 0", i);
        const double r = (y[i] - mu[i]) / y[i];
        s += r * r;
    }
    return 100.0 * std::sqrt(s / static_cast<double>(y.size()));
}

double q2(std::span<const double> mu, std::span<const double> y) {
    require_equal_nonempty(mu, y, "q2");
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(y.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        num += (mu[i] - y[i]) * (mu[i] - y[i]);
        den += (mu[i] - ybar) * (mu[i] - ybar);
    }
    if (den == 0.0) CHFUQ_THROW(Error, "q2: all predictions equal the data mean (denominator 0)");
    return num / den;
}

double rmse(std::span<const double> mu, std::span<const double> y) {
    require_equal_nonempty(mu, y, "rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - mu[i]) * (y[i] - mu[i]);
    return std::sqrt(s / static_cast<double>(y.size()));
}

double picp(std::span<const double> lo, std::span<const double> hi, std::span<const double> y) {
    require_equal_nonempty(lo, y, "picp");
    require_equal_nonempty(hi, y, "picp");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (lo[i] <= y[i] && y[i] <= hi[i]) ++covered;
    return static_cast<double>(covered) / static_cast<double>(y.size());
}

std::vector<double> informativeness_samples(std::span<const double> mu,
                                            std::span<const double> lo,
                                            std::span<const double> hi) {
    require_equal_nonempty(mu, lo, "informativeness");
    require_equal_nonempty(mu, hi, "informativeness");
    std::vector<double> out(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] <= 0.0) CHFUQ_THROW(Error, "informativeness: mu[%zu] must be > 0", i);
        const double width = hi[i] - lo[i];
        out[i] = (width >= 0.0 && width <= 2.0 * mu[i]) ? 1.0 - width / (2.0 * mu[i]) : 0.0;
    }
    return out;
}

double informativeness(std::span<const double> mu, std::span<const double> lo,
                       std::span<const double> hi) {
    const auto s = informativeness_samples(mu, lo, hi);
    double acc = 0.0;
    for (double v : s) acc += v;
    return 100.0 * acc / static_cast<double>(s.size());
}

std::vector<double> calibration_samples(std::span<const double> mu, std::span<const double> lo,
                                        std::span<const double> hi, std::span<const double> y) {
    require_equal_nonempty(mu, y, "calibration");
    require_equal_nonempty(lo, y, "calibration");
    require_equal_nonempty(hi, y, "calibration");
    std::vector<double> out(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double m = mu[i], l = lo[i], h = hi[i], v = y[i];
        double score = 0.0;
        if (v < l || v > h) {
            score = 0.0;
        } else if (v == m) {
            score = 1.0;  // apex, also covers the degenerate-side limit
        } else if (v < m) {
            // Degenerate left side (m == l) with v strictly inside it cannot
            // happen (v < m == l means v < l); the limit rule is v == m above.
            score = (v - l) / (m - l);
        } else {
            score = (v - h) / (m - h);
        }
        out[i] = score;
    }
    return out;
}

double calibration_triangular(std::span<const double> mu, std::span<const double> lo,
                              std::span<const double> hi, std::span<const double> y) {
    const auto s = calibration_samples(mu, lo, hi, y);
    double acc = 0.0;
    for (double v : s) acc += v;
    return 100.0 * acc / static_cast<double>(s.size());
}

double uqf(std::span<const double> inform_samples, std::span<const double> calib_samples) {
    require_equal_nonempty(inform_samples, calib_samples, "uqf");
    double acc = 0.0;
    for (std::size_t i = 0; i < inform_samples.size(); ++i) {
        const double a = inform_samples[i], b = calib_samples[i];
        if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0)
            CHFUQ_THROW(Error, "uqf: per-sample inputs must be in [0,1]");
        acc += (a == 0.0 || b == 0.0) ? 0.0 : 2.0 / (1.0 / a + 1.0 / b);
    }
    return 100.0 * acc / static_cast<double>(inform_samples.size());
}

namespace {

// Shared trapezoid core: per-sample interval center and half-width unit; the
// half-width at level p is unit * z((1+p)/2) / z_ref (z_ref = 1 for the
// Gaussian family). Anchors the integrand at p = 0 and p = 1 with its exact
// limits.
double auce_core(std::span<const double> center, std::span<const double> unit,
                 std::span<const double> y, double z_ref, std::size_t grid_size) {
    if (grid_size < 2) CHFUQ_THROW(Error, "auce: grid size must be >= 2, got %zu", grid_size);
    const double n = static_cast<double>(y.size());

    std::vector<double> ps;
    std::vector<double> errs;
    ps.reserve(grid_size + 2);
    errs.reserve(grid_size + 2);

    // p -> 0: interval degenerates to the center point.
    std::size_t at_center = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == center[i]) ++at_center;
    ps.push_back(0.0);
    errs.push_back(static_cast<double>(at_center) / n);

    for (std::size_t g = 1; g <= grid_size; ++g) {
        const double p = static_cast<double>(g) / static_cast<double>(grid_size + 1);
        const double mult = normal_ppf((1.0 + p) / 2.0) / z_ref;
        std::size_t covered = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double h = unit[i] * mult;
            if (center[i] - h <= y[i] && y[i] <= center[i] + h) ++covered;
        }
        ps.push_back(p);
        errs.push_back(std::abs(static_cast<double>(covered) / n - p));
    }

    // p -> 1: unbounded interval when the width unit is positive.
    std::size_t covered1 = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (unit[i] > 0.0 || y[i] == center[i]) ++covered1;
    ps.push_back(1.0);
    errs.push_back(std::abs(static_cast<double>(covered1) / n - 1.0));

    double area = 0.0;
    for (std::size_t i = 1; i < ps.size(); ++i)
        area += 0.5 * (errs[i] + errs[i - 1]) * (ps[i] - ps[i - 1]);
    return area;
}

}  // namespace

double auce(std::span<const double> mu, std::span<const double> sigma, std::span<const double> y,
            std::size_t grid_size) {
    require_equal_nonempty(mu, y, "auce");
    require_equal_nonempty(sigma, y, "auce");
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (sigma[i] < 0.0) CHFUQ_THROW(Error, "auce: sigma[%zu] < 0", i);
    return auce_core(mu, sigma, y, 1.0, grid_size);
}

double auce_from_bounds(std::span<const double> lo, std::span<const double> hi,
                        std::span<const double> y, double alpha, std::size_t grid_size) {
    require_equal_nonempty(lo, y, "auce");
    require_equal_nonempty(hi, y, "auce");
    if (!(alpha > 0.0 && alpha < 1.0)) CHFUQ_THROW(Error, "auce: alpha must be in (0,1)");
    std::vector<double> center(y.size()), unit(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        center[i] = 0.5 * (lo[i] + hi[i]);
        // Inverted (unreliable) bounds degenerate to a point interval.
        unit[i] = std::max(0.0, 0.5 * (hi[i] - lo[i]));
    }
    const double z_ref = normal_ppf(1.0 - alpha / 2.0);
    return auce_core(center, unit, y, z_ref, grid_size);
}

std::vector<BandSummary> regime_width_summary(std::span<const double> lo,
                                              std::span<const double> hi,
                                              std::span<const double> mu,
                                              std::span<const double> band_key,
                                              std::span<const double> edges) {
    require_equal_nonempty(lo, mu, "regime_width_summary");
    require_equal_nonempty(hi, mu, "regime_width_summary");
    require_equal_nonempty(band_key, mu, "regime_width_summary");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            CHFUQ_THROW(Error, "regime_width_summary: edges must be strictly increasing");

    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t n_bands = edges.size() + 1;
    std::vector<BandSummary> bands(n_bands);
    for (std::size_t b = 0; b < n_bands; ++b) {
        bands[b].lo_edge = b == 0 ? -inf : edges[b - 1];
        bands[b].hi_edge = b == edges.size() ? inf : edges[b];
    }

    std::vector<std::vector<double>> widths(n_bands);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] == 0.0) CHFUQ_THROW(Error, "regime_width_summary: mu[%zu] == 0", i);
        std::size_t b = 0;
        while (b < edges.size() && band_key[i] >= edges[b]) ++b;
        widths[b].push_back((hi[i] - lo[i]) / mu[i]);
    }

    for (std::size_t b = 0; b < n_bands; ++b) {
        auto& w = widths[b];
        bands[b].count = w.size();
        if (w.empty()) continue;
        double s = 0.0, mx = -inf;
        for (double v : w) {
            s += v;
            mx = std::max(mx, v);
        }
        const double m = s / static_cast<double>(w.size());
        double var = 0.0;
        for (double v : w) var += (v - m) * (v - m);
        bands[b].mean_rel_width = m;
        bands[b].std_rel_width = std::sqrt(var / static_cast<double>(w.size()));
        bands[b].max_rel_width = mx;
    }
    return bands;
}

}  // namespace chfuq::evalstat
