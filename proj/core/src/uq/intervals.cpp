#include "chfuq/uq/intervals.hpp"

#include <cmath>

#include "chfuq/common/error.hpp"
#include "chfuq/evalstat/special_functions.hpp"

namespace chfuq::uq {

Interval hr_interval(double mu, double sigma, double alpha) {
    if (!(sigma > 0.0)) CHFUQ_THROW(Error, "hr_interval: sigma = %g is not > 0", sigma);
    if (!(alpha > 0.0 && alpha < 1.0))
        CHFUQ_THROW(Error, "hr_interval: alpha must be in (0,1), got %g", alpha);
    const double delta = sigma * evalstat::normal_ppf(1.0 - alpha / 2.0);
    return {mu - delta, mu + delta};
}

std::vector<PredictionBundle> bnn_predict(const nn::NetworkSpec& spec, nn::ParameterSet& params,
                                          const engine::Array& x, std::size_t samples,
                                          double alpha, std::uint64_t seed) {
    if (samples < 2)
        CHFUQ_THROW(Error, "bnn_predict: needs >= 2 samples for a variance, got %zu", samples);
    if (!spec.bayesian) CHFUQ_THROW(Error, "bnn_predict: network is not Bayesian");
    if (spec.heads != nn::HeadLayout::Double)
        CHFUQ_THROW(Error, "bnn_predict: needs a double-head network");

    const std::size_t n = x.rows();
    std::vector<double> mean_sum(n, 0.0), mean_sq_sum(n, 0.0), var_sum(n, 0.0);

    engine::Rng seeder(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        nn::ForwardMode mode;
        mode.phase = nn::ForwardMode::Phase::Eval;
        mode.stochastic = true;
        mode.sample_seed = seeder.raw();
        const nn::Predictions pred = nn::predict(spec, params, x, mode);
        for (std::size_t i = 0; i < n; ++i) {
            mean_sum[i] += pred.mu[i];
            mean_sq_sum[i] += pred.mu[i] * pred.mu[i];
            var_sum[i] += pred.sigma[i] * pred.sigma[i];
        }
    }

    const double S = static_cast<double>(samples);
    std::vector<PredictionBundle> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        PredictionBundle& b = out[i];
        b.mu = mean_sum[i] / S;
        UncertaintyDecomposition d;
        d.data_var = var_sum[i] / S;
        // Unbiased sample variance of the MC means; clamp tiny negative
        // round-off from the two-pass-free form.
        d.model_var = std::max(0.0, (mean_sq_sum[i] - S * b.mu * b.mu) / (S - 1.0));
        d.pred_var = d.model_var + d.data_var;
        b.decomposition = d;
        const double sigma_pred = std::sqrt(d.pred_var);
        b.sigma = sigma_pred;
        b.bounds = hr_interval(b.mu, sigma_pred, alpha);
    }
    return out;
}

PredictionBundle qd_extract(double mu, double lower, double upper) {
    PredictionBundle b;
    b.mu = mu;
    b.bounds = Interval{lower, upper};
    b.reliable = !(upper < mu || lower > mu);
    return b;
}

}  // namespace chfuq::uq
