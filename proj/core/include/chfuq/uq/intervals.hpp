#pragma once

#include <optional>
#include <vector>

#include "chfuq/nn/network.hpp"
#include "chfuq/uq/conformal.hpp"

namespace chfuq::uq {

/// Variance split of a Bayesian prediction; pred = model + data by
/// construction.
struct UncertaintyDecomposition {
    double pred_var = 0.0;
    double model_var = 0.0;  // sample variance of the MC means (epistemic)
    double data_var = 0.0;   // mean of the MC head variances (aleatoric)
};

struct PredictionBundle {
    double mu = 0.0;
    std::optional<double> sigma;
    std::optional<Interval> bounds;
    std::optional<UncertaintyDecomposition> decomposition;
    bool reliable = true;
};

/// Gaussian central interval: mu +/- sigma * z(1 - alpha/2).
Interval hr_interval(double mu, double sigma, double alpha);

/// Monte Carlo posterior-predictive summary over `samples` stochastic
/// forwards: mu = mean of head means, data variance = mean of head
/// variances, model variance = unbiased sample variance of head means;
/// bounds from hr_interval at the combined scale. Requires samples >= 2.
std::vector<PredictionBundle> bnn_predict(const nn::NetworkSpec& spec, nn::ParameterSet& params,
                                          const engine::Array& x, std::size_t samples,
                                          double alpha, std::uint64_t seed);

/// Wraps raw triple-head outputs, flagging predictions whose bounds do not
/// envelop the point estimate (upper < mu or lower > mu) as unreliable.
PredictionBundle qd_extract(double mu, double lower, double upper);

}  // namespace chfuq::uq
