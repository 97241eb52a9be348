#pragma once

#include <functional>

#include "chfuq/engine/tape.hpp"
#include "chfuq/nn/network.hpp"

namespace chfuq::losses {

enum class LossKind : std::uint8_t { Mse, Rmspe, Ghr, Qd, BetaElbo };

struct LossConfig {
    LossKind kind = LossKind::Rmspe;
    double gamma = 0.5;         // objective weight, in (0,1)
    double lambda = 100.0;      // coverage penalty strength, >= 0
    double alpha = 0.05;        // significance, in (0,1)
    double s = 0.1;             // sigmoid smoothness, > 0
    double beta_kl = 1.0;       // KL weight, >= 0
    double prior_sigma = 1.0;   // weight prior scale, > 0
    std::size_t elbo_samples = 1;  // MC samples per step, >= 1

    void validate() const;
};

/// Mean of squared residuals.
engine::Var mse_loss(engine::Tape& tape, engine::Var mu, engine::Var y);

/// Root mean squared fractional error (the x100 belongs to the metric, not
/// the loss).
engine::Var rmspe_loss(engine::Tape& tape, engine::Var mu, engine::Var y);

/// Weighted Gaussian negative log-likelihood:
/// mean of (gamma/2) ln sigma^2 + (1-gamma) (y-mu)^2 / (2 sigma^2).
engine::Var ghr_loss(engine::Tape& tape, engine::Var mu, engine::Var sigma_sq, engine::Var y,
                     double gamma);

/// Smooth membership of y in [lower, upper]:
/// sigmoid(s (y - lower)) * sigmoid(s (upper - y)).
engine::Var soft_indicator(engine::Tape& tape, engine::Var y, engine::Var lower,
                           engine::Var upper, double s);

/// Composite interval-learning objective:
///   total = gamma * RMSPE(mu, y)
///         + (1-gamma) * [MPIW_captured + lambda n/(alpha(1-alpha))
///                        max(0, (1-alpha) - PICP)^2]
/// The gradient path uses the soft indicator in both the captured-width
/// average and the coverage penalty; the hard-indicator MPIW/PICP are
/// reported alongside for logging. A batch with nothing captured yields a
/// zero MPIW term rather than an error.
struct QdParts {
    engine::Var total;
    double rmspe = 0.0;
    double mpiw_soft = 0.0;
    double mpiw_hard = 0.0;   // over hard-captured samples; 0 when none
    double picp_soft = 0.0;
    double picp_hard = 0.0;
    double penalty = 0.0;
};
QdParts qd_loss(engine::Tape& tape, engine::Var mu, engine::Var lower, engine::Var upper,
                engine::Var y, const LossConfig& config);

/// One stochastic forward pass for the ELBO; called once per MC sample with
/// fresh weight noise. Must return double-head (mu, sigma) outputs and the
/// network KL on the same tape.
using ElboSampler = std::function<nn::HeadOutputs(engine::Tape& tape, std::size_t sample)>;

/// MC average of the Gaussian negative log-likelihood plus
/// beta_kl * KL / train_size, so that one epoch of batches weights the KL as
/// a single pass over the full objective would.
engine::Var beta_elbo_loss(engine::Tape& tape, const ElboSampler& sampler, engine::Var y,
                           const LossConfig& config, std::size_t train_size);

}  // namespace chfuq::losses
