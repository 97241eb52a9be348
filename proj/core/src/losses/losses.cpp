#include "chfuq/losses/losses.hpp"

#include <cmath>

#include "chfuq/common/error.hpp"

namespace chfuq::losses {

using engine::Tape;
using engine::Var;

void LossConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
        CHFUQ_THROW(Error, "loss config: gamma must be in (0,1), got %g", gamma);
    if (lambda < 0.0) CHFUQ_THROW(Error, "loss config: lambda must be >= 0, got %g", lambda);
    if (!(alpha > 0.0 && alpha < 1.0))
        CHFUQ_THROW(Error, "loss config: alpha must be in (0,1), got %g", alpha);
    if (!(s > 0.0)) CHFUQ_THROW(Error, "loss config: s must be > 0, got %g", s);
    if (beta_kl < 0.0) CHFUQ_THROW(Error, "loss config: beta_kl must be >= 0, got %g", beta_kl);
    if (!(prior_sigma > 0.0))
        CHFUQ_THROW(Error, "loss config: prior sigma must be > 0, got %g", prior_sigma);
    if (elbo_samples < 1) CHFUQ_THROW(Error, "loss config: elbo samples must be >= 1");
}

namespace {

void require_batch(Tape& tape, Var mu, Var y, const char* who) {
    const auto& m = tape.val(mu);
    const auto& t = tape.val(y);
    if (!m.same_shape(t))
        CHFUQ_THROW(Error, "%s: shape mismatch %s vs %s", who, engine::shape_str(m).c_str(),
                    engine::shape_str(t).c_str());
    if (m.size() == 0) CHFUQ_THROW(Error, "%s: empty batch", who);
}

}  // namespace

Var mse_loss(Tape& tape, Var mu, Var y) {
    require_batch(tape, mu, y, "mse_loss");
    return tape.mean(tape.square(tape.sub(y, mu)));
}

Var rmspe_loss(Tape& tape, Var mu, Var y) {
    require_batch(tape, mu, y, "rmspe_loss");
    const auto& t = tape.val(y);
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] == 0.0) CHFUQ_THROW(Error, "rmspe_loss: y[%zu] == 0", i);
    return tape.sqrt(tape.mean(tape.square(tape.div(tape.sub(y, mu), y))));
}

Var ghr_loss(Tape& tape, Var mu, Var sigma_sq, Var y, double gamma) {
    require_batch(tape, mu, y, "ghr_loss");
    if (!(gamma > 0.0 && gamma < 1.0))
        CHFUQ_THROW(Error, "ghr_loss: gamma must be in (0,1), got %g", gamma);
    const auto& v = tape.val(sigma_sq);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] > 0.0)) CHFUQ_THROW(Error, "ghr_loss: sigma^2[%zu] = %g is not > 0", i, v[i]);
    const Var log_term = tape.scale(tape.log(sigma_sq), gamma / 2.0);
    const Var quad = tape.div(tape.square(tape.sub(y, mu)), tape.scale(sigma_sq, 2.0));
    return tape.mean(tape.add(log_term, tape.scale(quad, 1.0 - gamma)));
}

Var soft_indicator(Tape& tape, Var y, Var lower, Var upper, double s) {
    if (!(s > 0.0)) CHFUQ_THROW(Error, "soft_indicator: s must be > 0, got %g", s);
    const Var left = tape.sigmoid(tape.scale(tape.sub(y, lower), s));
    const Var right = tape.sigmoid(tape.scale(tape.sub(upper, y), s));
    return tape.mul(left, right);
}

QdParts qd_loss(Tape& tape, Var mu, Var lower, Var upper, Var y, const LossConfig& config) {
    config.validate();
    require_batch(tape, mu, y, "qd_loss");
    const std::size_t n = tape.val(y).size();
    const double alpha = config.alpha;

    const Var rmspe = rmspe_loss(tape, mu, y);
    const Var k_soft = soft_indicator(tape, y, lower, upper, config.s);
    const Var width = tape.sub(upper, lower);

    const Var m_soft = tape.sum(k_soft);
    const Var captured_width = tape.sum(tape.mul(width, k_soft));
    const Var mpiw_soft = tape.div(captured_width, tape.clamp_min(m_soft, 1e-12));
    const Var picp_soft = tape.mean(k_soft);

    // max(0, (1-alpha) - PICP)^2 scaled by lambda n / (alpha (1-alpha)).
    const Var shortfall =
        tape.clamp_min(tape.add_scalar(tape.scale(picp_soft, -1.0), 1.0 - alpha), 0.0);
    const double penalty_scale =
        config.lambda * static_cast<double>(n) / (alpha * (1.0 - alpha));
    const Var penalty = tape.scale(tape.square(shortfall), penalty_scale);

    const Var qd_term = tape.add(mpiw_soft, penalty);
    QdParts parts;
    parts.total = tape.add(tape.scale(rmspe, config.gamma),
                           tape.scale(qd_term, 1.0 - config.gamma));

    parts.rmspe = tape.val(rmspe).item();
    parts.mpiw_soft = tape.val(mpiw_soft).item();
    parts.picp_soft = tape.val(picp_soft).item();
    parts.penalty = tape.val(penalty).item();

    const auto& yv = tape.val(y);
    const auto& lov = tape.val(lower);
    const auto& hiv = tape.val(upper);
    const auto& wv = tape.val(width);
    std::size_t captured = 0;
    double captured_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (lov[i] <= yv[i] && yv[i] <= hiv[i]) {
            ++captured;
            captured_sum += wv[i];
        }
    }
    parts.picp_hard = static_cast<double>(captured) / static_cast<double>(n);
    parts.mpiw_hard = captured == 0 ? 0.0 : captured_sum / static_cast<double>(captured);
    return parts;
}

Var beta_elbo_loss(Tape& tape, const ElboSampler& sampler, Var y, const LossConfig& config,
                   std::size_t train_size) {
    config.validate();
    if (train_size == 0) CHFUQ_THROW(Error, "beta_elbo_loss: train size must be >= 1");

    Var nll_sum;
    Var kl;
    bool have_kl = false;
    for (std::size_t s = 0; s < config.elbo_samples; ++s) {
        const nn::HeadOutputs heads = sampler(tape, s);
        if (!heads.sigma)
            CHFUQ_THROW(Error, "beta_elbo_loss: sampler must produce double-head outputs");
        require_batch(tape, heads.mu, y, "beta_elbo_loss");
        const Var sigma_sq = tape.square(*heads.sigma);
        const Var log_term = tape.scale(tape.log(sigma_sq), 0.5);
        const Var quad = tape.div(tape.square(tape.sub(y, heads.mu)), tape.scale(sigma_sq, 2.0));
        const Var nll = tape.mean(tape.add(log_term, quad));
        nll_sum = s == 0 ? nll : tape.add(nll_sum, nll);
        if (!have_kl && heads.kl) {
            kl = *heads.kl;
            have_kl = true;
        }
    }
    if (!have_kl)
        CHFUQ_THROW(Error, "beta_elbo_loss: network has no Bayesian layers (no KL available)");
    const Var nll_avg = tape.scale(nll_sum, 1.0 / static_cast<double>(config.elbo_samples));
    return tape.add(nll_avg,
                    tape.scale(kl, config.beta_kl / static_cast<double>(train_size)));
}

}  // namespace chfuq::losses
