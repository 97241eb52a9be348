#include "chfuq/optim/optimizer.hpp"

#include <cmath>

#include "chfuq/common/error.hpp"

namespace chfuq::optim {

GradientSet collect_gradients(const engine::Tape& tape, const nn::BoundParams& bound,
                              const nn::ParameterSet& params) {
    GradientSet grads;
    grads.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        grads.layers[l].reserve(layer.tensors.size());
        for (std::size_t t = 0; t < layer.tensors.size(); ++t) {
            const engine::Var var = bound.tensors[l][t];
            if (tape.has_grad(var))
                grads.layers[l].push_back(tape.grad(var));
            else
                grads.layers[l].push_back(
                    engine::Array(layer.tensors[t].rows(), layer.tensors[t].cols()));
        }
    }
    return grads;
}

OptimizerState OptimizerState::zeros_like(const nn::ParameterSet& params) {
    OptimizerState s;
    s.m.resize(params.layers.size());
    s.v.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        for (const auto& t : params.layers[l].tensors) {
            s.m[l].push_back(engine::Array(t.rows(), t.cols()));
            s.v[l].push_back(engine::Array(t.rows(), t.cols()));
        }
    }
    return s;
}

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

void optimizer_step(OptimizerKind kind, nn::ParameterSet& params, const GradientSet& grads,
                    OptimizerState& state, double lr, double weight_decay) {
    if (!(lr > 0.0)) CHFUQ_THROW(Error, "optimizer_step: learning rate must be > 0, got %g", lr);
    if (grads.layers.size() != params.layers.size())
        CHFUQ_THROW(Error, "optimizer_step: gradients out of sync with parameters");

    ++state.t;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(kBeta1, t);
    const double bc2 = 1.0 - std::pow(kBeta2, t);

    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        if (!layer.trainable) continue;
        for (std::size_t ti = 0; ti < layer.tensors.size(); ++ti) {
            engine::Array& w = layer.tensors[ti];
            const engine::Array& g = grads.layers[l][ti];
            engine::Array& m = state.m[l][ti];
            engine::Array& v = state.v[l][ti];
            for (std::size_t i = 0; i < w.size(); ++i) {
                double gi = g[i];
                if (!std::isfinite(gi))
                    CHFUQ_THROW(TrainingError, "optimizer_step: non-finite gradient in layer %s",
                                layer.name.c_str());
                switch (kind) {
                    case OptimizerKind::Sgd: {
                        w[i] -= lr * (gi + weight_decay * w[i]);
                        break;
                    }
                    case OptimizerKind::Adam: {
                        gi += weight_decay * w[i];
                        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
                        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
                        w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
                        break;
                    }
                    case OptimizerKind::AdamW: {
                        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
                        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
                        w[i] -= lr * ((m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps) +
                                      weight_decay * w[i]);
                        break;
                    }
                }
            }
        }
    }
}

}  // namespace chfuq::optim
