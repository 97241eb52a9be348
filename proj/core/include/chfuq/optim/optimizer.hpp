#pragma once

#include "chfuq/engine/tape.hpp"
#include "chfuq/nn/network.hpp"

namespace chfuq::optim {

enum class OptimizerKind : std::uint8_t { Sgd, Adam, AdamW };

/// Per-layer, per-tensor gradients aligned with a ParameterSet.
struct GradientSet {
    std::vector<std::vector<engine::Array>> layers;
};

/// Pull gradients off a tape after backward(); tensors that received none
/// (frozen layers, dead paths) get zeros.
GradientSet collect_gradients(const engine::Tape& tape, const nn::BoundParams& bound,
                              const nn::ParameterSet& params);

struct OptimizerState {
    std::vector<std::vector<engine::Array>> m;  // first moments
    std::vector<std::vector<engine::Array>> v;  // second moments
    std::size_t t = 0;

    static OptimizerState zeros_like(const nn::ParameterSet& params);
};

/// One update. SGD and Adam treat weight decay as an L2 gradient term;
/// AdamW decouples it. Adam constants: beta1 0.9, beta2 0.999, eps 1e-8.
/// Frozen layers are skipped entirely. A non-finite gradient raises with the
/// layer name.
void optimizer_step(OptimizerKind kind, nn::ParameterSet& params, const GradientSet& grads,
                    OptimizerState& state, double lr, double weight_decay);

}  // namespace chfuq::optim
