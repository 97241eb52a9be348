#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chfuq/engine/array.hpp"
#include "chfuq/engine/rng.hpp"
#include "chfuq/engine/tape.hpp"

namespace chfuq::nn {

enum class LayerKind : std::uint8_t { Dense, BatchNorm, BayesDense };

enum class HeadLayout : std::uint8_t {
    Single,  // mu
    Double,  // mu, sigma
    Triple,  // mu, lower bound, upper bound
};

enum class BackboneKind : std::uint8_t {
    Residual,  // pre-activated residual blocks: x + dense(relu(batchnorm(x)))
    Mlp,       // dense -> batchnorm -> relu stacks
};

/// Architecture description. Materializes into a flat list of named layers;
/// see `layer_names`.
struct NetworkSpec {
    std::size_t input_width = 5;
    std::size_t hidden_width = 64;
    std::size_t depth = 8;  // residual blocks (or MLP hidden layers)
    BackboneKind backbone = BackboneKind::Residual;
    HeadLayout heads = HeadLayout::Single;

    // Multi-task layout: a relu-activated joint layer projects the backbone
    // to head_width, then each output gets its own stack of head_depth
    // relu-dense layers before the final 1-unit dense. Without the joint
    // layer all outputs come from a single dense layer.
    bool joint_layer = false;
    std::size_t head_width = 64;
    std::size_t head_depth = 0;

    bool bayesian = false;
    double prior_sigma = 1.0;  // weight prior scale for Bayesian layers

    double mu_softplus_beta = 5.0;
    double sigma_softplus_beta = 5.0;

    std::size_t output_count() const {
        return heads == HeadLayout::Single ? 1 : heads == HeadLayout::Double ? 2 : 3;
    }
    void validate() const;
};

/// One named layer's trainable tensors plus non-trainable state.
struct LayerParams {
    std::string name;
    LayerKind kind = LayerKind::Dense;
    // Dense: {W in x out, b 1 x out}.
    // BayesDense: {W_mean, W_rho, b_mean, b_rho}.
    // BatchNorm: {gamma 1 x c, beta 1 x c}; state {running_mean, running_var}.
    std::vector<engine::Array> tensors;
    std::vector<engine::Array> state;
    bool trainable = true;
};

struct ParameterSet {
    std::vector<LayerParams> layers;

    LayerParams* find(const std::string& name);
    const LayerParams* find(const std::string& name) const;
    /// Total number of scalar entries across trainable tensors.
    std::size_t scalar_count() const;
};

struct ForwardMode {
    enum class Phase : std::uint8_t { Train, Eval };
    Phase phase = Phase::Eval;
    bool stochastic = false;       // sample Bayesian weights
    std::uint64_t sample_seed = 0; // noise stream for this pass
};

/// Tape handles for one pass, parallel to ParameterSet::layers/tensors.
struct BoundParams {
    std::vector<std::vector<engine::Var>> tensors;
};

/// Head outputs of one forward pass. `kl` is set only for Bayesian networks
/// (sum of weight KL terms, on tape).
struct HeadOutputs {
    engine::Var mu;
    std::optional<engine::Var> sigma;
    std::optional<engine::Var> lower;
    std::optional<engine::Var> upper;
    std::optional<engine::Var> kl;
};

/// Names of the layers a spec materializes, in forward order.
std::vector<std::string> layer_names(const NetworkSpec& spec);

/// True for output-head layers ("head." prefix) and the joint layer, i.e.
/// the layers transfer learning re-initializes when shapes change.
bool is_head_layer(const std::string& layer_name);

/// Kaiming-uniform initialization (fan-in scaling, relu gain); biases in the
/// standard companion range. Bayesian layers get Kaiming means and a rho such
/// that the initial posterior scale is 5% of the weight bound. Deterministic
/// per seed.
ParameterSet init_parameters(const NetworkSpec& spec, std::uint64_t seed);

/// Register all parameters on a tape as leaves; trainable per the layer
/// flags (batchnorm running state never trains).
BoundParams bind_parameters(engine::Tape& tape, const ParameterSet& params);

/// Full network pass. Updates batchnorm running statistics when mode is
/// train-phase. `x` is batch x input_width.
HeadOutputs network_forward(engine::Tape& tape, engine::Var x, const NetworkSpec& spec,
                            ParameterSet& params, const BoundParams& bound,
                            const ForwardMode& mode);

/// Convenience: bind + forward, returning plain value arrays (mu column,
/// optional sigma/lower/upper columns).
struct Predictions {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> lower;
    std::vector<double> upper;
};
Predictions predict(const NetworkSpec& spec, ParameterSet& params, const engine::Array& x,
                    const ForwardMode& mode);

/// Pre-activated residual block on tape: dense(relu(batchnorm(x))) + x.
/// Exposed for direct testing; network_forward composes it.
engine::Var residual_block_forward(engine::Tape& tape, engine::Var x,
                                   const std::vector<engine::Var>& bn_tensors,
                                   const std::vector<engine::Var>& dense_tensors,
                                   LayerParams& bn_layer, LayerParams& dense_layer,
                                   const ForwardMode& mode, engine::Rng* noise);

/// Sampled Bayesian dense layer: W = mean + softplus(rho) * eps with fresh
/// standard-normal eps; deterministic mode uses the posterior means.
engine::Var bayes_dense_forward(engine::Tape& tape, engine::Var x, engine::Var w_mean,
                                engine::Var w_rho, engine::Var b_mean, engine::Var b_rho,
                                bool stochastic, engine::Rng& noise);

/// Closed-form KL(N(mean, softplus(rho)^2) || N(0, prior_sigma^2)) summed
/// over all entries, built on tape so gradients flow to mean and rho.
engine::Var kl_gaussian(engine::Tape& tape, engine::Var mean, engine::Var rho,
                        double prior_sigma);

/// Sets per-layer trainable flags. Mask length must equal the layer count.
/// Frozen layers keep forward behavior (batchnorm running statistics still
/// update in train phase) but receive no optimizer updates.
ParameterSet apply_freeze_mask(ParameterSet params, const std::vector<bool>& mask);

}  // namespace chfuq::nn
