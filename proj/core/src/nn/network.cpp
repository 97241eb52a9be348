#include "chfuq/nn/network.hpp"

#include <cmath>

#include "chfuq/common/error.hpp"

namespace chfuq::nn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

struct LayerPlan {
    std::string name;
    LayerKind kind;
    std::size_t in = 0;   // dense layers
    std::size_t out = 0;  // dense: out width; batchnorm: channel count
};

std::vector<std::string> head_names(const NetworkSpec& spec) {
    switch (spec.heads) {
        case HeadLayout::Single: return {"mu"};
        case HeadLayout::Double: return {"mu", "sigma"};
        case HeadLayout::Triple: return {"mu", "lower", "upper"};
    }
    return {};
}

std::vector<LayerPlan> build_plan(const NetworkSpec& spec) {
    spec.validate();
    const LayerKind dense_kind = spec.bayesian ? LayerKind::BayesDense : LayerKind::Dense;
    std::vector<LayerPlan> plan;
    std::size_t width = spec.input_width;

    if (spec.backbone == BackboneKind::Residual) {
        plan.push_back({"backbone.input", dense_kind, width, spec.hidden_width});
        width = spec.hidden_width;
        for (std::size_t i = 0; i < spec.depth; ++i) {
            const std::string b = "block" + std::to_string(i);
            plan.push_back({b + ".bn", LayerKind::BatchNorm, width, width});
            plan.push_back({b + ".dense", dense_kind, width, width});
        }
    } else {
        for (std::size_t i = 0; i < spec.depth; ++i) {
            const std::string m = "mlp" + std::to_string(i);
            plan.push_back({m + ".dense", dense_kind, width, spec.hidden_width});
            width = spec.hidden_width;
            plan.push_back({m + ".bn", LayerKind::BatchNorm, width, width});
        }
    }

    if (spec.joint_layer) {
        plan.push_back({"joint.dense", dense_kind, width, spec.head_width});
        width = spec.head_width;
        for (const auto& h : head_names(spec)) {
            std::size_t hw = width;
            for (std::size_t d = 0; d < spec.head_depth; ++d)
                plan.push_back({"head." + h + "." + std::to_string(d), dense_kind, hw, hw});
            plan.push_back({"head." + h + ".out", dense_kind, hw, 1});
        }
    } else {
        plan.push_back({"head.out", dense_kind, width, spec.output_count()});
    }
    return plan;
}

double inverse_softplus(double y) {
    // softplus(x) = y with beta = 1; y > 0.
    return std::log(std::expm1(y));
}

}  // namespace

void NetworkSpec::validate() const {
    if (input_width == 0) CHFUQ_THROW(Error, "network spec: input width 0");
    if (hidden_width == 0 && (backbone == BackboneKind::Residual || depth > 0))
        CHFUQ_THROW(Error, "network spec: hidden width 0");
    if (joint_layer && head_width == 0) CHFUQ_THROW(Error, "network spec: head width 0");
    if (mu_softplus_beta <= 0.0 || sigma_softplus_beta <= 0.0)
        CHFUQ_THROW(Error, "network spec: softplus beta must be > 0");
    if (bayesian && prior_sigma <= 0.0)
        CHFUQ_THROW(Error, "network spec: prior sigma must be > 0");
}

LayerParams* ParameterSet::find(const std::string& name) {
    for (auto& l : layers)
        if (l.name == name) return &l;
    return nullptr;
}

const LayerParams* ParameterSet::find(const std::string& name) const {
    for (const auto& l : layers)
        if (l.name == name) return &l;
    return nullptr;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& l : layers)
        for (const auto& t : l.tensors) n += t.size();
    return n;
}

std::vector<std::string> layer_names(const NetworkSpec& spec) {
    std::vector<std::string> names;
    for (const auto& p : build_plan(spec)) names.push_back(p.name);
    return names;
}

bool is_head_layer(const std::string& layer_name) {
    return layer_name.rfind("head.", 0) == 0 || layer_name.rfind("joint.", 0) == 0;
}

ParameterSet init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
    engine::Rng rng(seed);
    ParameterSet params;
    for (const auto& p : build_plan(spec)) {
        LayerParams layer;
        layer.name = p.name;
        layer.kind = p.kind;
        if (p.kind == LayerKind::BatchNorm) {
            layer.tensors.push_back(engine::Array::full(1, p.out, 1.0));  // gamma
            layer.tensors.push_back(engine::Array(1, p.out));             // beta
            layer.state.push_back(engine::Array(1, p.out));               // running mean
            layer.state.push_back(engine::Array::full(1, p.out, 1.0));    // running var
        } else {
            // Kaiming uniform with relu gain: bound = sqrt(2) * sqrt(3 / fan_in).
            const double w_bound = std::sqrt(6.0 / static_cast<double>(p.in));
            const double b_bound = 1.0 / std::sqrt(static_cast<double>(p.in));
            engine::Array w(p.in, p.out);
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-w_bound, w_bound);
            engine::Array b(1, p.out);
            for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.uniform(-b_bound, b_bound);
            if (p.kind == LayerKind::Dense) {
                layer.tensors.push_back(std::move(w));
                layer.tensors.push_back(std::move(b));
            } else {
                // Posterior means as for a deterministic layer; initial
                // posterior scale at 5% of the respective init bound.
                layer.tensors.push_back(std::move(w));
                layer.tensors.push_back(
                    engine::Array::full(p.in, p.out, inverse_softplus(0.05 * w_bound)));
                layer.tensors.push_back(std::move(b));
                layer.tensors.push_back(
                    engine::Array::full(1, p.out, inverse_softplus(0.05 * b_bound)));
            }
        }
        params.layers.push_back(std::move(layer));
    }
    return params;
}

BoundParams bind_parameters(engine::Tape& tape, const ParameterSet& params) {
    BoundParams bound;
    bound.tensors.reserve(params.layers.size());
    for (const auto& layer : params.layers) {
        std::vector<engine::Var> vars;
        for (const auto& t : layer.tensors) vars.push_back(tape.leaf(t, layer.trainable));
        for (const auto& s : layer.state) vars.push_back(tape.leaf(s, false));
        bound.tensors.push_back(std::move(vars));
    }
    return bound;
}

namespace {

engine::Var batchnorm_forward(engine::Tape& tape, engine::Var x,
                              const std::vector<engine::Var>& vars, LayerParams& layer,
                              const ForwardMode& mode) {
    const engine::Var gamma = vars[0], beta = vars[1];
    engine::Var centered, denom;
    if (mode.phase == ForwardMode::Phase::Train) {
        const std::size_t n = tape.val(x).rows();
        if (n < 2)
            CHFUQ_THROW(Error, "batchnorm %s: train phase needs batch >= 2, got %zu",
                        layer.name.c_str(), n);
        const engine::Var m = tape.col_mean(x);
        centered = tape.sub(x, m);
        const engine::Var v = tape.col_mean(tape.square(centered));
        denom = tape.sqrt(tape.add_scalar(v, kBnEps));
        // Running statistics update (independent of the freeze mask); the
        // variance is stored unbiased.
        const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
        engine::Array& rm = layer.state[0];
        engine::Array& rv = layer.state[1];
        const engine::Array& bm = tape.val(m);
        const engine::Array& bv = tape.val(v);
        for (std::size_t j = 0; j < rm.size(); ++j) {
            rm[j] = (1.0 - kBnMomentum) * rm[j] + kBnMomentum * bm[j];
            rv[j] = (1.0 - kBnMomentum) * rv[j] + kBnMomentum * bv[j] * unbias;
        }
    } else {
        const engine::Var rm = vars[2], rv = vars[3];
        centered = tape.sub(x, rm);
        denom = tape.sqrt(tape.add_scalar(rv, kBnEps));
    }
    const engine::Var xhat = tape.div(centered, denom);
    return tape.add(tape.mul(xhat, gamma), beta);
}

engine::Var dense_like_forward(engine::Tape& tape, engine::Var x,
                               const std::vector<engine::Var>& vars, const LayerParams& layer,
                               const ForwardMode& mode, engine::Rng* noise) {
    if (layer.kind == LayerKind::Dense)
        return tape.add(tape.matmul(x, vars[0]), vars[1]);
    if (noise == nullptr)
        CHFUQ_THROW(Error, "bayes dense %s: missing noise source", layer.name.c_str());
    return bayes_dense_forward(tape, x, vars[0], vars[1], vars[2], vars[3], mode.stochastic,
                               *noise);
}

}  // namespace

engine::Var bayes_dense_forward(engine::Tape& tape, engine::Var x, engine::Var w_mean,
                                engine::Var w_rho, engine::Var b_mean, engine::Var b_rho,
                                bool stochastic, engine::Rng& noise) {
    engine::Var w = w_mean, b = b_mean;
    if (stochastic) {
        const engine::Array& wm = tape.val(w_mean);
        engine::Array eps_w(wm.rows(), wm.cols());
        for (std::size_t i = 0; i < eps_w.size(); ++i) eps_w[i] = noise.gaussian();
        const engine::Array& bm = tape.val(b_mean);
        engine::Array eps_b(bm.rows(), bm.cols());
        for (std::size_t i = 0; i < eps_b.size(); ++i) eps_b[i] = noise.gaussian();
        w = tape.add(w_mean, tape.mul(tape.softplus(w_rho, 1.0), tape.leaf(std::move(eps_w))));
        b = tape.add(b_mean, tape.mul(tape.softplus(b_rho, 1.0), tape.leaf(std::move(eps_b))));
    }
    return tape.add(tape.matmul(x, w), b);
}

engine::Var kl_gaussian(engine::Tape& tape, engine::Var mean, engine::Var rho,
                        double prior_sigma) {
    if (prior_sigma <= 0.0)
        CHFUQ_THROW(Error, "kl_gaussian: prior sigma must be > 0, got %g", prior_sigma);
    const engine::Var sigma = tape.softplus(rho, 1.0);
    const engine::Var var = tape.square(sigma);
    // sum of: ln(prior) - ln(sigma) + (sigma^2 + mean^2) / (2 prior^2) - 1/2
    const engine::Var ratio = tape.scale(
        tape.add(var, tape.square(mean)), 1.0 / (2.0 * prior_sigma * prior_sigma));
    const engine::Var logterm = tape.scale(tape.log(sigma), -1.0);
    const engine::Var combined =
        tape.add_scalar(tape.add(ratio, logterm), std::log(prior_sigma) - 0.5);
    return tape.sum(combined);
}

engine::Var residual_block_forward(engine::Tape& tape, engine::Var x,
                                   const std::vector<engine::Var>& bn_tensors,
                                   const std::vector<engine::Var>& dense_tensors,
                                   LayerParams& bn_layer, LayerParams& dense_layer,
                                   const ForwardMode& mode, engine::Rng* noise) {
    const std::size_t in_width = tape.val(x).cols();
    const engine::Array& w = tape.val(dense_tensors[0]);
    if (w.rows() != in_width || w.cols() != in_width)
        CHFUQ_THROW(Error, "residual block %s: needs in width == out width, got %zux%zu for %zu",
                    dense_layer.name.c_str(), w.rows(), w.cols(), in_width);
    const engine::Var pre = batchnorm_forward(tape, x, bn_tensors, bn_layer, mode);
    const engine::Var act = tape.relu(pre);
    const engine::Var branch = dense_like_forward(tape, act, dense_tensors, dense_layer, mode, noise);
    return tape.add(branch, x);
}

HeadOutputs network_forward(engine::Tape& tape, engine::Var x, const NetworkSpec& spec,
                            ParameterSet& params, const BoundParams& bound,
                            const ForwardMode& mode) {
    spec.validate();
    const engine::Array& xv = tape.val(x);
    if (xv.cols() != spec.input_width)
        CHFUQ_THROW(Error, "network: input has width %zu, spec wants %zu", xv.cols(),
                    spec.input_width);
    if (params.layers.size() != bound.tensors.size())
        CHFUQ_THROW(Error, "network: bound parameters out of sync");

    engine::Rng noise(mode.sample_seed);
    engine::Rng* noise_ptr = spec.bayesian ? &noise : nullptr;

    std::size_t li = 0;
    auto next = [&](const char* what) -> std::size_t {
        if (li >= params.layers.size())
            CHFUQ_THROW(Error, "network: parameter set too short, expected %s", what);
        return li++;
    };

    engine::Var h = x;
    if (spec.backbone == BackboneKind::Residual) {
        h = dense_like_forward(tape, h, bound.tensors[li], params.layers[li], mode, noise_ptr);
        ++li;
        for (std::size_t i = 0; i < spec.depth; ++i) {
            const std::size_t bn = next("block bn");
            const std::size_t de = next("block dense");
            h = residual_block_forward(tape, h, bound.tensors[bn], bound.tensors[de],
                                       params.layers[bn], params.layers[de], mode, noise_ptr);
        }
    } else {
        for (std::size_t i = 0; i < spec.depth; ++i) {
            const std::size_t de = next("mlp dense");
            h = dense_like_forward(tape, h, bound.tensors[de], params.layers[de], mode,
                                   noise_ptr);
            const std::size_t bn = next("mlp bn");
            h = batchnorm_forward(tape, h, bound.tensors[bn], params.layers[bn], mode);
            h = tape.relu(h);
        }
    }

    std::vector<engine::Var> raw_heads;
    if (spec.joint_layer) {
        const std::size_t j = next("joint dense");
        h = tape.relu(
            dense_like_forward(tape, h, bound.tensors[j], params.layers[j], mode, noise_ptr));
        for (std::size_t hn = 0; hn < spec.output_count(); ++hn) {
            engine::Var t = h;
            for (std::size_t d = 0; d < spec.head_depth; ++d) {
                const std::size_t hd = next("head dense");
                t = tape.relu(dense_like_forward(tape, t, bound.tensors[hd], params.layers[hd],
                                                 mode, noise_ptr));
            }
            const std::size_t ho = next("head out");
            raw_heads.push_back(dense_like_forward(tape, t, bound.tensors[ho], params.layers[ho],
                                                   mode, noise_ptr));
        }
    } else {
        const std::size_t ho = next("head out");
        const engine::Var out =
            dense_like_forward(tape, h, bound.tensors[ho], params.layers[ho], mode, noise_ptr);
        for (std::size_t c = 0; c < spec.output_count(); ++c)
            raw_heads.push_back(tape.slice_cols(out, c, 1));
    }
    if (li != params.layers.size())
        CHFUQ_THROW(Error, "network: %zu unused parameter layers", params.layers.size() - li);

    HeadOutputs out;
    out.mu = tape.softplus(raw_heads[0], spec.mu_softplus_beta);
    if (spec.heads == HeadLayout::Double)
        out.sigma = tape.softplus(raw_heads[1], spec.sigma_softplus_beta);
    if (spec.heads == HeadLayout::Triple) {
        out.lower = raw_heads[1];
        out.upper = raw_heads[2];
    }

    if (spec.bayesian) {
        engine::Var kl;
        bool first = true;
        for (std::size_t i = 0; i < params.layers.size(); ++i) {
            if (params.layers[i].kind != LayerKind::BayesDense) continue;
            const auto& vars = bound.tensors[i];
            const engine::Var kw = kl_gaussian(tape, vars[0], vars[1], spec.prior_sigma);
            const engine::Var kb = kl_gaussian(tape, vars[2], vars[3], spec.prior_sigma);
            const engine::Var k = tape.add(kw, kb);
            kl = first ? k : tape.add(kl, k);
            first = false;
        }
        if (!first) out.kl = kl;
    }
    return out;
}

Predictions predict(const NetworkSpec& spec, ParameterSet& params, const engine::Array& x,
                    const ForwardMode& mode) {
    engine::Tape tape;
    const engine::Var xin = tape.leaf(x);
    const BoundParams bound = bind_parameters(tape, params);
    const HeadOutputs heads = network_forward(tape, xin, spec, params, bound, mode);
    Predictions pred;
    auto pull = [&](engine::Var v, std::vector<double>& dst) {
        const engine::Array& a = tape.val(v);
        dst.assign(a.values().begin(), a.values().end());
    };
    pull(heads.mu, pred.mu);
    if (heads.sigma) pull(*heads.sigma, pred.sigma);
    if (heads.lower) pull(*heads.lower, pred.lower);
    if (heads.upper) pull(*heads.upper, pred.upper);
    return pred;
}

ParameterSet apply_freeze_mask(ParameterSet params, const std::vector<bool>& mask) {
    if (mask.size() != params.layers.size())
        CHFUQ_THROW(Error, "freeze mask: %zu entries for %zu layers", mask.size(),
                    params.layers.size());
    for (std::size_t i = 0; i < mask.size(); ++i) params.layers[i].trainable = mask[i];
    return params;
}

}  // namespace chfuq::nn
