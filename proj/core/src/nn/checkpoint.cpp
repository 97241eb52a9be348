#include "chfuq/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "chfuq/common/error.hpp"

namespace chfuq::nn {

namespace {

constexpr char kMagic[] = "CHFUQ-CKPT-v1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written as little-endian doubles");

using json = nlohmann::json;

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Dense: return "dense";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::BayesDense: return "bayes-dense";
    }
    return "?";
}

LayerKind layer_kind_from(const std::string& s) {
    if (s == "dense") return LayerKind::Dense;
    if (s == "batchnorm") return LayerKind::BatchNorm;
    if (s == "bayes-dense") return LayerKind::BayesDense;
    CHFUQ_THROW(UsageError, "checkpoint: unknown layer kind '%s'", s.c_str());
}

json spec_to_json(const NetworkSpec& s) {
    return json{{"input_width", s.input_width},
                {"hidden_width", s.hidden_width},
                {"depth", s.depth},
                {"backbone", s.backbone == BackboneKind::Residual ? "residual" : "mlp"},
                {"heads", s.heads == HeadLayout::Single   ? "single"
                          : s.heads == HeadLayout::Double ? "double"
                                                          : "triple"},
                {"joint_layer", s.joint_layer},
                {"head_width", s.head_width},
                {"head_depth", s.head_depth},
                {"bayesian", s.bayesian},
                {"prior_sigma", s.prior_sigma},
                {"mu_softplus_beta", s.mu_softplus_beta},
                {"sigma_softplus_beta", s.sigma_softplus_beta}};
}

NetworkSpec spec_from_json(const json& j) {
    NetworkSpec s;
    s.input_width = j.at("input_width").get<std::size_t>();
    s.hidden_width = j.at("hidden_width").get<std::size_t>();
    s.depth = j.at("depth").get<std::size_t>();
    s.backbone = j.at("backbone").get<std::string>() == "mlp" ? BackboneKind::Mlp
                                                              : BackboneKind::Residual;
    const std::string heads = j.at("heads").get<std::string>();
    s.heads = heads == "single" ? HeadLayout::Single
              : heads == "double" ? HeadLayout::Double
                                  : HeadLayout::Triple;
    s.joint_layer = j.at("joint_layer").get<bool>();
    s.head_width = j.at("head_width").get<std::size_t>();
    s.head_depth = j.at("head_depth").get<std::size_t>();
    s.bayesian = j.at("bayesian").get<bool>();
    s.prior_sigma = j.at("prior_sigma").get<double>();
    s.mu_softplus_beta = j.at("mu_softplus_beta").get<double>();
    s.sigma_softplus_beta = j.at("sigma_softplus_beta").get<double>();
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json layers = json::array();
    std::size_t offset = 0;
    auto describe = [&](const engine::Array& a) {
        json t{{"rows", a.rows()}, {"cols", a.cols()}, {"offset", offset}};
        offset += a.size();
        return t;
    };
    for (const auto& l : ckpt.params.layers) {
        json jl{{"name", l.name},
                {"kind", layer_kind_name(l.kind)},
                {"trainable", l.trainable},
                {"tensors", json::array()},
                {"state", json::array()}};
        for (const auto& t : l.tensors) jl["tensors"].push_back(describe(t));
        for (const auto& s : l.state) jl["state"].push_back(describe(s));
        layers.push_back(std::move(jl));
    }
    const json header{{"spec", spec_to_json(ckpt.spec)},
                      {"layers", std::move(layers)},
                      {"blob_doubles", offset}};
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) CHFUQ_THROW(UsageError, "checkpoint: cannot write '%s'", path.c_str());
    out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
    const std::uint64_t hlen = header_str.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& l : ckpt.params.layers) {
        for (const auto& t : l.tensors)
            out.write(reinterpret_cast<const char*>(t.data()),
                      static_cast<std::streamsize>(t.size() * sizeof(double)));
        for (const auto& s : l.state)
            out.write(reinterpret_cast<const char*>(s.data()),
                      static_cast<std::streamsize>(s.size() * sizeof(double)));
    }
    if (!out) CHFUQ_THROW(UsageError, "checkpoint: short write to '%s'", path.c_str());
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) CHFUQ_THROW(UsageError, "checkpoint: cannot read '%s'", path.c_str());
    char magic[kMagicLen];
    in.read(magic, static_cast<std::streamsize>(kMagicLen));
    if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0)
        CHFUQ_THROW(UsageError, "checkpoint: '%s' has wrong magic/version", path.c_str());
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(hlen));
    if (!in) CHFUQ_THROW(UsageError, "checkpoint: truncated header in '%s'", path.c_str());

    json header;
    try {
        header = json::parse(header_str);
    } catch (const std::exception& e) {
        CHFUQ_THROW(UsageError, "checkpoint: bad header in '%s': %s", path.c_str(), e.what());
    }

    Checkpoint ckpt;
    ckpt.spec = spec_from_json(header.at("spec"));
    const std::size_t blob_doubles = header.at("blob_doubles").get<std::size_t>();
    std::vector<double> blob(blob_doubles);
    in.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(blob_doubles * sizeof(double)));
    if (!in) CHFUQ_THROW(UsageError, "checkpoint: truncated blob in '%s'", path.c_str());

    auto read_tensor = [&](const json& t) {
        const std::size_t rows = t.at("rows").get<std::size_t>();
        const std::size_t cols = t.at("cols").get<std::size_t>();
        const std::size_t off = t.at("offset").get<std::size_t>();
        if (off + rows * cols > blob.size())
            CHFUQ_THROW(UsageError, "checkpoint: tensor exceeds blob in '%s'", path.c_str());
        std::vector<double> v(blob.begin() + static_cast<std::ptrdiff_t>(off),
                              blob.begin() + static_cast<std::ptrdiff_t>(off + rows * cols));
        return engine::Array(rows, cols, std::move(v));
    };
    for (const auto& jl : header.at("layers")) {
        LayerParams l;
        l.name = jl.at("name").get<std::string>();
        l.kind = layer_kind_from(jl.at("kind").get<std::string>());
        l.trainable = jl.at("trainable").get<bool>();
        for (const auto& t : jl.at("tensors")) l.tensors.push_back(read_tensor(t));
        for (const auto& s : jl.at("state")) l.state.push_back(read_tensor(s));
        ckpt.params.layers.push_back(std::move(l));
    }
    return ckpt;
}

}  // namespace chfuq::nn
