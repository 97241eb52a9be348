#pragma once

#include <string>

#include "chfuq/nn/network.hpp"

namespace chfuq::nn {

/// Self-describing model container: versioned magic string, a JSON header
/// carrying the spec plus per-layer tensor names/shapes/offsets, then the
/// parameter blocks as raw little-endian 64-bit floats.
struct Checkpoint {
    NetworkSpec spec;
    ParameterSet params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace chfuq::nn
