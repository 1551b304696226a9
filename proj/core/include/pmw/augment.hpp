#pragma once

#include <cstdint>

#include "pmw/rng.hpp"
#include "pmw/tensor.hpp"

namespace pmw {

struct AugmentConfig {
  float rotation_deg = 20.0f;  // max absolute rotation
  float zoom_min = 0.8f;       // multiplicative
  float zoom_max = 1.2f;
  float hflip_prob = 0.5f;
};

// Label-preserving, shape-preserving transform: rotation + zoom as one
// inverse-mapped bilinear warp (out-of-frame pixels take the nearest edge),
// then an optional exact mirror flip. The transform is fully determined by
// (seed, index); the identity configuration reproduces the input bit-exactly.
TensorF augment(const TensorF& chw, const AugmentConfig& cfg,
                std::uint64_t seed, std::uint64_t index);

// Exact horizontal mirror (its own inverse).
TensorF hflip(const TensorF& chw);

}  // namespace pmw
