#include "pmw/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pmw {

TensorF hflip(const TensorF& chw) {
  if (chw.rank() != 3) {
    throw ShapeError("hflip: expected [C,H,W], got " + shape_str(chw.shape()));
  }
  const int C = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
  TensorF out(chw.shape());
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        out.at(c, y, x) = chw.at(c, y, W - 1 - x);
      }
    }
  }
  return out;
}

namespace {

// Inverse-mapping warp around the image center: destination pixel (x,y) reads
// the source at rotate(-angle) * (x,y) / zoom. Source coords are clamped to
// the frame (edge replication) and sampled bilinearly.
TensorF rotate_zoom(const TensorF& chw, float angle_rad, float zoom) {
  const int C = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
  TensorF out(chw.shape());
  const float cy = static_cast<float>(H - 1) / 2.0f;
  const float cx = static_cast<float>(W - 1) / 2.0f;
  const float cos_a = std::cos(angle_rad);
  const float sin_a = std::sin(angle_rad);
  const float inv_zoom = 1.0f / zoom;

  for (int y = 0; y < H; ++y) {
    const float dy = static_cast<float>(y) - cy;
    for (int x = 0; x < W; ++x) {
      const float dx = static_cast<float>(x) - cx;
      float sx = (cos_a * dx + sin_a * dy) * inv_zoom + cx;
      float sy = (-sin_a * dx + cos_a * dy) * inv_zoom + cy;
      sx = std::clamp(sx, 0.0f, static_cast<float>(W - 1));
      sy = std::clamp(sy, 0.0f, static_cast<float>(H - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, W - 1);
      const int y0 = static_cast<int>(sy);
      const int y1 = std::min(y0 + 1, H - 1);
      const float wx = sx - static_cast<float>(x0);
      const float wy = sy - static_cast<float>(y0);
      for (int c = 0; c < C; ++c) {
        const float top = chw.at(c, y0, x0) + (chw.at(c, y0, x1) - chw.at(c, y0, x0)) * wx;
        const float bot = chw.at(c, y1, x0) + (chw.at(c, y1, x1) - chw.at(c, y1, x0)) * wx;
        out.at(c, y, x) = top + (bot - top) * wy;
      }
    }
  }
  return out;
}

}  // namespace

TensorF augment(const TensorF& chw, const AugmentConfig& cfg,
                std::uint64_t seed, std::uint64_t index) {
  if (chw.rank() != 3) {
    throw ShapeError("augment: expected [C,H,W], got " + shape_str(chw.shape()));
  }
  if (cfg.zoom_min <= 0.0f || cfg.zoom_max < cfg.zoom_min) {
    throw ShapeError("augment: zoom range must be positive and ordered");
  }
  if (cfg.hflip_prob < 0.0f || cfg.hflip_prob > 1.0f) {
    throw ShapeError("augment: hflip_prob must be in [0,1]");
  }
  Rng rng = Rng(seed).stream("augment", index);
  const float angle = static_cast<float>(
      rng.uniform(-cfg.rotation_deg, cfg.rotation_deg) * std::numbers::pi / 180.0);
  const float zoom = static_cast<float>(rng.uniform(cfg.zoom_min, cfg.zoom_max));
  const bool flip = rng.bernoulli(cfg.hflip_prob);

  TensorF out = (angle == 0.0f && zoom == 1.0f) ? chw : rotate_zoom(chw, angle, zoom);
  if (flip) out = hflip(out);
  return out;
}

}  // namespace pmw
