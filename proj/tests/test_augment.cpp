#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pmw/augment.hpp"

using namespace pmw;

TEST_CASE("hflip applied twice is the identity") {
  std::mt19937 gen(1);
  const TensorF img = oracle::random_tensor<float>({3, 9, 12}, gen, 0.0, 1.0);
  CHECK(oracle::max_abs_diff(hflip(hflip(img)), img) == 0.0);
}

TEST_CASE("neutral configuration reproduces the input bit-exactly") {
  std::mt19937 gen(2);
  const TensorF img = oracle::random_tensor<float>({3, 16, 16}, gen, 0.0, 1.0);
  AugmentConfig cfg;
  cfg.rotation_deg = 0.0f;
  cfg.zoom_min = cfg.zoom_max = 1.0f;
  cfg.hflip_prob = 0.0f;
  const TensorF out = augment(img, cfg, 123, 7);
  CHECK(oracle::max_abs_diff(out, img) == 0.0);
}

TEST_CASE("transform is fully determined by (seed, index)") {
  std::mt19937 gen(3);
  const TensorF img = oracle::random_tensor<float>({3, 24, 24}, gen, 0.0, 1.0);
  AugmentConfig cfg;  // defaults: +-20 deg, zoom 0.8-1.2, hflip 0.5
  const TensorF a = augment(img, cfg, 9, 41);
  const TensorF b = augment(img, cfg, 9, 41);
  CHECK(oracle::max_abs_diff(a, b) == 0.0);
  const TensorF c = augment(img, cfg, 9, 42);
  CHECK(oracle::max_abs_diff(a, c) > 0.0);
  const TensorF d = augment(img, cfg, 10, 41);
  CHECK(oracle::max_abs_diff(a, d) > 0.0);
}

TEST_CASE("augmentation preserves shape and value range") {
  std::mt19937 gen(4);
  AugmentConfig cfg;
  for (int i = 0; i < 20; ++i) {
    const TensorF img = oracle::random_tensor<float>({3, 20, 20}, gen, 0.0, 1.0);
    const TensorF out = augment(img, cfg, 5, static_cast<std::uint64_t>(i));
    CHECK(out.shape() == img.shape());
    for (std::int64_t j = 0; j < out.size(); ++j) {
      CHECK(out[j] >= 0.0f);
      CHECK(out[j] <= 1.0f);
    }
  }
}

TEST_CASE("augment validates its configuration") {
  const TensorF img({3, 4, 4});
  AugmentConfig bad;
  bad.zoom_min = 0.0f;
  CHECK_THROWS_AS(augment(img, bad, 1, 1), ShapeError);
  bad = AugmentConfig{};
  bad.hflip_prob = 1.5f;
  CHECK_THROWS_AS(augment(img, bad, 1, 1), ShapeError);
}
