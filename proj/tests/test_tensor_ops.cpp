#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pmw/ops.hpp"

using namespace pmw;
using ops::ConvSpec;
using ops::PoolSpec;

TEST_CASE("conv2d 1x1 identity kernel") {
  std::mt19937 gen(1);
  const TensorF x = oracle::random_tensor<float>({2, 1, 4, 4}, gen);
  const TensorF w({1, 1, 1, 1}, {1.0f});
  const TensorF b({1}, {0.0f});
  const TensorF y = ops::conv2d(x, w, b, ConvSpec{1, 1, 1, 1, 0, 0});
  CHECK(oracle::max_abs_diff(x, y) == 0.0);
}

TEST_CASE("conv2d all-ones field sums to window size") {
  const TensorF x = TensorF::full({1, 1, 4, 4}, 1.0f);
  const TensorF w = TensorF::full({1, 1, 3, 3}, 1.0f);
  const TensorF b({1}, {0.0f});
  const TensorF y = ops::conv2d(x, w, b, ConvSpec{3, 3, 1, 1, 0, 0});
  CHECK(y.shape() == std::vector<int>{1, 1, 2, 2});
  for (std::int64_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(9.0f));
}

TEST_CASE("conv2d matches the direct-summation reference") {
  std::mt19937 gen(2);
  SUBCASE("plain 3x3") {
    const TensorD x = oracle::random_tensor<double>({1, 2, 5, 5}, gen);
    const TensorD w = oracle::random_tensor<double>({3, 2, 3, 3}, gen);
    const TensorD b = oracle::random_tensor<double>({3}, gen);
    const ConvSpec spec{3, 3, 1, 1, 0, 0};
    CHECK(oracle::max_abs_diff(ops::conv2d(x, w, b, spec),
                               oracle::conv2d(x, w, b, spec)) < 1e-9);
  }
  SUBCASE("strides, padding, rectangular kernels") {
    for (int trial = 0; trial < 25; ++trial) {
      std::uniform_int_distribution<int> pick(1, 3);
      const int C = pick(gen), F = pick(gen);
      const int kh = pick(gen), kw = pick(gen);
      const int sh = pick(gen), sw = pick(gen);
      const int ph = pick(gen) - 1, pw = pick(gen) - 1;
      const int H = kh + pick(gen) * 2 + 3, W = kw + pick(gen) * 2 + 3;
      if (ph >= kh || pw >= kw) continue;
      const ConvSpec spec{kh, kw, sh, sw, ph, pw};
      const TensorD x = oracle::random_tensor<double>({2, C, H, W}, gen);
      const TensorD w = oracle::random_tensor<double>({F, C, kh, kw}, gen);
      const TensorD b = oracle::random_tensor<double>({F}, gen);
      CHECK(oracle::max_abs_diff(ops::conv2d(x, w, b, spec),
                                 oracle::conv2d(x, w, b, spec)) < 1e-9);
    }
  }
  SUBCASE("f32 within 1e-4") {
    const TensorF x = oracle::random_tensor<float>({2, 3, 8, 8}, gen);
    const TensorF w = oracle::random_tensor<float>({4, 3, 3, 3}, gen);
    const TensorF b = oracle::random_tensor<float>({4}, gen);
    const ConvSpec spec{3, 3, 1, 1, 1, 1};
    CHECK(oracle::max_abs_diff(ops::conv2d(x, w, b, spec),
                               oracle::conv2d(x, w, b, spec)) < 1e-4);
  }
}

TEST_CASE("conv2d names the offending dimension on mismatch") {
  const TensorF x({1, 2, 4, 4});
  const TensorF w({1, 3, 3, 3});
  const TensorF b({1});
  CHECK_THROWS_WITH_AS(ops::conv2d(x, w, b, ConvSpec{3, 3, 1, 1, 0, 0}),
                       doctest::Contains("channels"), ShapeError);
}

TEST_CASE("shape algebra follows the floor formula over random legal specs") {
  std::mt19937 gen(3);
  std::uniform_int_distribution<int> pick(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = pick(gen), s = pick(gen), p = pick(gen) - 1;
    const int in = k + pick(gen) * 3;
    if (p >= k) continue;
    const int expected = (in + 2 * p - k) / s + 1;
    CHECK(ops::conv_out_dim(in, k, s, p) == expected);

    const TensorF x({1, 1, in, in});
    const TensorF w({1, 1, k, k});
    const TensorF y = ops::conv2d(x, w, TensorF({1}), ConvSpec{k, k, s, s, p, p});
    CHECK(y.dim(2) == expected);
    CHECK(y.dim(3) == expected);
  }
}

TEST_CASE("maxpool basics") {
  const TensorF x({1, 1, 2, 2}, {1, 2, 3, 4});
  const TensorF y = ops::maxpool2d(x, PoolSpec{2, 2, 2, 2, 0, 0});
  CHECK(y.size() == 1);
  CHECK(y[0] == 4.0f);

  CHECK_THROWS_AS(ops::maxpool2d(x, PoolSpec{5, 5, 1, 1, 0, 0}), ShapeError);
  CHECK_THROWS_AS(ops::maxpool2d(x, PoolSpec{2, 2, 1, 1, 2, 2}), ShapeError);
}

TEST_CASE("pools match the reference on random inputs") {
  std::mt19937 gen(4);
  const TensorD x = oracle::random_tensor<double>({1, 1, 4, 4}, gen);
  const PoolSpec avg_spec{2, 2, 2, 2, 0, 0};
  CHECK(oracle::max_abs_diff(ops::avgpool2d(x, avg_spec),
                             oracle::avgpool2d(x, avg_spec)) < 1e-12);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> pick(1, 3);
    const int k = 1 + pick(gen), s = pick(gen), p = pick(gen) - 1;
    if (p >= k) continue;
    const PoolSpec spec{k, k, s, s, p, p};
    const TensorD t = oracle::random_tensor<double>({2, 2, 7, 9}, gen);
    CHECK(oracle::max_abs_diff(ops::maxpool2d(t, spec), oracle::maxpool2d(t, spec)) == 0.0);
    CHECK(oracle::max_abs_diff(ops::avgpool2d(t, spec), oracle::avgpool2d(t, spec)) < 1e-9);
  }
}

TEST_CASE("global average pool of a constant plane is that constant") {
  TensorF x = TensorF::full({2, 3, 5, 5}, 0.0f);
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 25; ++i)
        x[(static_cast<std::int64_t>(n) * 3 + c) * 25 + i] = static_cast<float>(c) + 0.5f;
  const TensorF y = ops::global_avg_pool(x);
  CHECK(y.shape() == std::vector<int>{2, 3});
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      CHECK(y.at(n, c) == doctest::Approx(c + 0.5f));
}

TEST_CASE("dense identity and hand arithmetic") {
  const TensorF x({2, 2}, {1, 2, 3, 4});
  TensorF eye({2, 2}, {1, 0, 0, 1});
  CHECK(oracle::max_abs_diff(ops::dense(x, eye, TensorF({2})), x) == 0.0);

  const TensorF v({1, 2}, {1, 2});
  const TensorF w({2, 1}, {1, 1});
  const TensorF b({1}, {0.5f});
  const TensorF y = ops::dense(v, w, b);
  CHECK(y.size() == 1);
  CHECK(y[0] == doctest::Approx(3.5f));
}

TEST_CASE("dense matches the triple-loop reference") {
  std::mt19937 gen(5);
  const TensorD x = oracle::random_tensor<double>({4, 7}, gen);
  const TensorD w = oracle::random_tensor<double>({7, 5}, gen);
  const TensorD b = oracle::random_tensor<double>({5}, gen);
  CHECK(oracle::max_abs_diff(ops::dense(x, w, b), oracle::dense(x, w, b)) < 1e-9);

  CHECK_THROWS_WITH_AS(ops::dense(x, oracle::random_tensor<double>({6, 5}, gen), b),
                       doctest::Contains("width"), ShapeError);
}

TEST_CASE("relu and sigmoid pointwise values") {
  const TensorF x({3}, {-1, 0, 2});
  const TensorF r = ops::relu(x);
  CHECK(r[0] == 0.0f);
  CHECK(r[1] == 0.0f);
  CHECK(r[2] == 2.0f);

  const TensorD zero({1}, {0.0});
  CHECK(ops::sigmoid(zero)[0] == doctest::Approx(0.5));
}

TEST_CASE("sigmoid saturates without overflow and stays inside (0,1)") {
  const TensorD x({2}, {36.0, -36.0});
  const TensorD y = ops::sigmoid(x);
  CHECK(std::fabs(y[0] - 1.0) < 1e-15);
  CHECK(std::fabs(y[1] - 0.0) < 1e-15);
  CHECK(y[0] < 1.0);
  CHECK(y[1] > 0.0);

  const TensorF xf({2}, {1000.0f, -1000.0f});
  const TensorF yf = ops::sigmoid(xf);
  CHECK(yf[0] < 1.0f);
  CHECK(yf[1] > 0.0f);
  CHECK(yf.all_finite());
}

TEST_CASE("batchnorm identity in infer mode with unit running stats") {
  std::mt19937 gen(6);
  const TensorF x = oracle::random_tensor<float>({2, 3, 4, 4}, gen);
  const TensorF gamma = TensorF::full({3}, 1.0f);
  const TensorF beta({3});
  TensorF rm({3});
  TensorF rv = TensorF::full({3}, 1.0f);
  const TensorF y =
      ops::batchnorm2d(x, gamma, beta, rm, rv, 0.9f, 1e-5f, Mode::Infer);
  CHECK(oracle::max_abs_diff(x, y) < 1e-4);
}

TEST_CASE("batchnorm train mode normalizes to beta/gamma moments") {
  std::mt19937 gen(7);
  // large input variance so the eps bias stays inside the tolerance
  const TensorD x = oracle::random_tensor<double>({64, 2, 3, 3}, gen, -20.0, 20.0);
  const TensorD gamma({2}, {2.0, 0.5});
  const TensorD beta({2}, {1.0, -1.0});
  TensorD rm({2});
  TensorD rv = TensorD::full({2}, 1.0);
  const TensorD y =
      ops::batchnorm2d(x, gamma, beta, rm, rv, 0.9, 1e-5, Mode::Train);

  const std::int64_t per_channel = 64 * 9;
  for (int c = 0; c < 2; ++c) {
    double sum = 0, sq = 0;
    for (int n = 0; n < 64; ++n)
      for (int i = 0; i < 9; ++i) {
        const double v = y[(static_cast<std::int64_t>(n) * 2 + c) * 9 + i];
        sum += v;
        sq += v * v;
      }
    const double mean = sum / per_channel;
    const double var = sq / per_channel - mean * mean;
    CHECK(std::fabs(mean - beta[c]) < 1e-5);
    CHECK(std::fabs(std::sqrt(var) - gamma[c]) < 1e-5);
  }
}

TEST_CASE("batchnorm batch of one with zero variance stays finite") {
  const TensorF x = TensorF::full({1, 2, 2, 2}, 3.0f);
  const TensorF gamma = TensorF::full({2}, 1.0f);
  const TensorF beta({2});
  TensorF rm({2});
  TensorF rv = TensorF::full({2}, 1.0f);
  const TensorF y = ops::batchnorm2d(x, gamma, beta, rm, rv, 0.9f, 1e-5f, Mode::Train);
  CHECK(y.all_finite());
}

TEST_CASE("dropout modes") {
  std::mt19937 gen(8);
  const TensorF x = oracle::random_tensor<float>({4, 25}, gen);
  Rng rng(1);
  SUBCASE("infer mode is the identity") {
    CHECK(oracle::max_abs_diff(ops::dropout(x, 0.3f, rng, Mode::Infer), x) == 0.0);
  }
  SUBCASE("rate zero is the identity in both modes") {
    CHECK(oracle::max_abs_diff(ops::dropout(x, 0.0f, rng, Mode::Train), x) == 0.0);
    CHECK(oracle::max_abs_diff(ops::dropout(x, 0.0f, rng, Mode::Infer), x) == 0.0);
  }
  SUBCASE("law of large numbers at rate 0.3") {
    const TensorF ones = TensorF::full({100000}, 1.0f);
    const TensorF y = ops::dropout(ones, 0.3f, rng, Mode::Train);
    double sum = 0;
    std::int64_t zeros = 0;
    for (std::int64_t i = 0; i < y.size(); ++i) {
      sum += y[i];
      if (y[i] == 0.0f) ++zeros;
    }
    CHECK(std::fabs(sum / 100000.0 - 1.0) < 0.01);
    CHECK(std::fabs(static_cast<double>(zeros) / 100000.0 - 0.30) < 0.01 * 0.30 + 0.01);
  }
  SUBCASE("identical seeds give bit-identical masks") {
    Rng r1(42), r2(42);
    const TensorF a = ops::dropout(x, 0.3f, r1, Mode::Train);
    const TensorF b = ops::dropout(x, 0.3f, r2, Mode::Train);
    CHECK(oracle::max_abs_diff(a, b) == 0.0);
  }
}

TEST_CASE("bce loss values and reference equivalence") {
  const TensorD nearly({1}, {1.0 - 1e-9});
  const TensorD one({1}, {1.0});
  CHECK(ops::bce_loss(nearly, one) == doctest::Approx(0.0).epsilon(1e-6));

  const TensorD half({1}, {0.5});
  CHECK(ops::bce_loss(half, one) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::mt19937 gen(9);
  const TensorD p = oracle::random_tensor<double>({32, 1}, gen, 0.01, 0.99);
  TensorD y({32});
  for (int i = 0; i < 32; ++i) y[i] = (gen() % 2) ? 1.0 : 0.0;
  CHECK(std::fabs(ops::bce_loss(p, y) - oracle::bce(p, y)) < 1e-9);
  CHECK(ops::bce_loss(p, y) >= 0.0);
}
