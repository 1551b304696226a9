#include <benchmark/benchmark.h>

#include "pmw/ops.hpp"
#include "pmw/rng.hpp"

using namespace pmw;

namespace {

TensorF random_tensor(std::vector<int> shape, std::uint64_t seed) {
  Rng rng(seed);
  TensorF t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  return t;
}

// resnet_s stage-1 shape: 3x3 conv over 8 channels at 32x32
void BM_Conv2dForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const TensorF x = random_tensor({batch, 8, 32, 32}, 1);
  const TensorF w = random_tensor({8, 8, 3, 3}, 2);
  const TensorF b = random_tensor({8}, 3);
  const ops::ConvSpec spec{3, 3, 1, 1, 1, 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::conv2d(x, w, b, spec));
  }
  const double macs = 2.0 * batch * 8.0 * 8.0 * 9.0 * 32.0 * 32.0;
  state.SetItemsProcessed(static_cast<std::int64_t>(macs) * state.iterations());
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(32);

void BM_Conv2dBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const TensorF x = random_tensor({batch, 8, 32, 32}, 1);
  const TensorF w = random_tensor({8, 8, 3, 3}, 2);
  const ops::ConvSpec spec{3, 3, 1, 1, 1, 1};
  const TensorF dy = random_tensor({batch, 8, 32, 32}, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::conv2d_backward(x, w, spec, dy, true, true));
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(1)->Arg(32);

void BM_Dense(benchmark::State& state) {
  const TensorF x = random_tensor({32, 512}, 1);
  const TensorF w = random_tensor({512, 256}, 2);
  const TensorF b = random_tensor({256}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::dense(x, w, b));
  }
}
BENCHMARK(BM_Dense);

void BM_BatchNormTrain(benchmark::State& state) {
  const TensorF x = random_tensor({32, 16, 16, 16}, 1);
  const TensorF gamma = TensorF::full({16}, 1.0f);
  const TensorF beta({16});
  TensorF rm({16});
  TensorF rv = TensorF::full({16}, 1.0f);
  ops::BatchNormCtx<float> ctx;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ops::batchnorm2d(x, gamma, beta, rm, rv, 0.9f, 1e-5f, Mode::Train, &ctx));
  }
}
BENCHMARK(BM_BatchNormTrain);

}  // namespace
