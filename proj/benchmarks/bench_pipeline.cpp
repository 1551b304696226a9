#include <benchmark/benchmark.h>

#include "pmw/augment.hpp"
#include "pmw/models.hpp"
#include "pmw/synth.hpp"
#include "pmw/train.hpp"

using namespace pmw;

namespace {

TensorF batch_of(int n, std::uint64_t seed) {
  const Rng base = Rng(seed).stream("bench");
  std::vector<TensorF> images;
  std::vector<const TensorF*> ptrs;
  for (int i = 0; i < n; ++i) {
    images.push_back(render_synthetic_image(
        i % 2 ? TypeTag::pmw : TypeTag::velella, 32, {}, base.stream("img", i)));
  }
  for (const auto& t : images) ptrs.push_back(&t);
  return stack_images(ptrs);
}

void BM_ResnetSForward(benchmark::State& state) {
  ModelGraph model = models::build_resnet_s({3, 32, 32}, {}, 1);
  const TensorF x = batch_of(32, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(x, Mode::Infer));
  }
}
BENCHMARK(BM_ResnetSForward);

void BM_ResnetSTrainStep(benchmark::State& state) {
  ModelGraph model = models::build_resnet_s({3, 32, 32}, {}, 1);
  const TensorF x = batch_of(32, 7);
  TensorF y({32});
  for (int i = 0; i < 32; ++i) y[i] = static_cast<float>(i % 2);
  Optimizer opt(OptimizerConfig{});
  Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_step(model, x, y, opt, rng));
  }
}
BENCHMARK(BM_ResnetSTrainStep);

void BM_Augment(benchmark::State& state) {
  const TensorF img = render_synthetic_image(TypeTag::pmw, 32, {}, Rng(5));
  std::uint64_t index = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(augment(img, AugmentConfig{}, 11, index++));
  }
}
BENCHMARK(BM_Augment);

void BM_SynthRender(benchmark::State& state) {
  std::uint64_t index = 0;
  const Rng base(9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        render_synthetic_image(TypeTag::pmw, 64, {}, base.stream("i", index++)));
  }
}
BENCHMARK(BM_SynthRender);

}  // namespace
