#include <doctest.h>

#include <memory>
#include <random>

#include "oracles.hpp"
#include "pmw/layers.hpp"
#include "pmw/models.hpp"
#include "pmw/serialize.hpp"

using namespace pmw;
using namespace pmw::models;

TEST_CASE("vgg16 counts: 13 convolutional and 3 fully-connected layers") {
  ModelGraph g = build_vgg16({3, 224, 224}, 1);
  CHECK(conv_count(g) == 13);
  CHECK(dense_count(g) == 3);
  CHECK(weighted_layer_count(g) == 16);
}

TEST_CASE("resnet50 counts 50 weighted layers") {
  ModelGraph g = build_resnet50({3, 224, 224}, 1);
  CHECK(weighted_layer_count(g) == 50);
  // all convs including the four projection shortcuts
  CHECK(conv_count(g) == 53);
  CHECK(dense_count(g) == 1);
  CHECK(g.infer_output_shape({1, 3, 224, 224}) == std::vector<int>{1, 1000});
}

TEST_CASE("inception_v3 builds at both supported input sizes") {
  ModelGraph g299 = build_inception_v3({3, 299, 299}, 1);
  CHECK(g299.infer_output_shape({1, 3, 299, 299}) == std::vector<int>{1, 1000});
  CHECK(conv_count(g299) == 94);
  ModelGraph g224 = build_inception_v3({3, 224, 224}, 1);
  CHECK(g224.infer_output_shape({1, 3, 224, 224}) == std::vector<int>{1, 1000});
}

TEST_CASE("desk-scale variants end in one sigmoid unit") {
  std::mt19937 gen(2);
  SUBCASE("vgg_s") {
    ModelGraph g = build_vgg_s({3, 32, 32}, {}, 7);
    const TensorF x = oracle::random_tensor<float>({2, 3, 32, 32}, gen, 0.0, 1.0);
    const TensorF out = g.forward(x, Mode::Infer);
    CHECK(out.shape() == std::vector<int>{2, 1});
    for (std::int64_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] > 0.0f);
      CHECK(out[i] < 1.0f);
    }
    CHECK(conv_count(g) == 4);
  }
  SUBCASE("resnet_s") {
    ModelGraph g = build_resnet_s({3, 32, 32}, {}, 7);
    const TensorF x = oracle::random_tensor<float>({3, 3, 32, 32}, gen, 0.0, 1.0);
    CHECK(g.forward(x, Mode::Infer).shape() == std::vector<int>{3, 1});
  }
  SUBCASE("inception_s") {
    ModelGraph g = build_inception_s({3, 32, 32}, {}, 7);
    const TensorF x = oracle::random_tensor<float>({2, 3, 32, 32}, gen, 0.0, 1.0);
    CHECK(g.forward(x, Mode::Infer).shape() == std::vector<int>{2, 1});
  }
}

TEST_CASE("full-scale graphs are forward-runnable") {
  std::mt19937 gen(3);
  SUBCASE("vgg16 on a reduced input") {
    ModelGraph g = build_vgg16({3, 64, 64}, 11);
    const TensorF x = oracle::random_tensor<float>({1, 3, 64, 64}, gen, 0.0, 1.0);
    const TensorF out = g.forward(x, Mode::Infer);
    CHECK(out.shape() == std::vector<int>{1, 1000});
    CHECK(out.all_finite());
  }
  SUBCASE("resnet50 on a reduced input") {
    ModelGraph g = build_resnet50({3, 64, 64}, 11);
    const TensorF x = oracle::random_tensor<float>({1, 3, 64, 64}, gen, 0.0, 1.0);
    const TensorF out = g.forward(x, Mode::Infer);
    CHECK(out.shape() == std::vector<int>{1, 1000});
    CHECK(out.all_finite());
  }
  SUBCASE("inception_v3 on a reduced input") {
    ModelGraph g = build_inception_v3({3, 139, 139}, 11);
    const TensorF x = oracle::random_tensor<float>({1, 3, 139, 139}, gen, 0.0, 1.0);
    const TensorF out = g.forward(x, Mode::Infer);
    CHECK(out.shape() == std::vector<int>{1, 1000});
    CHECK(out.all_finite());
  }
}

TEST_CASE("residual block with zeroed trunk is relu of its input") {
  ResnetSConfig cfg;
  ModelGraph g = build_resnet_s({3, 32, 32}, cfg, 3);
  // stage1/block1 has an identity shortcut; zero its convolutions and neutral
  // batchnorm so the trunk contributes nothing
  for (const char* name :
       {"backbone/stage1/block1/conv1/conv/weight", "backbone/stage1/block1/conv2/conv/weight"}) {
    Param* p = g.find_param(name);
    REQUIRE(p != nullptr);
    p->value.fill(0.0f);
  }

  std::mt19937 gen(4);
  const TensorF x = oracle::random_tensor<float>({2, 3, 32, 32}, gen, 0.0, 1.0);
  Tape tape;
  g.forward(x, Mode::Infer, nullptr, &tape);

  int block_in = -1, block_out = -1;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (g.node(i).name() == "backbone/stage1/block0/relu") block_in = static_cast<int>(i);
    if (g.node(i).name() == "backbone/stage1/block1/relu") block_out = static_cast<int>(i);
  }
  REQUIRE(block_in >= 0);
  REQUIRE(block_out >= 0);
  const TensorF& input_act = tape.outputs[static_cast<std::size_t>(block_in)];
  const TensorF& output_act = tape.outputs[static_cast<std::size_t>(block_out)];
  CHECK(oracle::max_abs_diff(ops::relu(input_act), output_act) < 1e-6);
}

TEST_CASE("shortcut shape mismatch without projection fails at build time") {
  ModelGraph g;
  g.add(std::make_unique<layers::Conv2d>("stem", ModelGraph::kInputName, 3, 8,
                                         ops::ConvSpec{3, 3, 1, 1, 1, 1}));
  g.add(std::make_unique<layers::Conv2d>("c1", "stem", 8, 8,
                                         ops::ConvSpec{3, 3, 2, 2, 1, 1}));
  g.add(std::make_unique<layers::Add>("bad", "c1", "stem"));
  CHECK_THROWS_WITH_AS(g.infer_output_shape({1, 3, 32, 32}),
                       doctest::Contains("projection"), ShapeError);
}

TEST_CASE("inception module output equals its independently executed branches") {
  InceptionSConfig cfg;
  ModelGraph g = build_inception_s({3, 32, 32}, cfg, 17);
  std::mt19937 gen(5);
  const TensorF x = oracle::random_tensor<float>({2, 3, 32, 32}, gen, 0.0, 1.0);

  Tape tape;
  g.forward(x, Mode::Infer, nullptr, &tape);

  auto output_of = [&](const std::string& name) -> const TensorF& {
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      if (g.node(i).name() == name) return tape.outputs[i];
    }
    throw std::runtime_error("node not found: " + name);
  };
  const TensorF& module_in = output_of("backbone/stem/relu");

  // rebuild each branch of mix1 as a standalone graph sharing the weights
  auto branch_graph = [&](const std::vector<std::string>& nodes) {
    ModelGraph bg;
    std::string prev = ModelGraph::kInputName;
    for (const auto& scope : nodes) {
      auto* conv = dynamic_cast<layers::Conv2d*>(g.find_node(scope + "/conv"));
      if (conv != nullptr) {
        bg.add(std::make_unique<layers::Conv2d>(
            scope + "/conv", prev, conv->in_channels(), conv->out_channels(),
            conv->spec(), false));
        bg.add(std::make_unique<layers::BatchNorm2d>(scope + "/bn", scope + "/conv",
                                                     conv->out_channels()));
        bg.add(std::make_unique<layers::Relu>(scope + "/relu", scope + "/bn"));
        prev = scope + "/relu";
      } else {
        bg.add(std::make_unique<layers::MaxPool2d>(scope, prev,
                                                   ops::PoolSpec{3, 3, 1, 1, 1, 1}));
        prev = scope;
      }
    }
    bg.finalize();
    for (auto* p : bg.parameters()) p->value = g.find_param(p->name)->value;
    for (auto* b : bg.buffer_tensors()) {
      for (auto* src : g.buffer_tensors()) {
        if (src->name == b->name) b->value = src->value;
      }
    }
    return bg;
  };

  std::vector<std::vector<std::string>> branches = {
      {"backbone/mix1/b1x1"},
      {"backbone/mix1/b3x3/reduce", "backbone/mix1/b3x3"},
      {"backbone/mix1/b5x5/reduce", "backbone/mix1/b5x5"},
      {"backbone/mix1/bpool/pool", "backbone/mix1/bpool"}};

  std::vector<TensorF> branch_outs;
  for (const auto& spec : branches) {
    ModelGraph bg = branch_graph(spec);
    branch_outs.push_back(bg.forward(module_in, Mode::Infer));
  }

  int total_c = 0;
  for (const auto& t : branch_outs) total_c += t.dim(1);
  const TensorF& concat = output_of("backbone/mix1/concat");
  CHECK(concat.dim(1) == total_c);

  const int N = concat.dim(0), H = concat.dim(2), W = concat.dim(3);
  const std::int64_t plane = static_cast<std::int64_t>(H) * W;
  double worst = 0;
  for (int n = 0; n < N; ++n) {
    std::int64_t c_off = 0;
    for (const auto& t : branch_outs) {
      for (int c = 0; c < t.dim(1); ++c) {
        for (std::int64_t i = 0; i < plane; ++i) {
          const double a = t[(static_cast<std::int64_t>(n) * t.dim(1) + c) * plane + i];
          const double b =
              concat[(static_cast<std::int64_t>(n) * total_c + c_off + c) * plane + i];
          worst = std::max(worst, std::fabs(a - b));
        }
      }
      c_off += t.dim(1);
    }
  }
  CHECK(worst == 0.0);
}

TEST_CASE("vgg_s parameter count matches the closed-form layer sums") {
  VggSConfig cfg;  // two 3x3 conv blocks (16, 32 channels) + the default head
  ModelGraph g = build_vgg_s({3, 32, 32}, cfg, 3);
  const int c1 = cfg.block1_channels, c2 = cfg.block2_channels;
  const int hidden = cfg.head.hidden_width;
  const std::int64_t expected =
      (c1 * 3 * 9 + c1) +        // block1/conv1
      (c1 * c1 * 9 + c1) +       // block1/conv2
      (c2 * c1 * 9 + c2) +       // block2/conv1
      (c2 * c2 * 9 + c2) +       // block2/conv2
      (c2 * hidden + hidden) +   // head fc over global-pooled channels
      (hidden * 1 + 1);          // sigmoid output unit
  CHECK(param_element_count(g) == expected);
}

TEST_CASE("attach_head contract") {
  SUBCASE("builds the documented stack and output shape") {
    VggSConfig cfg;
    cfg.with_head = false;
    ModelGraph g = build_vgg_s({3, 32, 32}, cfg, 3);
    attach_head(g, HeadConfig{}, 4);
    std::mt19937 gen(6);
    const TensorF x = oracle::random_tensor<float>({3, 3, 32, 32}, gen, 0.0, 1.0);
    const TensorF out = g.forward(x, Mode::Infer);
    CHECK(out.shape() == std::vector<int>{3, 1});
    for (std::int64_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] > 0.0f);
      CHECK(out[i] < 1.0f);
    }
  }
  SUBCASE("head parameter count with global pooling over C channels") {
    VggSConfig cfg;
    cfg.with_head = false;
    ModelGraph g = build_vgg_s({3, 32, 32}, cfg, 3);
    const std::int64_t before = param_element_count(g);
    attach_head(g, HeadConfig{}, 4);
    const int C = cfg.block2_channels;
    const int hidden = HeadConfig{}.hidden_width;
    CHECK(param_element_count(g) - before == C * hidden + hidden + hidden + 1);
  }
  SUBCASE("attaching twice fails") {
    ModelGraph g = build_vgg_s({3, 32, 32}, {}, 3);  // head included
    CHECK_THROWS_WITH_AS(attach_head(g, HeadConfig{}, 4),
                         doctest::Contains("already"), ShapeError);
  }
  SUBCASE("replaces a canonical classifier") {
    ModelGraph g = build_resnet50({3, 64, 64}, 5);
    attach_head(g, HeadConfig{}, 6);
    CHECK_FALSE(g.any_node_has_prefix("classifier/"));
    CHECK(g.infer_output_shape({2, 3, 64, 64}) == std::vector<int>{2, 1});
  }
  SUBCASE("windowed pooling option") {
    VggSConfig cfg;
    cfg.with_head = false;
    ModelGraph g = build_vgg_s({3, 32, 32}, cfg, 3);
    HeadConfig head;
    head.pool = HeadConfig::Pool::Window;
    head.window = ops::PoolSpec{2, 2, 2, 2, 0, 0};
    attach_head(g, head, 4);
    CHECK(g.infer_output_shape({1, 3, 32, 32}) == std::vector<int>{1, 1});
  }
}

TEST_CASE("freeze marks matching parameters and reports the fraction") {
  ModelGraph g = build_vgg_s({3, 32, 32}, {}, 3);
  const int matched = freeze(g, "backbone/");
  CHECK(matched > 0);
  int frozen = 0, total = 0;
  for (const auto* p : g.parameters()) {
    ++total;
    if (p->frozen) ++frozen;
  }
  CHECK(matched == frozen);
  CHECK(g.frozen_fraction() == doctest::Approx(static_cast<double>(frozen) / total));

  CHECK(freeze(g, "no-such-prefix/") == 0);  // warns, model unchanged
  CHECK(g.frozen_fraction() == doctest::Approx(static_cast<double>(frozen) / total));
}

TEST_CASE("initializers are seeded and bounded") {
  TensorF w({64, 16});
  kaiming_uniform(w, 16, Rng(1));
  const float bound = std::sqrt(6.0f / 16.0f);
  for (std::int64_t i = 0; i < w.size(); ++i) {
    CHECK(std::fabs(w[i]) <= bound);
  }
  TensorF w2({64, 16});
  kaiming_uniform(w2, 16, Rng(1));
  CHECK(oracle::max_abs_diff(w, w2) == 0.0);

  ModelGraph a = build_resnet_s({3, 32, 32}, {}, 9);
  ModelGraph b = build_resnet_s({3, 32, 32}, {}, 9);
  CHECK(a.content_checksum() == b.content_checksum());
  ModelGraph c = build_resnet_s({3, 32, 32}, {}, 10);
  CHECK(a.content_checksum() != c.content_checksum());
}
