#include "pmw/models.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include "pmw/layers.hpp"

namespace pmw::models {

namespace {

using layers::Add;
using layers::AvgPool2d;
using layers::BatchNorm2d;
using layers::Concat;
using layers::Conv2d;
using layers::Dense;
using layers::Dropout;
using layers::Flatten;
using layers::GlobalAvgPool;
using layers::MaxPool2d;
using layers::Relu;
using layers::Sigmoid;

// Builder cursor: wires nodes sequentially, tracks the running activation
// shape and seeds every weight from an rng stream keyed by parameter name
// (so init is independent of construction order).
struct Wire {
  ModelGraph& g;
  Rng rng;
  std::string last;
  int c, h, w;

  Wire(ModelGraph& graph, std::uint64_t seed, InputShape in)
      : g(graph), rng(seed), last(ModelGraph::kInputName), c(in.c), h(in.h), w(in.w) {}

  std::string conv(const std::string& name, int out_c, int kh, int kw, int sh,
                   int sw, int ph, int pw, bool bias) {
    ops::ConvSpec spec{kh, kw, sh, sw, ph, pw};
    auto node = std::make_unique<Conv2d>(name, last, c, out_c, spec, bias);
    kaiming_uniform(node->params()[0].value, c * kh * kw,
                    rng.stream(node->params()[0].name));
    h = ops::conv_out_dim(h, kh, sh, ph);
    w = ops::conv_out_dim(w, kw, sw, pw);
    c = out_c;
    g.add(std::move(node));
    last = name;
    return name;
  }

  std::string bn(const std::string& name) {
    g.add(std::make_unique<BatchNorm2d>(name, last, c));
    last = name;
    return name;
  }

  std::string relu(const std::string& name) {
    g.add(std::make_unique<Relu>(name, last));
    last = name;
    return name;
  }

  // conv (no bias) -> batchnorm -> relu, the standard block of the
  // normalized families.
  std::string cbr(const std::string& scope, int out_c, int kh, int kw, int sh,
                  int sw, int ph, int pw) {
    conv(scope + "/conv", out_c, kh, kw, sh, sw, ph, pw, /*bias=*/false);
    bn(scope + "/bn");
    return relu(scope + "/relu");
  }

  std::string maxpool(const std::string& name, int k, int s, int p = 0) {
    g.add(std::make_unique<MaxPool2d>(name, last, ops::PoolSpec{k, k, s, s, p, p}));
    h = ops::conv_out_dim(h, k, s, p);
    w = ops::conv_out_dim(w, k, s, p);
    last = name;
    return name;
  }

  std::string avgpool(const std::string& name, int k, int s, int p = 0) {
    g.add(std::make_unique<AvgPool2d>(name, last, ops::PoolSpec{k, k, s, s, p, p}));
    h = ops::conv_out_dim(h, k, s, p);
    w = ops::conv_out_dim(w, k, s, p);
    last = name;
    return name;
  }

  std::string dense(const std::string& name, int in_dim, int out_dim,
                    bool output_unit) {
    auto node = std::make_unique<Dense>(name, last, in_dim, out_dim);
    if (output_unit) {
      xavier_uniform(node->params()[0].value, in_dim, out_dim,
                     rng.stream(node->params()[0].name));
    } else {
      kaiming_uniform(node->params()[0].value, in_dim,
                      rng.stream(node->params()[0].name));
    }
    g.add(std::move(node));
    last = name;
    return name;
  }

  void at(const std::string& node, int cc, int hh, int ww) {
    last = node;
    c = cc;
    h = hh;
    w = ww;
  }
};

void append_head(Wire& wire, const HeadConfig& cfg) {
  if (cfg.hidden_width < 1) {
    throw ShapeError("head: hidden_width must be >= 1");
  }
  if (!(cfg.dropout_rate >= 0.0f && cfg.dropout_rate < 1.0f)) {
    throw ShapeError("head: dropout rate must be in [0,1)");
  }
  int flat_dim = 0;
  if (cfg.pool == HeadConfig::Pool::Global) {
    wire.g.add(std::make_unique<GlobalAvgPool>("head/pool", wire.last));
    wire.last = "head/pool";
    flat_dim = wire.c;
  } else {
    const auto& ps = cfg.window;
    wire.g.add(std::make_unique<AvgPool2d>("head/pool", wire.last, ps));
    wire.h = ops::conv_out_dim(wire.h, ps.kh, ps.sh, ps.ph);
    wire.w = ops::conv_out_dim(wire.w, ps.kw, ps.sw, ps.pw);
    wire.last = "head/pool";
    flat_dim = wire.c * wire.h * wire.w;
  }
  wire.g.add(std::make_unique<Flatten>("head/flatten", wire.last));
  wire.last = "head/flatten";
  wire.dense("head/fc", flat_dim, cfg.hidden_width, /*output_unit=*/false);
  wire.relu("head/fc_relu");
  wire.g.add(std::make_unique<Dropout>("head/dropout", wire.last, cfg.dropout_rate));
  wire.last = "head/dropout";
  wire.dense("head/out", cfg.hidden_width, 1, /*output_unit=*/true);
  wire.g.add(std::make_unique<Sigmoid>("head/sigmoid", wire.last));
  wire.last = "head/sigmoid";
}

// Basic (two 3x3) residual block; strided/widening blocks get a projection
// shortcut (1x1 conv + bn) named proj_* so layer counting can skip them.
void basic_block(Wire& wire, const std::string& scope, int out_c, int stride) {
  const std::string src = wire.last;
  const int in_c = wire.c, in_h = wire.h, in_w = wire.w;

  wire.cbr(scope + "/conv1", out_c, 3, 3, stride, stride, 1, 1);
  wire.conv(scope + "/conv2/conv", out_c, 3, 3, 1, 1, 1, 1, false);
  wire.bn(scope + "/conv2/bn");
  const std::string trunk = wire.last;
  const int out_h = wire.h, out_w = wire.w;

  std::string shortcut = src;
  if (stride != 1 || in_c != out_c) {
    wire.at(src, in_c, in_h, in_w);
    wire.conv(scope + "/proj_conv", out_c, 1, 1, stride, stride, 0, 0, false);
    wire.bn(scope + "/proj_bn");
    shortcut = wire.last;
  }
  wire.g.add(std::make_unique<Add>(scope + "/add", trunk, shortcut));
  wire.at(scope + "/add", out_c, out_h, out_w);
  wire.relu(scope + "/relu");
}

// Bottleneck (1x1 -> 3x3 -> 1x1) residual block; stride sits on the 3x3.
void bottleneck_block(Wire& wire, const std::string& scope, int mid_c,
                      int out_c, int stride) {
  const std::string src = wire.last;
  const int in_c = wire.c, in_h = wire.h, in_w = wire.w;

  wire.cbr(scope + "/conv1", mid_c, 1, 1, 1, 1, 0, 0);
  wire.cbr(scope + "/conv2", mid_c, 3, 3, stride, stride, 1, 1);
  wire.conv(scope + "/conv3/conv", out_c, 1, 1, 1, 1, 0, 0, false);
  wire.bn(scope + "/conv3/bn");
  const std::string trunk = wire.last;
  const int out_h = wire.h, out_w = wire.w;

  std::string shortcut = src;
  if (stride != 1 || in_c != out_c) {
    wire.at(src, in_c, in_h, in_w);
    wire.conv(scope + "/proj_conv", out_c, 1, 1, stride, stride, 0, 0, false);
    wire.bn(scope + "/proj_bn");
    shortcut = wire.last;
  }
  wire.g.add(std::make_unique<Add>(scope + "/add", trunk, shortcut));
  wire.at(scope + "/add", out_c, out_h, out_w);
  wire.relu(scope + "/relu");
}

struct BranchEnd {
  std::string node;
  int channels;
};

std::string concat_branches(Wire& wire, const std::string& name,
                            const std::vector<BranchEnd>& branches, int h,
                            int w) {
  std::vector<std::string> names;
  int channels = 0;
  for (const auto& b : branches) {
    names.push_back(b.node);
    channels += b.channels;
  }
  wire.g.add(std::make_unique<Concat>(name, names));
  wire.at(name, channels, h, w);
  return name;
}

}  // namespace

void kaiming_uniform(TensorF& w, int fan_in, Rng rng) {
  // gain sqrt(2) for relu fan-in scaling: bound = sqrt(6 / fan_in)
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  for (std::int64_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<float>(rng.uniform(-bound, bound));
  }
}

void xavier_uniform(TensorF& w, int fan_in, int fan_out, Rng rng) {
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  for (std::int64_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<float>(rng.uniform(-bound, bound));
  }
}

ModelGraph build_vgg_s(InputShape in, const VggSConfig& cfg, std::uint64_t seed) {
  ModelGraph g;
  g.set_input_chw({in.c, in.h, in.w});
  Wire wire(g, seed, in);

  wire.conv("backbone/block1/conv1", cfg.block1_channels, 3, 3, 1, 1, 1, 1, true);
  wire.relu("backbone/block1/relu1");
  wire.conv("backbone/block1/conv2", cfg.block1_channels, 3, 3, 1, 1, 1, 1, true);
  wire.relu("backbone/block1/relu2");
  wire.maxpool("backbone/block1/pool", 2, 2);

  wire.conv("backbone/block2/conv1", cfg.block2_channels, 3, 3, 1, 1, 1, 1, true);
  wire.relu("backbone/block2/relu1");
  wire.conv("backbone/block2/conv2", cfg.block2_channels, 3, 3, 1, 1, 1, 1, true);
  wire.relu("backbone/block2/relu2");
  wire.maxpool("backbone/block2/pool", 2, 2);

  if (cfg.with_head) append_head(wire, cfg.head);
  g.finalize();
  return g;
}

ModelGraph build_resnet_s(InputShape in, const ResnetSConfig& cfg,
                          std::uint64_t seed) {
  ModelGraph g;
  g.set_input_chw({in.c, in.h, in.w});
  Wire wire(g, seed, in);

  wire.cbr("backbone/stem", cfg.stem_channels, 3, 3, 1, 1, 1, 1);
  for (int b = 0; b < cfg.blocks_per_stage; ++b) {
    basic_block(wire, "backbone/stage1/block" + std::to_string(b),
                cfg.stage1_channels, 1);
  }
  for (int b = 0; b < cfg.blocks_per_stage; ++b) {
    basic_block(wire, "backbone/stage2/block" + std::to_string(b),
                cfg.stage2_channels, b == 0 ? 2 : 1);
  }

  if (cfg.with_head) append_head(wire, cfg.head);
  g.finalize();
  return g;
}

namespace {

// Four-branch module: 1x1 / reduced 3x3 / reduced 5x5 / pooled 1x1, all
// concatenated on the channel axis.
std::string inception_s_module(Wire& wire, const std::string& scope, int b1,
                               int b3_reduce, int b3, int b5_reduce, int b5,
                               int bp) {
  const std::string src = wire.last;
  const int in_c = wire.c, h = wire.h, w = wire.w;
  std::vector<BranchEnd> ends;

  wire.at(src, in_c, h, w);
  ends.push_back({wire.cbr(scope + "/b1x1", b1, 1, 1, 1, 1, 0, 0), b1});

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b3x3/reduce", b3_reduce, 1, 1, 1, 1, 0, 0);
  ends.push_back({wire.cbr(scope + "/b3x3", b3, 3, 3, 1, 1, 1, 1), b3});

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b5x5/reduce", b5_reduce, 1, 1, 1, 1, 0, 0);
  ends.push_back({wire.cbr(scope + "/b5x5", b5, 5, 5, 1, 1, 2, 2), b5});

  wire.at(src, in_c, h, w);
  wire.maxpool(scope + "/bpool/pool", 3, 1, 1);
  ends.push_back({wire.cbr(scope + "/bpool", bp, 1, 1, 1, 1, 0, 0), bp});

  return concat_branches(wire, scope + "/concat", ends, h, w);
}

}  // namespace

ModelGraph build_inception_s(InputShape in, const InceptionSConfig& cfg,
                             std::uint64_t seed) {
  ModelGraph g;
  g.set_input_chw({in.c, in.h, in.w});
  Wire wire(g, seed, in);

  wire.cbr("backbone/stem", cfg.stem_channels, 3, 3, 1, 1, 1, 1);
  inception_s_module(wire, "backbone/mix1", 8, 8, 16, 4, 8, 8);
  wire.maxpool("backbone/pool1", 2, 2);
  inception_s_module(wire, "backbone/mix2", 16, 16, 32, 8, 16, 16);

  if (cfg.with_head) append_head(wire, cfg.head);
  g.finalize();
  return g;
}

ModelGraph build_vgg16(InputShape in, std::uint64_t seed) {
  ModelGraph g;
  g.set_input_chw({in.c, in.h, in.w});
  Wire wire(g, seed, in);

  const int widths[5] = {64, 128, 256, 512, 512};
  const int depth[5] = {2, 2, 3, 3, 3};  // 13 convs over 5 blocks
  for (int blk = 0; blk < 5; ++blk) {
    const std::string scope = "backbone/block" + std::to_string(blk + 1);
    for (int i = 0; i < depth[blk]; ++i) {
      wire.conv(scope + "/conv" + std::to_string(i + 1), widths[blk], 3, 3, 1,
                1, 1, 1, true);
      wire.relu(scope + "/relu" + std::to_string(i + 1));
    }
    wire.maxpool(scope + "/pool", 2, 2);
  }

  const int flat = wire.c * wire.h * wire.w;
  g.add(std::make_unique<Flatten>("classifier/flatten", wire.last));
  wire.at("classifier/flatten", flat, 1, 1);
  wire.dense("classifier/fc1", flat, 4096, false);
  wire.relu("classifier/relu1");
  g.add(std::make_unique<Dropout>("classifier/dropout1", wire.last, 0.5f));
  wire.last = "classifier/dropout1";
  wire.dense("classifier/fc2", 4096, 4096, false);
  wire.relu("classifier/relu2");
  g.add(std::make_unique<Dropout>("classifier/dropout2", wire.last, 0.5f));
  wire.last = "classifier/dropout2";
  wire.dense("classifier/fc3", 4096, 1000, true);
  g.finalize();
  return g;
}

ModelGraph build_resnet50(InputShape in, std::uint64_t seed) {
  ModelGraph g;
  g.set_input_chw({in.c, in.h, in.w});
  Wire wire(g, seed, in);

  wire.cbr("backbone/stem", 64, 7, 7, 2, 2, 3, 3);
  wire.maxpool("backbone/stem/pool", 3, 2, 1);

  // canonical 3-4-6-3 bottleneck layout
  const int blocks[4] = {3, 4, 6, 3};
  const int mids[4] = {64, 128, 256, 512};
  for (int stage = 0; stage < 4; ++stage) {
    for (int b = 0; b < blocks[stage]; ++b) {
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      bottleneck_block(
          wire,
          "backbone/stage" + std::to_string(stage + 1) + "/block" + std::to_string(b),
          mids[stage], mids[stage] * 4, stride);
    }
  }

  g.add(std::make_unique<GlobalAvgPool>("classifier/pool", wire.last));
  wire.at("classifier/pool", wire.c, 1, 1);
  g.add(std::make_unique<Flatten>("classifier/flatten", wire.last));
  wire.last = "classifier/flatten";
  wire.dense("classifier/fc", 2048, 1000, true);
  g.finalize();
  return g;
}

namespace {

std::string inception_a(Wire& wire, const std::string& scope, int pool_c) {
  const std::string src = wire.last;
  const int in_c = wire.c, h = wire.h, w = wire.w;
  std::vector<BranchEnd> ends;

  ends.push_back({wire.cbr(scope + "/b1x1", 64, 1, 1, 1, 1, 0, 0), 64});

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b5x5/reduce", 48, 1, 1, 1, 1, 0, 0);
  ends.push_back({wire.cbr(scope + "/b5x5", 64, 5, 5, 1, 1, 2, 2), 64});

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b3x3dbl/reduce", 64, 1, 1, 1, 1, 0, 0);
  wire.cbr(scope + "/b3x3dbl/conv1", 96, 3, 3, 1, 1, 1, 1);
  ends.push_back({wire.cbr(scope + "/b3x3dbl/conv2", 96, 3, 3, 1, 1, 1, 1), 96});

  wire.at(src, in_c, h, w);
  wire.avgpool(scope + "/bpool/pool", 3, 1, 1);
  ends.push_back({wire.cbr(scope + "/bpool", pool_c, 1, 1, 1, 1, 0, 0), pool_c});

  return concat_branches(wire, scope + "/concat", ends, h, w);
}

std::string reduction_a(Wire& wire, const std::string& scope) {
  const std::string src = wire.last;
  const int in_c = wire.c, h = wire.h, w = wire.w;
  std::vector<BranchEnd> ends;

  ends.push_back({wire.cbr(scope + "/b3x3", 384, 3, 3, 2, 2, 0, 0), 384});
  const int oh = wire.h, ow = wire.w;

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b3x3dbl/reduce", 64, 1, 1, 1, 1, 0, 0);
  wire.cbr(scope + "/b3x3dbl/conv1", 96, 3, 3, 1, 1, 1, 1);
  ends.push_back({wire.cbr(scope + "/b3x3dbl/conv2", 96, 3, 3, 2, 2, 0, 0), 96});

  wire.at(src, in_c, h, w);
  wire.maxpool(scope + "/bpool", 3, 2);
  ends.push_back({wire.last, in_c});

  return concat_branches(wire, scope + "/concat", ends, oh, ow);
}

std::string inception_b(Wire& wire, const std::string& scope, int c7) {
  const std::string src = wire.last;
  const int in_c = wire.c, h = wire.h, w = wire.w;
  std::vector<BranchEnd> ends;

  ends.push_back({wire.cbr(scope + "/b1x1", 192, 1, 1, 1, 1, 0, 0), 192});

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b7x7/reduce", c7, 1, 1, 1, 1, 0, 0);
  wire.cbr(scope + "/b7x7/conv1", c7, 1, 7, 1, 1, 0, 3);
  ends.push_back({wire.cbr(scope + "/b7x7/conv2", 192, 7, 1, 1, 1, 3, 0), 192});

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b7x7dbl/reduce", c7, 1, 1, 1, 1, 0, 0);
  wire.cbr(scope + "/b7x7dbl/conv1", c7, 7, 1, 1, 1, 3, 0);
  wire.cbr(scope + "/b7x7dbl/conv2", c7, 1, 7, 1, 1, 0, 3);
  wire.cbr(scope + "/b7x7dbl/conv3", c7, 7, 1, 1, 1, 3, 0);
  ends.push_back({wire.cbr(scope + "/b7x7dbl/conv4", 192, 1, 7, 1, 1, 0, 3), 192});

  wire.at(src, in_c, h, w);
  wire.avgpool(scope + "/bpool/pool", 3, 1, 1);
  ends.push_back({wire.cbr(scope + "/bpool", 192, 1, 1, 1, 1, 0, 0), 192});

  return concat_branches(wire, scope + "/concat", ends, h, w);
}

std::string reduction_b(Wire& wire, const std::string& scope) {
  const std::string src = wire.last;
  const int in_c = wire.c, h = wire.h, w = wire.w;
  std::vector<BranchEnd> ends;

  wire.cbr(scope + "/b3x3/reduce", 192, 1, 1, 1, 1, 0, 0);
  ends.push_back({wire.cbr(scope + "/b3x3", 320, 3, 3, 2, 2, 0, 0), 320});
  const int oh = wire.h, ow = wire.w;

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b7x7x3/reduce", 192, 1, 1, 1, 1, 0, 0);
  wire.cbr(scope + "/b7x7x3/conv1", 192, 1, 7, 1, 1, 0, 3);
  wire.cbr(scope + "/b7x7x3/conv2", 192, 7, 1, 1, 1, 3, 0);
  ends.push_back({wire.cbr(scope + "/b7x7x3/conv3", 192, 3, 3, 2, 2, 0, 0), 192});

  wire.at(src, in_c, h, w);
  wire.maxpool(scope + "/bpool", 3, 2);
  ends.push_back({wire.last, in_c});

  return concat_branches(wire, scope + "/concat", ends, oh, ow);
}

std::string inception_c(Wire& wire, const std::string& scope) {
  const std::string src = wire.last;
  const int in_c = wire.c, h = wire.h, w = wire.w;
  std::vector<BranchEnd> ends;

  ends.push_back({wire.cbr(scope + "/b1x1", 320, 1, 1, 1, 1, 0, 0), 320});

  wire.at(src, in_c, h, w);
  const std::string b3_stem = wire.cbr(scope + "/b3x3/reduce", 384, 1, 1, 1, 1, 0, 0);
  ends.push_back({wire.cbr(scope + "/b3x3/split_a", 384, 1, 3, 1, 1, 0, 1), 384});
  wire.at(b3_stem, 384, h, w);
  ends.push_back({wire.cbr(scope + "/b3x3/split_b", 384, 3, 1, 1, 1, 1, 0), 384});

  wire.at(src, in_c, h, w);
  wire.cbr(scope + "/b3x3dbl/reduce", 448, 1, 1, 1, 1, 0, 0);
  const std::string dbl_stem = wire.cbr(scope + "/b3x3dbl/conv", 384, 3, 3, 1, 1, 1, 1);
  ends.push_back({wire.cbr(scope + "/b3x3dbl/split_a", 384, 1, 3, 1, 1, 0, 1), 384});
  wire.at(dbl_stem, 384, h, w);
  ends.push_back({wire.cbr(scope + "/b3x3dbl/split_b", 384, 3, 1, 1, 1, 1, 0), 384});

  wire.at(src, in_c, h, w);
  wire.avgpool(scope + "/bpool/pool", 3, 1, 1);
  ends.push_back({wire.cbr(scope + "/bpool", 192, 1, 1, 1, 1, 0, 0), 192});

  return concat_branches(wire, scope + "/concat", ends, h, w);
}

}  // namespace

ModelGraph build_inception_v3(InputShape in, std::uint64_t seed) {
  ModelGraph g;
  g.set_input_chw({in.c, in.h, in.w});
  Wire wire(g, seed, in);

  wire.cbr("backbone/stem/conv1", 32, 3, 3, 2, 2, 0, 0);
  wire.cbr("backbone/stem/conv2", 32, 3, 3, 1, 1, 0, 0);
  wire.cbr("backbone/stem/conv3", 64, 3, 3, 1, 1, 1, 1);
  wire.maxpool("backbone/stem/pool1", 3, 2);
  wire.cbr("backbone/stem/conv4", 80, 1, 1, 1, 1, 0, 0);
  wire.cbr("backbone/stem/conv5", 192, 3, 3, 1, 1, 0, 0);
  wire.maxpool("backbone/stem/pool2", 3, 2);

  inception_a(wire, "backbone/mixed1", 32);
  inception_a(wire, "backbone/mixed2", 64);
  inception_a(wire, "backbone/mixed3", 64);
  reduction_a(wire, "backbone/mixed4");
  inception_b(wire, "backbone/mixed5", 128);
  inception_b(wire, "backbone/mixed6", 160);
  inception_b(wire, "backbone/mixed7", 160);
  inception_b(wire, "backbone/mixed8", 192);
  reduction_b(wire, "backbone/mixed9");
  inception_c(wire, "backbone/mixed10");
  inception_c(wire, "backbone/mixed11");

  g.add(std::make_unique<GlobalAvgPool>("classifier/pool", wire.last));
  wire.at("classifier/pool", wire.c, 1, 1);
  g.add(std::make_unique<Flatten>("classifier/flatten", wire.last));
  wire.last = "classifier/flatten";
  g.add(std::make_unique<Dropout>("classifier/dropout", wire.last, 0.5f));
  wire.last = "classifier/dropout";
  wire.dense("classifier/fc", 2048, 1000, true);
  g.finalize();
  return g;
}

void attach_head(ModelGraph& g, const HeadConfig& cfg, std::uint64_t seed) {
  if (g.any_node_has_prefix("head/")) {
    throw ShapeError("attach_head: head already present");
  }
  g.remove_nodes_with_prefix("classifier/");
  g.finalize();

  const auto out_shape = g.infer_output_shape();
  if (out_shape.size() != 4) {
    throw ShapeError("attach_head: backbone output must be 4-D feature maps, got " +
                     shape_str(out_shape));
  }
  const auto chw = g.input_chw();
  InputShape in{chw[0], chw[1], chw[2]};
  Wire wire(g, seed, in);
  wire.at(g.output_name(), out_shape[1], out_shape[2], out_shape[3]);
  append_head(wire, cfg);
  g.finalize();
}

int freeze(ModelGraph& g, const std::string& prefix) {
  const int matched = g.freeze_prefix(prefix);
  if (matched == 0) {
    std::fprintf(stderr, "warning: freeze selector '%s' matched no parameters\n",
                 prefix.c_str());
  }
  return matched;
}

int freeze_if(ModelGraph& g,
              const std::function<bool(const std::string&)>& pred) {
  const int matched = g.freeze_if(pred);
  if (matched == 0) {
    std::fprintf(stderr, "warning: freeze predicate matched no parameters\n");
  }
  return matched;
}

namespace {

int count_kind(const ModelGraph& g, const char* kind) {
  int n = 0;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (std::string(g.node(i).kind()) == kind) ++n;
  }
  return n;
}

}  // namespace

int conv_count(const ModelGraph& g) { return count_kind(g, "conv2d"); }
int dense_count(const ModelGraph& g) { return count_kind(g, "dense"); }

int weighted_layer_count(const ModelGraph& g) {
  int n = 0;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto& node = g.node(i);
    const std::string kind = node.kind();
    if (kind != "conv2d" && kind != "dense") continue;
    if (node.name().find("/proj_") != std::string::npos) continue;
    ++n;
  }
  return n;
}

std::int64_t param_element_count(const ModelGraph& g) {
  std::int64_t n = 0;
  for (const auto* p : g.parameters()) n += p->value.size();
  return n;
}

Arch arch_from_string(const std::string& s) {
  if (s == "vgg_s") return Arch::VggS;
  if (s == "resnet_s") return Arch::ResnetS;
  if (s == "inception_s") return Arch::InceptionS;
  if (s == "vgg16") return Arch::Vgg16;
  if (s == "resnet50") return Arch::Resnet50;
  if (s == "inception_v3") return Arch::InceptionV3;
  throw DataError("unknown architecture '" + s +
                  "' (expected vgg_s|resnet_s|inception_s|vgg16|resnet50|inception_v3)");
}

std::string to_string(Arch a) {
  switch (a) {
    case Arch::VggS: return "vgg_s";
    case Arch::ResnetS: return "resnet_s";
    case Arch::InceptionS: return "inception_s";
    case Arch::Vgg16: return "vgg16";
    case Arch::Resnet50: return "resnet50";
    case Arch::InceptionV3: return "inception_v3";
  }
  return "?";
}

int default_input_hw(Arch a) {
  switch (a) {
    case Arch::VggS:
    case Arch::ResnetS:
    case Arch::InceptionS:
      return 32;
    case Arch::Vgg16:
    case Arch::Resnet50:
      return 224;
    case Arch::InceptionV3:
      return 299;
  }
  return 32;
}

ModelGraph build_arch(Arch a, InputShape in, std::uint64_t seed) {
  switch (a) {
    case Arch::VggS: return build_vgg_s(in, {}, seed);
    case Arch::ResnetS: return build_resnet_s(in, {}, seed);
    case Arch::InceptionS: return build_inception_s(in, {}, seed);
    case Arch::Vgg16: return build_vgg16(in, seed);
    case Arch::Resnet50: return build_resnet50(in, seed);
    case Arch::InceptionV3: return build_inception_v3(in, seed);
  }
  throw DataError("unknown architecture enum");
}

}  // namespace pmw::models
