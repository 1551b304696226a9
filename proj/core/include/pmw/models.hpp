#pragma once

#include <cstdint>
#include <string>

#include "pmw/graph.hpp"

namespace pmw::models {

struct InputShape {
  int c = 3, h = 32, w = 32;
};

// The fine-tuning stack appended to a backbone:
//   avgpool -> flatten -> dense(hidden, relu) -> dropout(rate) -> dense(1, sigmoid)
struct HeadConfig {
  enum class Pool { Global, Window };
  Pool pool = Pool::Global;
  ops::PoolSpec window{};  // used when pool == Window
  int hidden_width = 256;
  float dropout_rate = 0.30f;
};

// Desk-scale variants: each keeps its family's defining motif but trains in
// minutes on a CPU. with_head controls whether the standard binary head is
// appended; backbone-only graphs end at feature maps.
struct VggSConfig {
  int block1_channels = 16;
  int block2_channels = 32;
  bool with_head = true;
  HeadConfig head{};
};

struct ResnetSConfig {
  int stem_channels = 8;
  int stage1_channels = 8;
  int stage2_channels = 16;
  int blocks_per_stage = 2;
  bool with_head = true;
  HeadConfig head{};
};

struct InceptionSConfig {
  int stem_channels = 16;
  bool with_head = true;
  HeadConfig head{};
};

ModelGraph build_vgg_s(InputShape in, const VggSConfig& cfg, std::uint64_t seed);
ModelGraph build_resnet_s(InputShape in, const ResnetSConfig& cfg,
                          std::uint64_t seed);
ModelGraph build_inception_s(InputShape in, const InceptionSConfig& cfg,
                             std::uint64_t seed);

// Full-scale structural graphs with their canonical classifier stacks
// (buildable and forward-runnable; only the -S variants are trained here).
ModelGraph build_vgg16(InputShape in, std::uint64_t seed);
ModelGraph build_resnet50(InputShape in, std::uint64_t seed);
ModelGraph build_inception_v3(InputShape in, std::uint64_t seed);

// Appends the binary head at the backbone's feature-map output. A canonical
// "classifier/" stack, when present, is removed first (the output-layer
// replacement step of fine-tuning). Throws if a head is already attached.
void attach_head(ModelGraph& g, const HeadConfig& cfg, std::uint64_t seed);

// Marks every parameter whose name starts with `prefix` frozen; returns the
// match count and warns on stderr when nothing matched.
int freeze(ModelGraph& g, const std::string& prefix);
int freeze_if(ModelGraph& g,
              const std::function<bool(const std::string&)>& pred);

int conv_count(const ModelGraph& g);
int dense_count(const ModelGraph& g);
// Convolution + dense layers on the main paths; shortcut projections
// (nodes named ".../proj_*") are excluded, per the usual counting convention.
int weighted_layer_count(const ModelGraph& g);
std::int64_t param_element_count(const ModelGraph& g);

// Seeded initializers (uniform Kaiming / Xavier-Glorot); bound derivations in
// models.cpp. Exposed for tests.
void kaiming_uniform(TensorF& w, int fan_in, Rng rng);
void xavier_uniform(TensorF& w, int fan_in, int fan_out, Rng rng);

enum class Arch { VggS, ResnetS, InceptionS, Vgg16, Resnet50, InceptionV3 };

Arch arch_from_string(const std::string& s);
std::string to_string(Arch a);
int default_input_hw(Arch a);
// Builds the arch with default configs; -S variants include the head, the
// full-scale ones keep their canonical classifier (replace via attach_head).
ModelGraph build_arch(Arch a, InputShape in, std::uint64_t seed);

}  // namespace pmw::models
