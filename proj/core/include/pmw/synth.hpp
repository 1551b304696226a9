#pragma once

#include <cstdint>
#include <filesystem>

#include "pmw/manifest.hpp"
#include "pmw/rng.hpp"
#include "pmw/tensor.hpp"

namespace pmw {

// Palette/lighting family for the rendered scenes. Two presets give a
// related-but-shifted pair of distributions for transfer experiments.
struct SynthStyle {
  int palette = 0;  // 0 = standard, 1 = shifted
};

struct SynthConfig {
  int n_per_class = 600;
  std::uint64_t seed = 42;
  int image_size = 64;
  SynthStyle style{};
};

// Deterministic desk-scale stand-in for the scraped dataset. Positives render
// an elongated tilted float with trailing curved strokes over a gradient
// background; negatives cycle through the seven distractor types of the
// taxonomy. Writes `<type>/<type>_<idx>.ppm` plus manifest.jsonl under
// out_dir and returns the manifest. Identical configs produce byte-identical
// trees.
SampleManifest generate_synthetic(const std::filesystem::path& out_dir,
                                  const SynthConfig& cfg);

// Renders one sample in memory; exposed for tests.
TensorF render_synthetic_image(TypeTag type, int size, const SynthStyle& style,
                               Rng rng);

}  // namespace pmw
