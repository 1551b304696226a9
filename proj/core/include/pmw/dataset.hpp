#pragma once

#include <vector>

#include "pmw/manifest.hpp"
#include "pmw/tensor.hpp"

namespace pmw {

// Decoded split of a manifest: images resized once and cached in memory,
// labels 1.0 for the PMW class.
class TensorDataset {
 public:
  static TensorDataset load(const SampleManifest& m, Split split, int hw);

  std::size_t size() const { return images_.size(); }
  bool empty() const { return images_.empty(); }
  const TensorF& image(std::size_t i) const { return images_[i]; }
  float label(std::size_t i) const { return labels_[i]; }
  const SampleRecord& record(std::size_t i) const { return records_[i]; }
  int image_hw() const { return hw_; }

  void add(TensorF image, float label, SampleRecord record);

 private:
  std::vector<TensorF> images_;
  std::vector<float> labels_;
  std::vector<SampleRecord> records_;
  int hw_ = 0;
};

// Stacks [C,H,W] images into one [N,C,H,W] batch.
TensorF stack_images(const std::vector<const TensorF*>& images);

}  // namespace pmw
