#include "pmw/dataset.hpp"

#include <cstring>

#include "pmw/image.hpp"

namespace pmw {

TensorDataset TensorDataset::load(const SampleManifest& m, Split split, int hw) {
  TensorDataset ds;
  ds.hw_ = hw;
  for (const auto& rec : m.records) {
    if (rec.split != split) continue;
    TensorF img = load_image(m.resolve(rec), hw, hw);
    ds.add(std::move(img), rec.cls == ClassLabel::PMW ? 1.0f : 0.0f, rec);
  }
  return ds;
}

void TensorDataset::add(TensorF image, float label, SampleRecord record) {
  if (hw_ == 0 && image.rank() == 3) hw_ = image.dim(1);
  images_.push_back(std::move(image));
  labels_.push_back(label);
  records_.push_back(std::move(record));
}

TensorF stack_images(const std::vector<const TensorF*>& images) {
  if (images.empty()) throw ShapeError("stack_images: empty batch");
  const auto& shape = images[0]->shape();
  if (shape.size() != 3) {
    throw ShapeError("stack_images: expected [C,H,W] images, got " + shape_str(shape));
  }
  TensorF out({static_cast<int>(images.size()), shape[0], shape[1], shape[2]});
  const std::int64_t stride = images[0]->size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i]->shape() != shape) {
      throw ShapeError("stack_images: ragged batch (" + shape_str(images[i]->shape()) +
                       " vs " + shape_str(shape) + ")");
    }
    std::memcpy(out.data() + static_cast<std::int64_t>(i) * stride,
                images[i]->data(), static_cast<std::size_t>(stride) * sizeof(float));
  }
  return out;
}

}  // namespace pmw
