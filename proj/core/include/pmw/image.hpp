#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pmw/tensor.hpp"

namespace pmw {

// Interleaved 8-bit RGB.
struct Image8 {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;
};

// Binary PPM (P6), maxval 255.
Image8 read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image8& img);

// Raw tensor dump: magic "PMWR1\0", u8 dtype tag (0 = f32), u32 rank,
// u32 dims, little-endian values. Values are [C,H,W] in [0,1].
inline constexpr char kRawTensorMagic[6] = {'P', 'M', 'W', 'R', '1', '\0'};
TensorF read_raw_tensor(const std::filesystem::path& path);
void write_raw_tensor(const std::filesystem::path& path, const TensorF& t);

// Cheap header sniff: true if the file looks like a format we can decode
// (PPM/raw always; PNG/JPEG when the codecs were built in).
bool probe_image(const std::filesystem::path& path);

TensorF image_to_tensor(const Image8& img);  // [3,H,W], /255
Image8 tensor_to_image(const TensorF& chw);  // clamps to [0,1], x255 rounded

// Bilinear, non-align-corners sampling: src = (dst + 0.5) * scale - 0.5,
// edges clamped. Identity when the size already matches.
TensorF resize_bilinear(const TensorF& chw, int out_h, int out_w);

// Decode (PPM/raw, plus PNG/JPEG when available), scale to [0,1], resize.
TensorF load_image(const std::filesystem::path& path, int target_h = 224,
                   int target_w = 224);

}  // namespace pmw
