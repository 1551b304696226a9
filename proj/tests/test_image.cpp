#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "pmw/image.hpp"

using namespace pmw;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pmw_img_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Image8 solid_image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Image8 img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (int i = 0; i < w * h; ++i) {
    img.rgb[static_cast<std::size_t>(i) * 3] = r;
    img.rgb[static_cast<std::size_t>(i) * 3 + 1] = g;
    img.rgb[static_cast<std::size_t>(i) * 3 + 2] = b;
  }
  return img;
}

}  // namespace

TEST_CASE("ppm round-trips") {
  TempDir tmp;
  std::mt19937 gen(1);
  Image8 img;
  img.width = 7;
  img.height = 5;
  img.rgb.resize(7 * 5 * 3);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(gen() & 0xff);

  const auto file = tmp.path / "img.ppm";
  write_ppm(file, img);
  const Image8 back = read_ppm(file);
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.rgb == img.rgb);
}

TEST_CASE("ppm header comments are tolerated; bad files rejected") {
  TempDir tmp;
  const auto file = tmp.path / "c.ppm";
  {
    std::ofstream out(file, std::ios::binary);
    out << "P6\n# comment line\n2 1\n255\n";
    const unsigned char px[6] = {255, 0, 0, 0, 255, 0};
    out.write(reinterpret_cast<const char*>(px), 6);
  }
  const Image8 img = read_ppm(file);
  CHECK(img.width == 2);
  CHECK(img.rgb[0] == 255);

  const auto bad = tmp.path / "bad.ppm";
  std::ofstream(bad) << "P3\n2 1\n255\n";
  CHECK_THROWS_AS(read_ppm(bad), DataError);
  CHECK_THROWS_AS(load_image(bad, 8, 8), DataError);
}

TEST_CASE("raw tensor dump round-trips") {
  TempDir tmp;
  std::mt19937 gen(2);
  const TensorF t = oracle::random_tensor<float>({3, 4, 6}, gen, 0.0, 1.0);
  const auto file = tmp.path / "img.pmwr";
  write_raw_tensor(file, t);
  const TensorF back = read_raw_tensor(file);
  CHECK(back.shape() == t.shape());
  CHECK(oracle::max_abs_diff(t, back) == 0.0);
  CHECK(probe_image(file));
}

TEST_CASE("constant image stays constant through resize") {
  TempDir tmp;
  const auto file = tmp.path / "solid.ppm";
  write_ppm(file, solid_image(17, 9, 10, 128, 250));
  const TensorF t = load_image(file, 224, 224);
  CHECK(t.shape() == std::vector<int>{3, 224, 224});
  const std::int64_t plane = 224 * 224;
  for (std::int64_t i = 0; i < plane; ++i) {
    CHECK(t[i] == doctest::Approx(10.0f / 255.0f));
    CHECK(t[plane + i] == doctest::Approx(128.0f / 255.0f));
    CHECK(t[2 * plane + i] == doctest::Approx(250.0f / 255.0f));
  }
}

TEST_CASE("resize at the native size is the identity") {
  std::mt19937 gen(3);
  const TensorF t = oracle::random_tensor<float>({3, 224, 224}, gen, 0.0, 1.0);
  const TensorF r = resize_bilinear(t, 224, 224);
  CHECK(oracle::max_abs_diff(t, r) == 0.0);
}

TEST_CASE("2x2 checkerboard upscales to the hand-computed bilinear grid") {
  TensorF t({1, 2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
  const TensorF r = resize_bilinear(t, 4, 4);
  // src = (dst + 0.5)/2 - 0.5, clamped: sample points 0, 0.25, 0.75, 1
  const float expected[4][4] = {{1.0f, 0.75f, 0.25f, 0.0f},
                                {0.75f, 0.625f, 0.375f, 0.25f},
                                {0.25f, 0.375f, 0.625f, 0.75f},
                                {0.0f, 0.25f, 0.75f, 1.0f}};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      CHECK(r.at(0, y, x) == doctest::Approx(expected[y][x]).epsilon(1e-6));
    }
  }
}

TEST_CASE("load_image reports the failing path") {
  CHECK_THROWS_WITH_AS(load_image("/nonexistent/zzz.ppm", 8, 8),
                       doctest::Contains("zzz.ppm"), DataError);
}
