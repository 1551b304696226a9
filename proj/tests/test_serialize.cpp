#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "pmw/models.hpp"
#include "pmw/serialize.hpp"

using namespace pmw;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pmw_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("weight round-trip is bit-exact") {
  TempDir tmp;
  ModelGraph a = models::build_resnet_s({3, 32, 32}, {}, 21);
  const auto file = tmp.path / "weights.bin";
  save_weights(a, file);

  ModelGraph b = models::build_resnet_s({3, 32, 32}, {}, 99);
  CHECK(a.content_checksum() != b.content_checksum());
  const LoadReport report = load_weights(file, b, /*allow_partial=*/false);
  CHECK(report.skipped.empty());
  CHECK(report.missing.empty());
  CHECK(report.loaded.size() ==
        a.parameters().size() + a.buffer_tensors().size());
  CHECK(a.content_checksum() == b.content_checksum());
}

TEST_CASE("partial load reports loaded, skipped and missing exhaustively") {
  TempDir tmp;
  models::VggSConfig no_head;
  no_head.with_head = false;
  ModelGraph backbone = models::build_vgg_s({3, 32, 32}, no_head, 5);
  const auto file = tmp.path / "backbone.bin";
  save_weights(backbone, file, "backbone/");

  ModelGraph full = models::build_vgg_s({3, 32, 32}, {}, 6);
  CHECK_THROWS_WITH_AS(load_weights(file, full, /*allow_partial=*/false),
                       doctest::Contains("missing"), DataError);
  const LoadReport report = load_weights(file, full, /*allow_partial=*/true);
  CHECK(!report.loaded.empty());
  CHECK(report.skipped.empty());
  for (const auto& name : report.missing) {
    CHECK(name.rfind("head/", 0) == 0);
  }
  // every model tensor or file record lands in exactly one bucket
  const std::size_t model_tensors =
      full.parameters().size() + full.buffer_tensors().size();
  CHECK(report.loaded.size() + report.missing.size() == model_tensors);
}

TEST_CASE("shape mismatch on a matched name fails and names the parameter") {
  TempDir tmp;
  models::VggSConfig small;
  small.block1_channels = 8;
  ModelGraph a = models::build_vgg_s({3, 32, 32}, small, 1);
  const auto file = tmp.path / "w.bin";
  save_weights(a, file);

  ModelGraph b = models::build_vgg_s({3, 32, 32}, {}, 1);  // wider blocks
  CHECK_THROWS_WITH_AS(load_weights(file, b, /*allow_partial=*/true),
                       doctest::Contains("backbone/block1/conv1"), DataError);
}

TEST_CASE("corrupt files are rejected") {
  TempDir tmp;
  const auto file = tmp.path / "w.bin";
  ModelGraph a = models::build_vgg_s({3, 32, 32}, {}, 2);

  SUBCASE("bad magic") {
    std::ofstream out(file, std::ios::binary);
    out << "NOTPMWW100000000";
    out.close();
    CHECK_THROWS_WITH_AS(load_weights(file, a, true), doctest::Contains("magic"),
                         DataError);
  }
  SUBCASE("flipped byte breaks the checksum") {
    save_weights(a, file);
    std::fstream io(file, std::ios::binary | std::ios::in | std::ios::out);
    io.seekp(40);
    char c;
    io.seekg(40);
    io.get(c);
    c = static_cast<char>(c ^ 0x5a);
    io.seekp(40);
    io.put(c);
    io.close();
    CHECK_THROWS_WITH_AS(load_weights(file, a, true), doctest::Contains("checksum"),
                         DataError);
  }
}
