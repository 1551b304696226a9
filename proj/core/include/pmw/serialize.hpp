#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pmw/graph.hpp"

namespace pmw {

// Weight file layout (all integers little-endian):
//   magic "PMWW1\0"
//   records: u32 name length, UTF-8 name, u32 rank, u32 dims[rank],
//            u8 dtype tag (0 = f32, 1 = f64), raw little-endian values
//   trailer: u64 FNV-1a checksum of every preceding byte
inline constexpr char kWeightMagic[6] = {'P', 'M', 'W', 'W', '1', '\0'};

struct LoadReport {
  std::vector<std::string> loaded;   // applied to the model
  std::vector<std::string> skipped;  // in the file, absent from the model
  std::vector<std::string> missing;  // in the model, absent from the file
};

// Serializes every parameter and buffer whose name starts with name_prefix
// (empty = everything). Round-trips bit-exactly.
void save_weights(const ModelGraph& g, const std::filesystem::path& path,
                  const std::string& name_prefix = "");

// Loads by parameter name. A matched name with a different shape or dtype is
// an error regardless of allow_partial; unmatched names are an error unless
// allow_partial, in which case they land in the report.
LoadReport load_weights(const std::filesystem::path& path, ModelGraph& g,
                        bool allow_partial);

// Name -> tensor forms used by tools and tests.
void save_named_tensors(
    const std::vector<std::pair<std::string, const TensorF*>>& tensors,
    const std::filesystem::path& path);
std::map<std::string, TensorF> read_named_tensors(
    const std::filesystem::path& path);

}  // namespace pmw
