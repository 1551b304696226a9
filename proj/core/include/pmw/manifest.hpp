#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmw/errors.hpp"

namespace pmw {

enum class ClassLabel { PMW, NotPMW };
enum class TypeTag { pmw, person, ship, illustration, tattoo, velella, jellyfish, random };
enum class Source { instagram, inaturalist, bing, other };
enum class Split { train, val, test, unassigned };

std::string to_string(ClassLabel c);
std::string to_string(TypeTag t);
std::string to_string(Source s);
std::string to_string(Split s);
ClassLabel class_from_string(const std::string& s);
TypeTag type_from_string(const std::string& s);
Source source_from_string(const std::string& s);
Split split_from_string(const std::string& s);

// The PMW class carries exactly the pmw type tag and vice versa.
ClassLabel class_for_type(TypeTag t);

struct SampleRecord {
  std::string path;
  ClassLabel cls = ClassLabel::NotPMW;
  TypeTag type = TypeTag::random;
  Source source = Source::other;
  Split split = Split::unassigned;
  std::uint64_t content_hash = 0;
};

// Throws unless class/type agree and the path is non-empty.
void validate_record(const SampleRecord& rec);

struct SampleManifest {
  std::vector<SampleRecord> records;
  std::vector<std::string> notes;
  std::uint64_t split_seed = 0;
  // directory the manifest was loaded from; relative record paths resolve
  // against it
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const SampleRecord& rec) const;
};

// JSONL, one record per line; notes/seed live in `<path>.meta.json`.
void save_manifest(const SampleManifest& m, const std::filesystem::path& path);
SampleManifest load_manifest(const std::filesystem::path& path);

struct IngestSummary {
  int added = 0;
  int skipped = 0;
  std::vector<std::string> warnings;
};

// One record per decodable image file (sorted name order); content hash is
// FNV-1a over the raw bytes. Unreadable entries are skipped with a warning.
IngestSummary ingest_directory(SampleManifest& m,
                               const std::filesystem::path& dir, TypeTag type,
                               Source source);

// Maps taxon names to a type tag. Unlisted taxa fall back to `fallback`
// (jellyfish by default, matching the source platform's catch-all exports).
struct TaxonMap {
  std::map<std::string, TypeTag> taxa;
  std::optional<TypeTag> fallback = TypeTag::jellyfish;

  static TaxonMap defaults();
  static TaxonMap load(const std::filesystem::path& json_path);
};

// CSV needs an image column ("image_path" or "image_url") and a taxon column
// ("taxon_name" or "scientific_name"). Local files are hashed by content;
// URL-only rows hash the URL string. Malformed rows are skipped with their
// line number in the warnings.
IngestSummary ingest_inaturalist_csv(SampleManifest& m,
                                     const std::filesystem::path& csv,
                                     const TaxonMap& taxa);

// Drops records with a previously seen content hash (first occurrence wins).
int dedupe(SampleManifest& m);

// Text file of 16-digit hex hashes (one per line, '#' comments); matching
// records are removed. Supports curated exclusion of bad crawl results.
int apply_exclude_list(SampleManifest& m, const std::filesystem::path& file);

struct SplitRatios {
  double train = 0.6, val = 0.2, test = 0.2;
};

struct SplitReport {
  int train = 0, val = 0, test = 0;
  std::vector<std::string> warnings;  // e.g. tiny strata forced to train
};

// Assigns every record a split, independently per (class, type) stratum:
// largest-remainder allocation with ties resolved toward the split that is
// most under-served so far (strata processed in name order), then a seeded
// shuffle inside the stratum. Strata smaller than 3 go entirely to train.
SplitReport stratified_split(SampleManifest& m, SplitRatios ratios,
                             std::uint64_t seed);

struct DatasetStats {
  std::map<std::string, int> by_class;
  std::map<std::string, int> by_type;
  std::map<std::string, int> by_source;
  std::map<std::string, int> by_split;
  int total = 0;
};

DatasetStats dataset_stats(const SampleManifest& m);
std::string stats_table(const DatasetStats& s);

}  // namespace pmw
