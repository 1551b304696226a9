#include "pmw/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pmw/image.hpp"
#include "pmw/rng.hpp"

namespace pmw {

using nlohmann::json;

std::string to_string(ClassLabel c) {
  return c == ClassLabel::PMW ? "PMW" : "not-PMW";
}

std::string to_string(TypeTag t) {
  switch (t) {
    case TypeTag::pmw: return "pmw";
    case TypeTag::person: return "person";
    case TypeTag::ship: return "ship";
    case TypeTag::illustration: return "illustration";
    case TypeTag::tattoo: return "tattoo";
    case TypeTag::velella: return "velella";
    case TypeTag::jellyfish: return "jellyfish";
    case TypeTag::random: return "random";
  }
  return "?";
}

std::string to_string(Source s) {
  switch (s) {
    case Source::instagram: return "instagram";
    case Source::inaturalist: return "inaturalist";
    case Source::bing: return "bing";
    case Source::other: return "other";
  }
  return "?";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "?";
}

ClassLabel class_from_string(const std::string& s) {
  if (s == "PMW") return ClassLabel::PMW;
  if (s == "not-PMW") return ClassLabel::NotPMW;
  throw DataError("unknown class label '" + s + "'");
}

TypeTag type_from_string(const std::string& s) {
  for (auto t : {TypeTag::pmw, TypeTag::person, TypeTag::ship,
                 TypeTag::illustration, TypeTag::tattoo, TypeTag::velella,
                 TypeTag::jellyfish, TypeTag::random}) {
    if (to_string(t) == s) return t;
  }
  throw DataError("unknown type tag '" + s + "'");
}

Source source_from_string(const std::string& s) {
  for (auto v : {Source::instagram, Source::inaturalist, Source::bing, Source::other}) {
    if (to_string(v) == s) return v;
  }
  throw DataError("unknown source '" + s + "'");
}

Split split_from_string(const std::string& s) {
  for (auto v : {Split::train, Split::val, Split::test, Split::unassigned}) {
    if (to_string(v) == s) return v;
  }
  throw DataError("unknown split '" + s + "'");
}

ClassLabel class_for_type(TypeTag t) {
  return t == TypeTag::pmw ? ClassLabel::PMW : ClassLabel::NotPMW;
}

void validate_record(const SampleRecord& rec) {
  if (rec.path.empty()) throw DataError("record with empty path");
  const bool is_pmw_class = rec.cls == ClassLabel::PMW;
  const bool is_pmw_type = rec.type == TypeTag::pmw;
  if (is_pmw_class != is_pmw_type) {
    throw DataError("record '" + rec.path + "': class " + to_string(rec.cls) +
                    " inconsistent with type " + to_string(rec.type));
  }
}

std::filesystem::path SampleManifest::resolve(const SampleRecord& rec) const {
  std::filesystem::path p(rec.path);
  if (p.is_absolute() || base_dir.empty() || std::filesystem::exists(p)) return p;
  return base_dir / p;
}

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t hash_from_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  return fnv1a64(buf.data(), buf.size());
}

}  // namespace

void save_manifest(const SampleManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const auto anchor = std::filesystem::absolute(path).parent_path();
  for (const auto& rec : m.records) {
    // stored relative to the manifest location, so dataset trees relocate
    std::string stored = rec.path;
    const std::filesystem::path p = m.resolve(rec);
    if (p.is_absolute()) {
      const auto rel = p.lexically_proximate(anchor);
      stored = rel.string();
    }
    json j{{"path", stored},
           {"class", to_string(rec.cls)},
           {"type", to_string(rec.type)},
           {"source", to_string(rec.source)},
           {"split", to_string(rec.split)},
           {"content_hash", hash_hex(rec.content_hash)}};
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("short write to '" + path.string() + "'");

  json meta{{"manifest_version", 1},
            {"records", m.records.size()},
            {"split_seed", m.split_seed},
            {"notes", m.notes}};
  std::ofstream meta_out(path.string() + ".meta.json", std::ios::trunc);
  meta_out << meta.dump(2) << "\n";
}

SampleManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  SampleManifest m;
  m.base_dir = std::filesystem::absolute(path).parent_path();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      SampleRecord rec;
      rec.path = j.at("path").get<std::string>();
      rec.cls = class_from_string(j.at("class").get<std::string>());
      rec.type = type_from_string(j.at("type").get<std::string>());
      rec.source = source_from_string(j.at("source").get<std::string>());
      rec.split = split_from_string(j.at("split").get<std::string>());
      rec.content_hash = hash_from_hex(j.at("content_hash").get<std::string>());
      validate_record(rec);
      m.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw DataError("manifest '" + path.string() + "' line " +
                      std::to_string(line_no) + ": " + e.what());
    }
  }
  const auto meta_path = path.string() + ".meta.json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream meta_in(meta_path);
    json meta = json::parse(meta_in, nullptr, /*allow_exceptions=*/false);
    if (!meta.is_discarded()) {
      m.split_seed = meta.value("split_seed", 0ull);
      m.notes = meta.value("notes", std::vector<std::string>{});
    }
  }
  return m;
}

IngestSummary ingest_directory(SampleManifest& m,
                               const std::filesystem::path& dir, TypeTag type,
                               Source source) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("'" + dir.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  IngestSummary summary;
  for (const auto& f : files) {
    if (!probe_image(f)) {
      ++summary.skipped;
      summary.warnings.push_back("skipped undecodable file '" + f.string() + "'");
      continue;
    }
    SampleRecord rec;
    rec.path = std::filesystem::absolute(f).lexically_normal().string();
    rec.type = type;
    rec.cls = class_for_type(type);
    rec.source = source;
    rec.content_hash = hash_file(f);
    validate_record(rec);
    m.records.push_back(std::move(rec));
    ++summary.added;
  }
  return summary;
}

TaxonMap TaxonMap::defaults() {
  TaxonMap t;
  t.taxa["Physalia physalis"] = TypeTag::pmw;
  t.taxa["Velella velella"] = TypeTag::velella;
  t.fallback = TypeTag::jellyfish;
  return t;
}

TaxonMap TaxonMap::load(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw DataError("cannot open taxon map '" + json_path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("taxon map '" + json_path.string() + "': " + e.what());
  }
  TaxonMap t;
  for (const auto& [taxon, tag] : j.at("taxa").items()) {
    t.taxa[taxon] = type_from_string(tag.get<std::string>());
  }
  if (j.contains("fallback") && !j["fallback"].is_null()) {
    t.fallback = type_from_string(j["fallback"].get<std::string>());
  } else if (j.contains("fallback")) {
    t.fallback.reset();
  }
  return t;
}

namespace {

// One CSV line, quotes honored ('""' is an escaped quote). Returns false on
// an unterminated quote.
bool parse_csv_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return !quoted;
}

}  // namespace

IngestSummary ingest_inaturalist_csv(SampleManifest& m,
                                     const std::filesystem::path& csv,
                                     const TaxonMap& taxa) {
  std::ifstream in(csv);
  if (!in) throw DataError("cannot open csv '" + csv.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv '" + csv.string() + "' is empty");

  std::vector<std::string> header;
  if (!parse_csv_line(line, header)) {
    throw DataError("csv '" + csv.string() + "': malformed header");
  }
  auto col_of = [&](std::initializer_list<const char*> names) -> int {
    for (const char* n : names) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == n) return static_cast<int>(i);
      }
    }
    return -1;
  };
  const int image_col = col_of({"image_path", "image_url"});
  if (image_col < 0) {
    throw DataError("csv '" + csv.string() +
                    "': missing mandatory column 'image_path' (or 'image_url')");
  }
  const int taxon_col = col_of({"taxon_name", "scientific_name"});
  if (taxon_col < 0) {
    throw DataError("csv '" + csv.string() +
                    "': missing mandatory column 'taxon_name' (or 'scientific_name')");
  }

  IngestSummary summary;
  std::vector<std::string> fields;
  const auto base = std::filesystem::absolute(csv).parent_path();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!parse_csv_line(line, fields) ||
        static_cast<int>(fields.size()) <= std::max(image_col, taxon_col)) {
      ++summary.skipped;
      summary.warnings.push_back("line " + std::to_string(line_no) + ": malformed row");
      continue;
    }
    const std::string& image = fields[static_cast<std::size_t>(image_col)];
    const std::string& taxon = fields[static_cast<std::size_t>(taxon_col)];
    if (image.empty() || taxon.empty()) {
      ++summary.skipped;
      summary.warnings.push_back("line " + std::to_string(line_no) +
                                 ": empty image or taxon field");
      continue;
    }
    TypeTag type;
    auto it = taxa.taxa.find(taxon);
    if (it != taxa.taxa.end()) {
      type = it->second;
    } else if (taxa.fallback) {
      type = *taxa.fallback;
    } else {
      ++summary.skipped;
      summary.warnings.push_back("line " + std::to_string(line_no) +
                                 ": unmapped taxon '" + taxon + "'");
      continue;
    }
    SampleRecord rec;
    rec.path = image;
    rec.type = type;
    rec.cls = class_for_type(type);
    rec.source = Source::inaturalist;
    std::filesystem::path p(image);
    if (!p.is_absolute() && std::filesystem::exists(base / p)) p = base / p;
    if (std::filesystem::exists(p)) {
      rec.content_hash = hash_file(p);
      rec.path = p.string();
    } else {
      rec.content_hash = fnv1a64(image);  // URL row; bytes unavailable offline
    }
    validate_record(rec);
    m.records.push_back(std::move(rec));
    ++summary.added;
  }
  return summary;
}

int dedupe(SampleManifest& m) {
  std::vector<SampleRecord> kept;
  kept.reserve(m.records.size());
  std::map<std::uint64_t, bool> seen;
  int removed = 0;
  for (auto& rec : m.records) {
    if (seen.emplace(rec.content_hash, true).second) {
      kept.push_back(std::move(rec));
    } else {
      ++removed;
    }
  }
  m.records = std::move(kept);
  return removed;
}

int apply_exclude_list(SampleManifest& m, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open exclude list '" + file.string() + "'");
  std::map<std::uint64_t, bool> excluded;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash_end = line.find('#');
    std::string token = line.substr(0, hash_end);
    token.erase(std::remove_if(token.begin(), token.end(),
                               [](unsigned char c) { return std::isspace(c); }),
                token.end());
    if (token.empty()) continue;
    try {
      excluded[hash_from_hex(token)] = true;
    } catch (const std::exception&) {
      throw DataError("exclude list '" + file.string() + "': bad hash '" + token + "'");
    }
  }
  const auto before = m.records.size();
  std::erase_if(m.records, [&](const SampleRecord& r) {
    return excluded.count(r.content_hash) > 0;
  });
  return static_cast<int>(before - m.records.size());
}

SplitReport stratified_split(SampleManifest& m, SplitRatios ratios,
                             std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (ratios.train <= 0 || ratios.val < 0 || ratios.test < 0 ||
      std::fabs(sum - 1.0) > 1e-9) {
    throw DataError("split ratios must be non-negative and sum to 1");
  }

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    strata[to_string(m.records[i].cls) + "/" + to_string(m.records[i].type)]
        .push_back(i);
  }

  SplitReport report;
  const Rng base = Rng(seed).stream("split");
  const double ratio[3] = {ratios.train, ratios.val, ratios.test};
  // Cumulative under-allocation per split; breaks remainder ties toward the
  // split that proportionality owes the most, so the global counts track the
  // exact targets as strata are processed in name order.
  double debt[3] = {0.0, 0.0, 0.0};

  for (auto& [name, indices] : strata) {
    const std::size_t n = indices.size();
    if (n < 3) {
      for (auto idx : indices) m.records[idx].split = Split::train;
      report.train += static_cast<int>(n);
      report.warnings.push_back("stratum " + name + " has " + std::to_string(n) +
                                " record(s); assigned entirely to train");
      continue;
    }
    double exact[3];
    int alloc[3];
    double rem[3];
    int assigned = 0;
    for (int s = 0; s < 3; ++s) {
      exact[s] = static_cast<double>(n) * ratio[s];
      alloc[s] = static_cast<int>(std::floor(exact[s]));
      rem[s] = exact[s] - alloc[s];
      assigned += alloc[s];
    }
    int extras = static_cast<int>(n) - assigned;
    std::vector<int> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (rem[a] != rem[b]) return rem[a] > rem[b];
      if (debt[a] != debt[b]) return debt[a] > debt[b];
      return a < b;
    });
    for (int e = 0; e < extras; ++e) ++alloc[order[static_cast<std::size_t>(e)]];
    for (int s = 0; s < 3; ++s) debt[s] += exact[s] - alloc[s];

    Rng rng = base.stream(name);
    shuffle(indices, rng);
    std::size_t cursor = 0;
    const Split splits[3] = {Split::train, Split::val, Split::test};
    for (int s = 0; s < 3; ++s) {
      for (int k = 0; k < alloc[s]; ++k) {
        m.records[indices[cursor++]].split = splits[s];
      }
    }
    report.train += alloc[0];
    report.val += alloc[1];
    report.test += alloc[2];
  }
  m.split_seed = seed;
  return report;
}

DatasetStats dataset_stats(const SampleManifest& m) {
  DatasetStats s;
  for (const auto& rec : m.records) {
    ++s.by_class[to_string(rec.cls)];
    ++s.by_type[to_string(rec.type)];
    ++s.by_source[to_string(rec.source)];
    ++s.by_split[to_string(rec.split)];
    ++s.total;
  }
  return s;
}

std::string stats_table(const DatasetStats& s) {
  std::ostringstream os;
  auto section = [&](const char* title, const std::map<std::string, int>& rows) {
    os << title << "\n";
    for (const auto& [k, v] : rows) {
      os << "  " << k;
      for (std::size_t i = k.size(); i < 14; ++i) os << ' ';
      os << v << "\n";
    }
  };
  section("class", s.by_class);
  section("type", s.by_type);
  section("source", s.by_source);
  section("split", s.by_split);
  os << "total           " << s.total << "\n";
  return os.str();
}

}  // namespace pmw
