#include "pmw/serialize.hpp"

#include <cstring>
#include <fstream>

#include "pmw/rng.hpp"

namespace pmw {

namespace {

void append_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void append_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  std::size_t end = 0;

  bool done() const { return pos >= end; }

  void need(std::size_t n, const char* what) {
    if (pos + n > end) {
      throw DataError(std::string("weight file truncated while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("short write to '" + path.string() + "'");
}

void append_record(std::string& body, const std::string& name,
                   const TensorF& t) {
  append_u32(body, static_cast<std::uint32_t>(name.size()));
  body.append(name);
  append_u32(body, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape()) append_u32(body, static_cast<std::uint32_t>(d));
  body.push_back('\0');  // dtype tag 0 = f32
  const std::size_t n = static_cast<std::size_t>(t.size()) * sizeof(float);
  const std::size_t off = body.size();
  body.resize(off + n);
  std::memcpy(body.data() + off, t.data(), n);
}

// Parses the record region; the caller has already validated magic+checksum.
std::map<std::string, TensorF> parse_records(const std::string& buf) {
  Reader r{buf, sizeof(kWeightMagic), buf.size() - 8};
  std::map<std::string, TensorF> out;
  while (!r.done()) {
    const std::uint32_t name_len = r.u32("name length");
    const std::string name = r.bytes(name_len, "name");
    const std::uint32_t rank = r.u32("rank");
    if (rank > 8) throw DataError("weight record '" + name + "': absurd rank");
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape.push_back(static_cast<int>(r.u32("dims")));
    }
    const std::uint8_t dtype = r.u8("dtype tag");
    if (dtype != 0) {
      throw DataError("weight record '" + name +
                      "': unsupported dtype tag " + std::to_string(dtype));
    }
    const std::int64_t numel = shape_numel(shape);
    const std::string raw =
        r.bytes(static_cast<std::size_t>(numel) * sizeof(float), "values");
    std::vector<float> vals(static_cast<std::size_t>(numel));
    std::memcpy(vals.data(), raw.data(), raw.size());
    if (!out.emplace(name, TensorF(shape, std::move(vals))).second) {
      throw DataError("weight file: duplicate record '" + name + "'");
    }
  }
  return out;
}

std::string read_and_verify(const std::filesystem::path& path) {
  std::string buf = read_file(path);
  if (buf.size() < sizeof(kWeightMagic) + 8 ||
      std::memcmp(buf.data(), kWeightMagic, sizeof(kWeightMagic)) != 0) {
    throw DataError("'" + path.string() + "' is not a weight file (bad magic)");
  }
  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 8, 8);
  const std::uint64_t computed = fnv1a64(buf.data(), buf.size() - 8);
  if (stored != computed) {
    throw DataError("'" + path.string() + "': checksum mismatch (corrupt file)");
  }
  return buf;
}

}  // namespace

void save_named_tensors(
    const std::vector<std::pair<std::string, const TensorF*>>& tensors,
    const std::filesystem::path& path) {
  std::string body(kWeightMagic, sizeof(kWeightMagic));
  for (const auto& [name, t] : tensors) append_record(body, name, *t);
  append_u64(body, fnv1a64(body.data(), body.size()));
  write_file(path, body);
}

std::map<std::string, TensorF> read_named_tensors(
    const std::filesystem::path& path) {
  return parse_records(read_and_verify(path));
}

void save_weights(const ModelGraph& g, const std::filesystem::path& path,
                  const std::string& name_prefix) {
  std::vector<std::pair<std::string, const TensorF*>> tensors;
  for (const auto* p : g.parameters()) {
    if (p->name.rfind(name_prefix, 0) == 0) tensors.emplace_back(p->name, &p->value);
  }
  for (const auto* b : g.buffer_tensors()) {
    if (b->name.rfind(name_prefix, 0) == 0) tensors.emplace_back(b->name, &b->value);
  }
  save_named_tensors(tensors, path);
}

LoadReport load_weights(const std::filesystem::path& path, ModelGraph& g,
                        bool allow_partial) {
  auto records = read_named_tensors(path);

  std::map<std::string, TensorF*> targets;
  for (auto* p : g.parameters()) targets[p->name] = &p->value;
  for (auto* b : g.buffer_tensors()) targets[b->name] = &b->value;

  LoadReport report;
  for (auto& [name, tensor] : records) {
    auto it = targets.find(name);
    if (it == targets.end()) {
      if (!allow_partial) {
        throw DataError("weight file has no home for '" + name +
                        "' (use partial load to skip)");
      }
      report.skipped.push_back(name);
      continue;
    }
    if (it->second->shape() != tensor.shape()) {
      throw DataError("parameter '" + name + "': file shape " +
                      shape_str(tensor.shape()) + " != model shape " +
                      shape_str(it->second->shape()));
    }
    *it->second = std::move(tensor);
    report.loaded.push_back(name);
  }
  for (const auto& [name, ptr] : targets) {
    (void)ptr;
    if (!records.count(name)) {
      if (!allow_partial) {
        throw DataError("weight file is missing '" + name +
                        "' (use partial load to proceed)");
      }
      report.missing.push_back(name);
    }
  }
  return report;
}

}  // namespace pmw
