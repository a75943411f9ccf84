// Copyright 2026 The SemID Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "semid/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "semid/rng.hpp"
#include "semid/vecmath.hpp"

namespace semid {
namespace {

constexpr char kEmbeddingMagic[6] = {'S', 'E', 'M', 'I', 'D', '\0'};
constexpr char kIndexMagic[6] = {'S', 'E', 'M', 'I', 'D', 'X'};
constexpr std::uint32_t kFormatVersion = 1;

// ---- little-endian byte packing -----------------------------------------

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  ByteReader(const std::string& path, std::string data)
      : path_(path), data_(std::move(data)) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  void expect_magic(const char (&magic)[6], const char* what) {
    if (remaining() < 6 || std::memcmp(data_.data() + pos_, magic, 6) != 0)
      throw ValidationError("MalformedHeader: " + path_ + ": not a " +
                            std::string(what) + " file (bad magic at offset 0)");
    pos_ += 6;
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint16_t u16() {
    const char* p = take(2);
    return static_cast<std::uint16_t>(byte(p, 0) | (byte(p, 1) << 8));
  }

  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte(p, i)) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    const char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte(p, i)) << (8 * i);
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string bytes(std::size_t len) {
    const char* p = take(len);
    return std::string(p, len);
  }

  void expect_end() {
    if (remaining() != 0)
      throw ValidationError("MalformedHeader: " + path_ + ": " +
                            std::to_string(remaining()) +
                            " trailing bytes at offset " + std::to_string(pos_));
  }

 private:
  static std::uint32_t byte(const char* p, int i) {
    return static_cast<std::uint8_t>(p[i]);
  }

  const char* take(std::size_t len) {
    if (remaining() < len)
      throw ValidationError("MalformedHeader: " + path_ +
                            ": unexpected end of file at offset " +
                            std::to_string(pos_));
    const char* p = data_.data() + pos_;
    pos_ += len;
    return p;
  }

  std::string path_;
  std::string data_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void spill(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

// ---- number formatting/parsing -------------------------------------------

std::string fmt_f32(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

std::string fmt_f64(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw ValidationError("MalformedHeader: " + where + ": bad number '" +
                          std::string(text) + "'");
  return v;
}

std::uint64_t parse_u64(std::string_view text, const std::string& where) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValidationError("MalformedHeader: " + where + ": bad integer '" +
                          std::string(text) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(sep, start);
    if (end == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::string data = slurp(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= data.size()) {
    std::size_t end = data.find('\n', start);
    if (end == std::string::npos) {
      if (start < data.size()) lines.push_back(data.substr(start));
      break;
    }
    std::string line = data.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

// ---- embeddings -----------------------------------------------------------

EmbeddingSet read_embeddings_bin(const std::string& path) {
  ByteReader r(path, slurp(path));
  r.expect_magic(kEmbeddingMagic, "semid embedding");
  std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw ValidationError("MalformedHeader: " + path +
                          ": unsupported version " + std::to_string(version));
  std::uint64_t count = r.u64();
  std::uint32_t dim = r.u32();
  if (dim == 0)
    throw ValidationError("MalformedHeader: " + path + ": dim is 0");

  EmbeddingSet set;
  set.dim = dim;
  set.keys.reserve(count);
  set.data.reserve(count * dim);
  std::unordered_set<std::string> seen;
  seen.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::size_t record_at = r.pos();
    std::uint16_t key_len = r.u16();
    std::string key = r.bytes(key_len);
    if (!seen.insert(key).second)
      throw ValidationError("DuplicateKey: " + path + ": key '" + key +
                            "' repeated in record " + std::to_string(i) +
                            " at offset " + std::to_string(record_at));
    for (std::uint32_t j = 0; j < dim; ++j) {
      std::size_t at = r.pos();
      float v = r.f32();
      if (!std::isfinite(v))
        throw ValidationError("NonFiniteValue: " + path + ": record " +
                              std::to_string(i) + " component " +
                              std::to_string(j) + " at offset " +
                              std::to_string(at));
      set.data.push_back(v);
    }
    set.keys.push_back(std::move(key));
  }
  r.expect_end();
  return set;
}

EmbeddingSet read_embeddings_lines(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  EmbeddingSet set;
  std::unordered_set<std::string> seen;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    const std::string where = path + ":" + std::to_string(li + 1);
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ValidationError("MalformedHeader: " + where +
                            ": expected 'key<TAB>values'");
    std::string key = line.substr(0, tab);
    if (key.empty())
      throw ValidationError("MalformedHeader: " + where + ": empty key");
    if (!seen.insert(key).second)
      throw ValidationError("DuplicateKey: " + where + ": key '" + key + "'");

    std::vector<std::string_view> values =
        split(std::string_view(line).substr(tab + 1), ',');
    if (set.dim == 0) {
      if (values.empty())
        throw ValidationError("MalformedHeader: " + where + ": no values");
      set.dim = static_cast<std::uint32_t>(values.size());
    } else if (values.size() != set.dim) {
      throw ValidationError("DimensionMismatch: " + where + ": expected " +
                            std::to_string(set.dim) + " values, got " +
                            std::to_string(values.size()));
    }
    for (std::string_view v : values) {
      double d = parse_double(v, where);
      if (!std::isfinite(d))
        throw ValidationError("NonFiniteValue: " + where + ": '" +
                              std::string(v) + "'");
      set.data.push_back(static_cast<float>(d));
    }
    set.keys.push_back(std::move(key));
  }
  if (set.keys.empty())
    throw ValidationError("MalformedHeader: " + path + ": no records");
  return set;
}

// ---- index text format ----------------------------------------------------

void append_meta(std::string& out, const TrainMeta& meta) {
  out += "seed\t" + std::to_string(meta.seed) + "\n";
  out += "max_iters\t" + std::to_string(meta.max_iters) + "\n";
  out += "tol\t" + fmt_f64(meta.tol) + "\n";
  out += "normalize\t" + std::string(meta.normalize ? "1" : "0") + "\n";
}

void append_row(std::string& out, std::span<const float> row) {
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j) out += ' ';
    out += fmt_f32(row[j]);
  }
  out += '\n';
}

std::vector<float> parse_row(std::string_view text, std::uint32_t dim,
                             const std::string& where) {
  std::vector<std::string_view> parts = split(text, ' ');
  if (parts.size() != dim)
    throw ValidationError("DimensionMismatch: " + where + ": expected " +
                          std::to_string(dim) + " components, got " +
                          std::to_string(parts.size()));
  std::vector<float> row(dim);
  for (std::uint32_t j = 0; j < dim; ++j) {
    double v = parse_double(parts[j], where);
    if (!std::isfinite(v))
      throw ValidationError("NonFiniteValue: " + where);
    row[j] = static_cast<float>(v);
  }
  return row;
}

void append_hc_node_text(std::string& out, const HcNode& node,
                         std::uint32_t depth) {
  out += "node\t" + std::to_string(depth) + "\t" +
         std::to_string(node.train_count) + "\t" +
         std::to_string(node.children.size()) + "\t";
  for (std::size_t j = 0; j < node.centroid.size(); ++j) {
    if (j) out += ' ';
    out += fmt_f32(node.centroid[j]);
  }
  out += '\n';
  for (const HcNode& child : node.children)
    append_hc_node_text(out, child, depth + 1);
}

// Line-oriented key/value header shared by both index kinds.
class TextIndexReader {
 public:
  TextIndexReader(const std::string& path, std::vector<std::string> lines)
      : path_(path), lines_(std::move(lines)) {}

  std::string where() const { return path_ + ":" + std::to_string(pos_ + 1); }

  const std::string& next_line() {
    while (pos_ < lines_.size() &&
           (lines_[pos_].empty() || lines_[pos_][0] == '#'))
      ++pos_;
    if (pos_ >= lines_.size())
      throw ValidationError("MalformedHeader: " + path_ +
                            ": unexpected end of file");
    return lines_[pos_++];
  }

  bool at_end() {
    while (pos_ < lines_.size() &&
           (lines_[pos_].empty() || lines_[pos_][0] == '#'))
      ++pos_;
    return pos_ >= lines_.size();
  }

  std::string expect_kv(const std::string& key) {
    const std::string& line = next_line();
    std::vector<std::string_view> parts = split(line, '\t');
    if (parts.size() != 2 || parts[0] != key)
      throw ValidationError("MalformedHeader: " + where() + ": expected '" +
                            key + "<TAB>value'");
    return std::string(parts[1]);
  }

 private:
  std::string path_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

HcNode read_hc_node_text(TextIndexReader& r, std::uint32_t expected_depth,
                         std::uint32_t max_depth, std::uint32_t branching,
                         std::uint32_t dim) {
  const std::string where = r.where();
  std::vector<std::string_view> parts = split(r.next_line(), '\t');
  if (parts.size() != 5 || parts[0] != "node")
    throw ValidationError("MalformedHeader: " + where + ": expected node row");
  std::uint64_t depth = parse_u64(parts[1], where);
  if (depth != expected_depth)
    throw ValidationError("MalformedHeader: " + where + ": node depth " +
                          std::to_string(depth) + ", expected " +
                          std::to_string(expected_depth));
  HcNode node;
  node.train_count = parse_u64(parts[2], where);
  std::uint64_t n_children = parse_u64(parts[3], where);
  node.centroid = parse_row(parts[4], dim, where);
  if (expected_depth == max_depth) {
    if (n_children != 0)
      throw ValidationError("MalformedHeader: " + where +
                            ": leaf with children");
  } else if (n_children < 1 || n_children > branching) {
    throw ValidationError("MalformedHeader: " + where + ": node has " +
                          std::to_string(n_children) + " children");
  }
  node.children.reserve(n_children);
  for (std::uint64_t i = 0; i < n_children; ++i)
    node.children.push_back(
        read_hc_node_text(r, expected_depth + 1, max_depth, branching, dim));
  return node;
}

LoadedIndex read_index_text(const std::string& path) {
  TextIndexReader r(path, read_lines(path));
  std::string kind = r.expect_kv("kind");
  if (kind != "rq" && kind != "hc")
    throw ValidationError("MalformedHeader: " + path + ": unknown kind '" +
                          kind + "'");
  std::uint64_t version = parse_u64(r.expect_kv("version"), path);
  if (version != kFormatVersion)
    throw ValidationError("MalformedHeader: " + path +
                          ": unsupported version " + std::to_string(version));

  LoadedIndex out;
  if (kind == "rq") {
    std::uint64_t levels = parse_u64(r.expect_kv("levels"), path);
    std::uint64_t dim = parse_u64(r.expect_kv("dim"), path);
    if (levels == 0)
      throw ValidationError("MalformedHeader: " + path + ": levels is 0");
    if (dim == 0)
      throw ValidationError("MalformedHeader: " + path + ": dim is 0");
    CodebookStack stack;
    stack.dim = static_cast<std::uint32_t>(dim);
    stack.meta.seed = parse_u64(r.expect_kv("seed"), path);
    stack.meta.max_iters =
        static_cast<std::uint32_t>(parse_u64(r.expect_kv("max_iters"), path));
    stack.meta.tol = parse_double(r.expect_kv("tol"), path);
    stack.meta.normalize = parse_u64(r.expect_kv("normalize"), path) != 0;
    for (std::uint64_t l = 1; l <= levels; ++l) {
      const std::string where = r.where();
      std::vector<std::string_view> parts = split(r.next_line(), '\t');
      if (parts.size() != 3 || parts[0] != "level")
        throw ValidationError("MalformedHeader: " + where +
                              ": expected level row");
      if (parse_u64(parts[1], where) != l)
        throw ValidationError("MalformedHeader: " + where +
                              ": out-of-order level");
      std::uint64_t size = parse_u64(parts[2], where);
      if (size == 0)
        throw ValidationError("MalformedHeader: " + where + ": level size 0");
      Codebook cb;
      cb.level = static_cast<std::uint32_t>(l);
      cb.dim = stack.dim;
      cb.centroids.reserve(size * dim);
      for (std::uint64_t rrow = 0; rrow < size; ++rrow) {
        std::vector<float> row = parse_row(r.next_line(), stack.dim, r.where());
        cb.centroids.insert(cb.centroids.end(), row.begin(), row.end());
      }
      stack.levels.push_back(std::move(cb));
    }
    out.stack = std::move(stack);
  } else {
    std::uint64_t depth = parse_u64(r.expect_kv("depth"), path);
    std::uint64_t branching = parse_u64(r.expect_kv("branching"), path);
    std::uint64_t dim = parse_u64(r.expect_kv("dim"), path);
    if (depth == 0)
      throw ValidationError("MalformedHeader: " + path + ": depth is 0");
    if (branching < 2)
      throw ValidationError("MalformedHeader: " + path + ": branching < 2");
    if (dim == 0)
      throw ValidationError("MalformedHeader: " + path + ": dim is 0");
    HcTree tree;
    tree.depth = static_cast<std::uint32_t>(depth);
    tree.branching = static_cast<std::uint32_t>(branching);
    tree.dim = static_cast<std::uint32_t>(dim);
    tree.meta.seed = parse_u64(r.expect_kv("seed"), path);
    tree.meta.max_iters =
        static_cast<std::uint32_t>(parse_u64(r.expect_kv("max_iters"), path));
    tree.meta.tol = parse_double(r.expect_kv("tol"), path);
    tree.meta.normalize = parse_u64(r.expect_kv("normalize"), path) != 0;
    tree.root = read_hc_node_text(r, 0, tree.depth, tree.branching, tree.dim);
    out.tree = std::move(tree);
  }
  if (!r.at_end())
    throw ValidationError("MalformedHeader: " + path + ": trailing content");
  return out;
}

// ---- index binary format ---------------------------------------------------

void append_hc_node_bin(std::string& out, const HcNode& node) {
  put_u64(out, node.train_count);
  put_u32(out, static_cast<std::uint32_t>(node.children.size()));
  for (float v : node.centroid) put_f32(out, v);
  for (const HcNode& child : node.children) append_hc_node_bin(out, child);
}

HcNode read_hc_node_bin(ByteReader& r, std::uint32_t depth_left,
                        std::uint32_t branching, std::uint32_t dim,
                        const std::string& path) {
  HcNode node;
  node.train_count = r.u64();
  std::uint32_t n_children = r.u32();
  if (depth_left == 0) {
    if (n_children != 0)
      throw ValidationError("MalformedHeader: " + path + ": leaf with children");
  } else if (n_children < 1 || n_children > branching) {
    throw ValidationError("MalformedHeader: " + path + ": bad child count " +
                          std::to_string(n_children));
  }
  node.centroid.resize(dim);
  for (std::uint32_t j = 0; j < dim; ++j) node.centroid[j] = r.f32();
  node.children.reserve(n_children);
  for (std::uint32_t i = 0; i < n_children; ++i)
    node.children.push_back(
        read_hc_node_bin(r, depth_left - 1, branching, dim, path));
  return node;
}

LoadedIndex read_index_bin(const std::string& path) {
  ByteReader r(path, slurp(path));
  r.expect_magic(kIndexMagic, "semid index");
  std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw ValidationError("MalformedHeader: " + path +
                          ": unsupported version " + std::to_string(version));
  std::uint8_t kind = r.u8();
  std::uint32_t levels = r.u32();
  std::uint32_t width = r.u32();  // codebook size or branching
  std::uint32_t dim = r.u32();
  TrainMeta meta;
  meta.seed = r.u64();
  meta.max_iters = r.u32();
  meta.tol = r.f64();
  meta.normalize = r.u8() != 0;
  if (levels == 0)
    throw ValidationError("MalformedHeader: " + path + ": levels is 0");
  if (dim == 0)
    throw ValidationError("MalformedHeader: " + path + ": dim is 0");

  LoadedIndex out;
  if (kind == 0) {
    CodebookStack stack;
    stack.dim = dim;
    stack.meta = meta;
    for (std::uint32_t l = 1; l <= levels; ++l) {
      std::uint32_t size = r.u32();
      if (size == 0)
        throw ValidationError("MalformedHeader: " + path + ": level size 0");
      Codebook cb;
      cb.level = l;
      cb.dim = dim;
      cb.centroids.resize(static_cast<std::size_t>(size) * dim);
      for (float& v : cb.centroids) v = r.f32();
      stack.levels.push_back(std::move(cb));
    }
    out.stack = std::move(stack);
  } else if (kind == 1) {
    if (width < 2)
      throw ValidationError("MalformedHeader: " + path + ": branching < 2");
    HcTree tree;
    tree.depth = levels;
    tree.branching = width;
    tree.dim = dim;
    tree.meta = meta;
    tree.root = read_hc_node_bin(r, levels, width, dim, path);
    out.tree = std::move(tree);
  } else {
    throw ValidationError("MalformedHeader: " + path + ": unknown kind " +
                          std::to_string(kind));
  }
  r.expect_end();
  return out;
}

}  // namespace

EmbeddingSet read_embeddings(const std::string& path, EmbeddingFormat format) {
  if (format == EmbeddingFormat::Auto) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    char magic[6] = {};
    in.read(magic, 6);
    format = (in.gcount() == 6 && std::memcmp(magic, kEmbeddingMagic, 6) == 0)
                 ? EmbeddingFormat::Bin
                 : EmbeddingFormat::Lines;
  }
  EmbeddingSet set = format == EmbeddingFormat::Bin
                         ? read_embeddings_bin(path)
                         : read_embeddings_lines(path);
  set.validate();
  return set;
}

void write_embeddings(const EmbeddingSet& set, const std::string& path,
                      EmbeddingFormat format, const std::string& comment) {
  set.validate();
  std::string out;
  if (format == EmbeddingFormat::Bin || format == EmbeddingFormat::Auto) {
    out.reserve(18 + set.data.size() * 4 + set.keys.size() * 10);
    out.append(kEmbeddingMagic, 6);
    put_u32(out, kFormatVersion);
    put_u64(out, set.size());
    put_u32(out, set.dim);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const std::string& key = set.keys[i];
      if (key.size() > 0xffff)
        throw ValidationError("key '" + key.substr(0, 32) + "...' too long");
      put_u16(out, static_cast<std::uint16_t>(key.size()));
      out += key;
      for (float v : set.vec(i)) put_f32(out, v);
    }
  } else {
    if (!comment.empty()) out += "# " + comment + "\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
      out += set.keys[i];
      out += '\t';
      std::span<const float> v = set.vec(i);
      for (std::uint32_t j = 0; j < set.dim; ++j) {
        if (j) out += ',';
        out += fmt_f32(v[j]);
      }
      out += '\n';
    }
  }
  spill(path, out);
}

void write_index(const CodebookStack& stack, const std::string& path,
                 IndexFormat format) {
  if (stack.num_levels() == 0)
    throw ValidationError("write_index: stack has no levels");
  std::string out;
  if (format == IndexFormat::Text) {
    out += "# semid-index\n";
    out += "kind\trq\n";
    out += "version\t" + std::to_string(kFormatVersion) + "\n";
    out += "levels\t" + std::to_string(stack.num_levels()) + "\n";
    out += "dim\t" + std::to_string(stack.dim) + "\n";
    append_meta(out, stack.meta);
    for (const Codebook& cb : stack.levels) {
      out += "level\t" + std::to_string(cb.level) + "\t" +
             std::to_string(cb.size()) + "\n";
      for (std::uint32_t c = 0; c < cb.size(); ++c)
        append_row(out, cb.centroid(c));
    }
  } else {
    out.append(kIndexMagic, 6);
    put_u32(out, kFormatVersion);
    out.push_back(0);  // kind: rq
    put_u32(out, stack.num_levels());
    put_u32(out, stack.levels.empty() ? 0 : stack.levels.front().size());
    put_u32(out, stack.dim);
    put_u64(out, stack.meta.seed);
    put_u32(out, stack.meta.max_iters);
    put_f64(out, stack.meta.tol);
    out.push_back(stack.meta.normalize ? 1 : 0);
    for (const Codebook& cb : stack.levels) {
      put_u32(out, cb.size());
      for (float v : cb.centroids) put_f32(out, v);
    }
  }
  spill(path, out);
}

void write_index(const HcTree& tree, const std::string& path,
                 IndexFormat format) {
  if (tree.depth == 0) throw ValidationError("write_index: tree has depth 0");
  std::string out;
  if (format == IndexFormat::Text) {
    out += "# semid-index\n";
    out += "kind\thc\n";
    out += "version\t" + std::to_string(kFormatVersion) + "\n";
    out += "depth\t" + std::to_string(tree.depth) + "\n";
    out += "branching\t" + std::to_string(tree.branching) + "\n";
    out += "dim\t" + std::to_string(tree.dim) + "\n";
    append_meta(out, tree.meta);
    append_hc_node_text(out, tree.root, 0);
  } else {
    out.append(kIndexMagic, 6);
    put_u32(out, kFormatVersion);
    out.push_back(1);  // kind: hc
    put_u32(out, tree.depth);
    put_u32(out, tree.branching);
    put_u32(out, tree.dim);
    put_u64(out, tree.meta.seed);
    put_u32(out, tree.meta.max_iters);
    put_f64(out, tree.meta.tol);
    out.push_back(tree.meta.normalize ? 1 : 0);
    append_hc_node_bin(out, tree.root);
  }
  spill(path, out);
}

LoadedIndex read_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  char magic[6] = {};
  in.read(magic, 6);
  in.close();
  if (std::memcmp(magic, kIndexMagic, 6) == 0) return read_index_bin(path);
  return read_index_text(path);
}

EmbeddingSet gen_synthetic(std::size_t n, std::uint32_t dim,
                           std::uint32_t clusters, double spread,
                           std::uint64_t seed) {
  if (n == 0) throw ValidationError("gen_synthetic: n must be >= 1");
  if (dim == 0) throw ValidationError("gen_synthetic: dim must be >= 1");
  if (clusters == 0)
    throw ValidationError("gen_synthetic: clusters must be >= 1");
  if (!(spread >= 1e-18 && spread <= 1e18))
    throw ValidationError("gen_synthetic: spread out of range (1e-18, 1e18)");

  Rng rng(seed);
  std::vector<double> means(static_cast<std::size_t>(clusters) * dim);
  for (std::uint32_t c = 0; c < clusters; ++c) {
    double* mean = means.data() + static_cast<std::size_t>(c) * dim;
    double norm2 = 0.0;
    for (std::uint32_t j = 0; j < dim; ++j) {
      mean[j] = rng.normal();
      norm2 += mean[j] * mean[j];
    }
    double scale = norm2 > 0.0 ? 1.0 / (std::sqrt(norm2) * spread) : 0.0;
    for (std::uint32_t j = 0; j < dim; ++j) mean[j] *= scale;
  }

  EmbeddingSet set;
  set.dim = dim;
  set.keys.reserve(n);
  set.data.reserve(n * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = static_cast<std::size_t>(rng.uniform_below(clusters));
    const double* mean = means.data() + c * dim;
    for (std::uint32_t j = 0; j < dim; ++j)
      set.data.push_back(static_cast<float>(mean[j] + spread * rng.normal()));
    set.keys.push_back("e" + std::to_string(i));
  }
  set.validate();
  return set;
}

void write_idmap(const std::string& path, const AssignReport& report,
                 const std::vector<std::pair<std::string, std::string>>& meta) {
  const bool with_suffix = report.strategy == Strategy::Suffix;
  std::string out = "# semid-idmap\tstrategy=" + strategy_name(report.strategy);
  for (const auto& [key, value] : meta) out += "\t" + key + "=" + value;
  out += "\n";
  out += with_suffix ? "key\tid\tsuffix\tranks\tscore\n"
                     : "key\tid\tranks\tscore\n";
  for (std::size_t i = 0; i < report.size(); ++i) {
    out += report.keys[i];
    out += '\t';
    out += to_string(report.ids[i]);
    if (with_suffix) {
      out += '\t';
      out += std::to_string(report.suffixes[i]);
    }
    out += '\t';
    const std::vector<std::uint32_t>& ranks = report.chosen_ranks[i];
    for (std::size_t l = 0; l < ranks.size(); ++l) {
      if (l) out += ',';
      out += std::to_string(ranks[l]);
    }
    out += '\t';
    out += fmt_f64(report.scores[i]);
    out += '\n';
  }
  spill(path, out);
}

IdMap read_idmap(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty())
    throw ValidationError("MalformedHeader: " + path + ": empty file");

  IdMap map;
  std::size_t li = 0;
  {
    std::vector<std::string_view> parts = split(lines[li], '\t');
    if (parts.empty() || parts[0] != "# semid-idmap")
      throw ValidationError("MalformedHeader: " + path +
                            ": missing '# semid-idmap' header");
    for (std::size_t i = 1; i < parts.size(); ++i) {
      std::size_t eq = parts[i].find('=');
      if (eq == std::string_view::npos)
        throw ValidationError("MalformedHeader: " + path +
                              ": bad meta entry '" + std::string(parts[i]) +
                              "'");
      map.meta[std::string(parts[i].substr(0, eq))] =
          std::string(parts[i].substr(eq + 1));
    }
    ++li;
  }
  auto strategy_it = map.meta.find("strategy");
  if (strategy_it == map.meta.end())
    throw ValidationError("MalformedHeader: " + path +
                          ": header lacks strategy");
  map.report.strategy = strategy_from_name(strategy_it->second);

  if (li >= lines.size())
    throw ValidationError("MalformedHeader: " + path + ": missing column row");
  const bool with_suffix = lines[li] == "key\tid\tsuffix\tranks\tscore";
  if (!with_suffix && lines[li] != "key\tid\tranks\tscore")
    throw ValidationError("MalformedHeader: " + path + ":" +
                          std::to_string(li + 1) + ": bad column row");
  ++li;

  const std::size_t expect_cols = with_suffix ? 5 : 4;
  for (; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string where = path + ":" + std::to_string(li + 1);
    std::vector<std::string_view> parts = split(lines[li], '\t');
    if (parts.size() != expect_cols)
      throw ValidationError("MalformedHeader: " + where + ": expected " +
                            std::to_string(expect_cols) + " columns");
    std::size_t col = 0;
    map.report.keys.emplace_back(parts[col++]);
    SemanticId id;
    for (std::string_view tok : split(parts[col++], ' '))
      id.tokens.push_back(static_cast<std::uint32_t>(parse_u64(tok, where)));
    map.report.ids.push_back(std::move(id));
    if (with_suffix)
      map.report.suffixes.push_back(
          static_cast<std::uint32_t>(parse_u64(parts[col++], where)));
    std::vector<std::uint32_t> ranks;
    for (std::string_view rank : split(parts[col++], ','))
      ranks.push_back(static_cast<std::uint32_t>(parse_u64(rank, where)));
    map.report.chosen_ranks.push_back(std::move(ranks));
    map.report.scores.push_back(parse_double(parts[col++], where));
  }
  return map;
}

}  // namespace semid
