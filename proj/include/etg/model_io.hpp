#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "etg/ensemble.hpp"
#include "etg/error.hpp"

// Model container (extension .etg), format version 1:
//
//   magic "ETGM" | u32 version | u64 payload_size | u32 crc32(payload) | payload
//
// The payload carries the preprocess model, class vocabulary, feature names,
// ensemble params and the preorder-serialized trees. Integers are fixed-width
// little-endian; doubles are IEEE-754 bit patterns. Identical models produce
// byte-identical files on every platform.

namespace etg {

inline constexpr std::array<char, 4> kModelMagic = {'E', 'T', 'G', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i) {
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const std::uint8_t* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    const std::uint8_t* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool exhausted() const { return pos_ == size_; }

 private:
  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > size_) throw_data("model file truncated");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline void write_tree(ByteWriter& w, const DecisionTree& t) {
  w.u64(t.seed);
  w.u32(static_cast<std::uint32_t>(t.depth));
  w.u32(static_cast<std::uint32_t>(t.leaf_count));
  w.u32(static_cast<std::uint32_t>(t.n_features));
  w.u32(static_cast<std::uint32_t>(t.n_classes));
  w.u32(static_cast<std::uint32_t>(t.nodes.size()));
  for (const TreeNode& n : t.nodes) {
    w.u8(n.is_leaf ? 1 : 0);
    if (n.is_leaf) {
      w.u32(n.predicted);
      for (std::size_t c = 0; c < t.n_classes; ++c) w.u64(n.class_counts[c]);
    } else {
      w.u32(n.feature);
      w.f64(n.threshold);
      w.u32(n.left);
      w.u32(n.right);
    }
  }
}

inline DecisionTree read_tree(ByteReader& r) {
  DecisionTree t;
  t.seed = r.u64();
  t.depth = r.u32();
  t.leaf_count = r.u32();
  t.n_features = r.u32();
  t.n_classes = r.u32();
  const std::uint32_t node_count = r.u32();
  t.nodes.resize(node_count);
  for (TreeNode& n : t.nodes) {
    n.is_leaf = r.u8() != 0;
    if (n.is_leaf) {
      n.predicted = r.u32();
      n.class_counts.resize(t.n_classes);
      for (std::size_t c = 0; c < t.n_classes; ++c) n.class_counts[c] = r.u64();
    } else {
      n.feature = r.u32();
      n.threshold = r.f64();
      n.left = r.u32();
      n.right = r.u32();
      if (n.left >= node_count || n.right >= node_count) throw_data("model file: bad child index");
    }
  }
  return t;
}

inline void write_tree_params(ByteWriter& w, const TreeParams& p) {
  w.u64(p.k_features);
  w.u8(p.max_depth ? 1 : 0);
  w.u64(p.max_depth.value_or(0));
  w.u64(p.min_samples_split);
  w.u64(p.min_samples_leaf);
  w.u8(static_cast<std::uint8_t>(p.splitter));
}

inline TreeParams read_tree_params(ByteReader& r) {
  TreeParams p;
  p.k_features = r.u64();
  const bool has_depth = r.u8() != 0;
  const std::uint64_t depth = r.u64();
  if (has_depth) p.max_depth = depth;
  p.min_samples_split = r.u64();
  p.min_samples_leaf = r.u64();
  p.splitter = static_cast<SplitterKind>(r.u8());
  return p;
}

inline void write_preprocess(ByteWriter& w, const PreprocessModel& p) {
  w.str(p.label_column);
  w.f64(p.split_fraction);
  w.u64(p.split_seed);
  w.u8(p.stratified ? 1 : 0);
  w.u64(p.standardizer.fitted_on_rows);
  w.u32(static_cast<std::uint32_t>(p.standardizer.columns.size()));
  for (const auto& c : p.standardizer.columns) {
    w.str(c.name);
    w.f64(c.mean);
    w.f64(c.stddev);
  }
  w.u32(static_cast<std::uint32_t>(p.encoder.columns.size()));
  for (const auto& c : p.encoder.columns) {
    w.str(c.name);
    w.u32(static_cast<std::uint32_t>(c.vocabulary.size()));
    for (const std::string& v : c.vocabulary) w.str(v);
  }
}

inline PreprocessModel read_preprocess(ByteReader& r) {
  PreprocessModel p;
  p.label_column = r.str();
  p.split_fraction = r.f64();
  p.split_seed = r.u64();
  p.stratified = r.u8() != 0;
  p.standardizer.fitted_on_rows = r.u64();
  const std::uint32_t n_std = r.u32();
  for (std::uint32_t i = 0; i < n_std; ++i) {
    Standardizer::ColumnStats c;
    c.name = r.str();
    c.mean = r.f64();
    c.stddev = r.f64();
    p.standardizer.columns.push_back(std::move(c));
  }
  const std::uint32_t n_enc = r.u32();
  for (std::uint32_t i = 0; i < n_enc; ++i) {
    CategoryEncoder::ColumnVocab c;
    c.name = r.str();
    const std::uint32_t n_vocab = r.u32();
    c.vocabulary.reserve(n_vocab);
    for (std::uint32_t j = 0; j < n_vocab; ++j) c.vocabulary.push_back(r.str());
    p.encoder.columns.push_back(std::move(c));
  }
  return p;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_model(const ExtraTreesModel& model) {
  detail::ByteWriter payload;
  detail::write_preprocess(payload, model.preprocess);
  payload.u32(static_cast<std::uint32_t>(model.class_vocabulary.size()));
  for (const std::string& s : model.class_vocabulary) payload.str(s);
  payload.u32(static_cast<std::uint32_t>(model.feature_names.size()));
  for (const std::string& s : model.feature_names) payload.str(s);
  payload.u64(model.params.n_trees);
  detail::write_tree_params(payload, model.params.tree);
  payload.u8(model.params.bootstrap ? 1 : 0);
  payload.u64(model.params.seed);
  payload.u32(static_cast<std::uint32_t>(model.trees.size()));
  for (const DecisionTree& t : model.trees) detail::write_tree(payload, t);

  detail::ByteWriter out;
  for (const char c : kModelMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u32(kModelVersion);
  out.u64(payload.bytes().size());
  out.u32(detail::crc32(payload.bytes().data(), payload.bytes().size()));
  std::vector<std::uint8_t> bytes = out.bytes();
  bytes.insert(bytes.end(), payload.bytes().begin(), payload.bytes().end());
  return bytes;
}

inline ExtraTreesModel deserialize_model(const std::uint8_t* data, std::size_t size) {
  detail::ByteReader header(data, size);
  for (const char c : kModelMagic) {
    if (header.u8() != static_cast<std::uint8_t>(c)) {
      throw_data("not a model file (bad magic bytes)");
    }
  }
  const std::uint32_t version = header.u32();
  if (version != kModelVersion) {
    throw_data("unsupported model version " + std::to_string(version) + " (this build reads " +
               std::to_string(kModelVersion) + ")");
  }
  const std::uint64_t payload_size = header.u64();
  const std::uint32_t expected_crc = header.u32();
  constexpr std::size_t header_size = 4 + 4 + 8 + 4;
  if (size - header_size != payload_size) throw_data("model file truncated");
  if (detail::crc32(data + header_size, payload_size) != expected_crc) {
    throw_data("model file corrupt (checksum mismatch)");
  }

  detail::ByteReader r(data + header_size, payload_size);
  ExtraTreesModel model;
  model.preprocess = detail::read_preprocess(r);
  const std::uint32_t n_classes = r.u32();
  for (std::uint32_t i = 0; i < n_classes; ++i) model.class_vocabulary.push_back(r.str());
  const std::uint32_t n_features = r.u32();
  for (std::uint32_t i = 0; i < n_features; ++i) model.feature_names.push_back(r.str());
  model.params.n_trees = r.u64();
  model.params.tree = detail::read_tree_params(r);
  model.params.bootstrap = r.u8() != 0;
  model.params.seed = r.u64();
  const std::uint32_t n_trees = r.u32();
  model.trees.reserve(n_trees);
  for (std::uint32_t i = 0; i < n_trees; ++i) model.trees.push_back(detail::read_tree(r));
  if (!r.exhausted()) throw_data("model file has trailing bytes");
  return model;
}

/// Writes `bytes` to `path` atomically: temp file in the same directory,
/// then rename. A failed run leaves no partial output behind.
inline void atomic_write_file(const std::string& path, const void* data, std::size_t size) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("cannot open '" + tmp.string() + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw_io("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw_io("cannot rename temporary file onto '" + path + "'");
  }
}

inline void atomic_write_file(const std::string& path, const std::string& text) {
  atomic_write_file(path, text.data(), text.size());
}

inline void save_model(const ExtraTreesModel& model, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize_model(model);
  atomic_write_file(path, bytes.data(), bytes.size());
}

inline ExtraTreesModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open model file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) throw_io("failed reading model file '" + path + "'");
  constexpr std::size_t header_size = 4 + 4 + 8 + 4;
  if (bytes.size() < header_size) throw_data("model file truncated");
  return deserialize_model(bytes.data(), bytes.size());
}

}  // namespace etg
