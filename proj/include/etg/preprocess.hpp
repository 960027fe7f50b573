#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "etg/error.hpp"
#include "etg/rng.hpp"
#include "etg/table.hpp"

namespace etg {

struct CleanReport {
  std::uint64_t duplicates_removed = 0;
  std::uint64_t nonfinite_cells_marked = 0;
  std::uint64_t rows_dropped_missing = 0;
  std::uint64_t rows_remaining = 0;
};

namespace detail {

// Row identity for dedup: bit patterns for numeric cells (so nan == nan and
// inf == inf), byte equality for text, computed before any transformation.
struct RowKeyHasher {
  const RawTable* table;

  std::size_t hash(std::size_t row) const {
    std::size_t h = 0x9E3779B97F4A7C15ull;
    for (const Column& c : table->columns()) {
      std::uint64_t v;
      if (c.kind == ColumnKind::numeric) {
        v = c.missing[row] ? 0x6d697373696e6721ull : std::bit_cast<std::uint64_t>(c.numeric[row]);
      } else {
        v = std::hash<std::string>{}(c.text[row]);
      }
      h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return h;
  }

  bool equal(std::size_t a, std::size_t b) const {
    for (const Column& c : table->columns()) {
      if (c.kind == ColumnKind::numeric) {
        if (c.missing[a] != c.missing[b]) return false;
        if (!c.missing[a] && std::bit_cast<std::uint64_t>(c.numeric[a]) !=
                                 std::bit_cast<std::uint64_t>(c.numeric[b])) {
          return false;
        }
      } else if (c.text[a] != c.text[b]) {
        return false;
      }
    }
    return true;
  }
};

}  // namespace detail

/// Cleaning pass, in order: (1) drop exact-duplicate rows keeping the first
/// occurrence; (2) mark every non-finite numeric cell as missing; (3) drop
/// every row containing a missing cell.
inline std::pair<RawTable, CleanReport> clean(const RawTable& table) {
  CleanReport report;
  const std::size_t n = table.row_count();

  detail::RowKeyHasher keys{&table};
  struct H {
    const detail::RowKeyHasher* k;
    std::size_t operator()(std::size_t r) const { return k->hash(r); }
  };
  struct E {
    const detail::RowKeyHasher* k;
    bool operator()(std::size_t a, std::size_t b) const { return k->equal(a, b); }
  };
  std::unordered_set<std::size_t, H, E> seen(0, H{&keys}, E{&keys});
  seen.reserve(n);

  std::vector<std::size_t> unique_rows;
  unique_rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (seen.insert(r).second) unique_rows.push_back(r);
    else ++report.duplicates_removed;
  }

  std::vector<std::size_t> kept;
  kept.reserve(unique_rows.size());
  for (std::size_t r : unique_rows) {
    bool row_missing = false;
    for (const Column& c : table.columns()) {
      if (c.kind != ColumnKind::numeric) continue;
      if (c.missing[r]) {
        row_missing = true;
      } else if (!std::isfinite(c.numeric[r])) {
        ++report.nonfinite_cells_marked;
        row_missing = true;
      }
    }
    if (row_missing) ++report.rows_dropped_missing;
    else kept.push_back(r);
  }

  report.rows_remaining = kept.size();
  return {table.select_rows(kept), report};
}

// ---------------------------------------------------------------------------
// Standardization: x' = (x - mean) / stddev, population stddev.
// ---------------------------------------------------------------------------

struct Standardizer {
  struct ColumnStats {
    std::string name;
    double mean = 0.0;
    double stddev = 0.0;  // population form, >= 0
  };
  std::vector<ColumnStats> columns;
  std::uint64_t fitted_on_rows = 0;
};

inline Standardizer fit_standardizer(const RawTable& table, std::span<const std::size_t> rows) {
  if (rows.empty()) throw_data("fit_standardizer: empty row set");
  Standardizer s;
  s.fitted_on_rows = rows.size();
  for (const Column& c : table.columns()) {
    if (c.kind != ColumnKind::numeric) continue;
    double sum = 0.0;
    for (std::size_t r : rows) {
      if (c.missing[r] || !std::isfinite(c.numeric[r])) {
        throw_data("fit_standardizer: column '" + c.name +
                   "' has a missing or non-finite value; clean the table first");
      }
      sum += c.numeric[r];
    }
    const double mean = sum / static_cast<double>(rows.size());
    double sq = 0.0;
    for (std::size_t r : rows) {
      const double d = c.numeric[r] - mean;
      sq += d * d;
    }
    const double var = sq / static_cast<double>(rows.size());
    s.columns.push_back({c.name, mean, std::sqrt(var)});
  }
  return s;
}

/// Applies (x - mean) / stddev to every fitted column. Columns with zero
/// stddev map to 0. Missing cells stay missing.
inline RawTable apply_standardizer(const Standardizer& s, const RawTable& table) {
  std::vector<Column> cols(table.columns().begin(), table.columns().end());
  for (const auto& stats : s.columns) {
    bool found = false;
    for (Column& c : cols) {
      if (c.name != stats.name) continue;
      if (c.kind != ColumnKind::numeric) {
        throw_data("apply_standardizer: column '" + c.name + "' is not numeric");
      }
      for (std::size_t r = 0; r < c.numeric.size(); ++r) {
        if (c.missing[r]) continue;
        c.numeric[r] = stats.stddev == 0.0 ? 0.0 : (c.numeric[r] - stats.mean) / stats.stddev;
      }
      found = true;
      break;
    }
    if (!found) throw_data("apply_standardizer: column '" + stats.name + "' not in table");
  }
  return RawTable::from_columns(std::move(cols), table.label_column());
}

// ---------------------------------------------------------------------------
// Categorical encoding: sorted distinct vocabulary -> integer codes.
// ---------------------------------------------------------------------------

struct CategoryEncoder {
  struct ColumnVocab {
    std::string name;
    std::vector<std::string> vocabulary;  // ascending lexicographic order

    /// Code of a value, or -1 if unseen.
    std::int64_t code_of(const std::string& value) const {
      const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), value);
      if (it == vocabulary.end() || *it != value) return -1;
      return it - vocabulary.begin();
    }
  };
  std::vector<ColumnVocab> columns;

  const ColumnVocab* find(const std::string& name) const {
    for (const auto& c : columns) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

inline CategoryEncoder fit_encoder(const RawTable& table, std::span<const std::size_t> rows) {
  if (rows.empty()) throw_data("fit_encoder: empty row set");
  CategoryEncoder enc;
  for (const Column& c : table.columns()) {
    if (c.kind != ColumnKind::categorical) continue;
    std::set<std::string> distinct;
    for (std::size_t r : rows) distinct.insert(c.text[r]);
    enc.columns.push_back({c.name, {distinct.begin(), distinct.end()}});
  }
  return enc;
}

/// Replaces every categorical cell with its integer code; the output table is
/// all numeric. Every categorical column must be covered by the encoder; an
/// unseen value is a hard error.
inline RawTable apply_encoder(const CategoryEncoder& enc, const RawTable& table) {
  std::vector<Column> cols;
  cols.reserve(table.column_count());
  for (const Column& c : table.columns()) {
    if (c.kind != ColumnKind::categorical) {
      cols.push_back(c);
      continue;
    }
    const auto* vocab = enc.find(c.name);
    if (!vocab) throw_data("apply_encoder: no vocabulary for column '" + c.name + "'");
    Column out;
    out.name = c.name;
    out.kind = ColumnKind::numeric;
    out.numeric.reserve(c.text.size());
    out.missing.assign(c.text.size(), 0);
    for (const std::string& v : c.text) {
      const std::int64_t code = vocab->code_of(v);
      if (code < 0) {
        throw_data("apply_encoder: column '" + c.name + "': unseen category '" + v + "'");
      }
      out.numeric.push_back(static_cast<double>(code));
    }
    cols.push_back(std::move(out));
  }
  return RawTable::from_columns(std::move(cols), table.label_column());
}

// ---------------------------------------------------------------------------
// Train/test split.
// ---------------------------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Uniformly random permutation of [0, row_count), determined entirely by
/// `seed`; the first floor(train_fraction * row_count) indices form the
/// training split.
inline SplitSpec train_test_split(std::size_t row_count, double train_fraction,
                                  std::uint64_t seed) {
  if (row_count < 2) throw_data("train_test_split: need at least 2 rows");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw_data("train_test_split: train fraction must be in (0, 1)");
  }
  std::vector<std::size_t> perm(row_count);
  for (std::size_t i = 0; i < row_count; ++i) perm[i] = i;
  rng::Engine eng(seed);
  rng::shuffle(perm, eng);

  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(row_count)));
  SplitSpec spec;
  spec.train_fraction = train_fraction;
  spec.seed = seed;
  spec.train_indices.assign(perm.begin(), perm.begin() + n_train);
  spec.test_indices.assign(perm.begin() + n_train, perm.end());
  return spec;
}

/// Optional stratified mode: splits each label group separately so class
/// proportions carry over. Train size is the sum of per-class floors.
inline SplitSpec stratified_split(std::span<const std::string> labels, double train_fraction,
                                  std::uint64_t seed) {
  if (labels.size() < 2) throw_data("stratified_split: need at least 2 rows");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw_data("stratified_split: train fraction must be in (0, 1)");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);

  SplitSpec spec;
  spec.train_fraction = train_fraction;
  spec.seed = seed;
  std::uint64_t group_rank = 0;
  for (auto& [value, rows] : groups) {
    rng::Engine eng(rng::derive_seed(seed, group_rank++));
    rng::shuffle(rows, eng);
    const auto n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(rows.size())));
    spec.train_indices.insert(spec.train_indices.end(), rows.begin(), rows.begin() + n_train);
    spec.test_indices.insert(spec.test_indices.end(), rows.begin() + n_train, rows.end());
  }
  return spec;
}

/// Fitted preprocessing state persisted inside the model container.
struct PreprocessModel {
  Standardizer standardizer;
  CategoryEncoder encoder;  // feature vocabularies plus the label vocabulary
  std::string label_column;
  double split_fraction = 0.7;
  std::uint64_t split_seed = 0;
  bool stratified = false;
};

}  // namespace etg
