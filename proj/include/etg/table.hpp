#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "etg/error.hpp"

namespace etg {

enum class ColumnKind : std::uint8_t { numeric, categorical };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::size_t index = 0;
};

/// One column of a RawTable. Numeric columns store doubles plus a missing
/// mask (empty CSV cells); categorical columns store text. Exactly one of
/// the two storages is populated, matching `kind`.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::vector<double> numeric;
  std::vector<std::uint8_t> missing;  // parallel to `numeric`, 1 = missing
  std::vector<std::string> text;

  std::size_t size() const {
    return kind == ColumnKind::numeric ? numeric.size() : text.size();
  }
};

/// Rectangular typed table. Immutable once built; safe to share read-only.
class RawTable {
 public:
  RawTable() = default;

  static RawTable from_columns(std::vector<Column> columns,
                               std::optional<std::string> label_column = std::nullopt) {
    RawTable t;
    t.columns_ = std::move(columns);
    t.row_count_ = t.columns_.empty() ? 0 : t.columns_.front().size();
    t.label_column_ = std::move(label_column);
    t.validate();
    return t;
  }

  std::size_t row_count() const { return row_count_; }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_[i]; }

  const std::optional<std::string>& label_column() const { return label_column_; }

  std::optional<std::size_t> find_column(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> label_index() const {
    if (!label_column_) return std::nullopt;
    return find_column(*label_column_);
  }

  std::vector<ColumnSchema> schema() const {
    std::vector<ColumnSchema> out;
    out.reserve(columns_.size());
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      out.push_back({columns_[i].name, columns_[i].kind, i});
    }
    return out;
  }

  /// New table holding the given rows, in the given order.
  RawTable select_rows(std::span<const std::size_t> rows) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const Column& c : columns_) {
      Column out;
      out.name = c.name;
      out.kind = c.kind;
      if (c.kind == ColumnKind::numeric) {
        out.numeric.reserve(rows.size());
        out.missing.reserve(rows.size());
        for (std::size_t r : rows) {
          out.numeric.push_back(c.numeric[r]);
          out.missing.push_back(c.missing[r]);
        }
      } else {
        out.text.reserve(rows.size());
        for (std::size_t r : rows) out.text.push_back(c.text[r]);
      }
      cols.push_back(std::move(out));
    }
    return from_columns(std::move(cols), label_column_);
  }

 private:
  void validate() const {
    std::unordered_set<std::string> names;
    for (const Column& c : columns_) {
      if (!names.insert(c.name).second) {
        throw_data("duplicate column name '" + c.name + "'");
      }
      if (c.size() != row_count_) {
        throw_data("column '" + c.name + "' has " + std::to_string(c.size()) +
                   " rows, expected " + std::to_string(row_count_));
      }
      if (c.kind == ColumnKind::numeric && c.missing.size() != c.numeric.size()) {
        throw_data("column '" + c.name + "' missing-mask size mismatch");
      }
    }
    if (label_column_ && !find_column(*label_column_)) {
      throw_data("label column '" + *label_column_ + "' not present in table");
    }
  }

  std::vector<Column> columns_;
  std::size_t row_count_ = 0;
  std::optional<std::string> label_column_;
};

/// Dense column-major matrix of doubles. Column-major because tree induction
/// scans one feature at a time.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double at(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

  std::span<const double> col(std::size_t c) const {
    return std::span<const double>(data_.data() + c * rows_, rows_);
  }

  void gather_row(std::size_t r, std::span<double> out) const {
    for (std::size_t c = 0; c < cols_; ++c) out[c] = data_[c * rows_ + r];
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace etg
