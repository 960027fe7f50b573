#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "etg/error.hpp"
#include "etg/table.hpp"

namespace etg {

// ---------------------------------------------------------------------------
// RFC 4180-style CSV: configurable single-character delimiter, fields quoted
// with '"', embedded quotes escaped as "", quoted fields may span lines.
// ---------------------------------------------------------------------------

class CsvReader {
 public:
  CsvReader(std::istream& in, char delimiter = ',') : in_(in), delimiter_(delimiter) {}

  /// Reads one record into `fields`. Returns false at end of input.
  /// Records end at LF or CRLF; CR and LF inside quotes are data.
  bool next_record(std::vector<std::string>& fields) {
    fields.clear();
    int ch = in_.get();
    if (ch == EOF) return false;

    std::string field;
    bool quoted = false;
    bool any = false;
    while (true) {
      if (ch == EOF) {
        if (quoted) throw_data("unterminated quoted field at end of input");
        fields.push_back(std::move(field));
        return true;
      }
      const char c = static_cast<char>(ch);
      if (quoted) {
        if (c == '"') {
          const int next = in_.peek();
          if (next == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"' && field.empty() && !any) {
        quoted = true;
      } else if (c == delimiter_) {
        fields.push_back(std::move(field));
        field.clear();
        any = false;
        ch = in_.get();
        continue;
      } else if (c == '\n') {
        fields.push_back(std::move(field));
        return true;
      } else if (c == '\r' && in_.peek() == '\n') {
        in_.get();
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(c);
        any = true;
      }
      ch = in_.get();
    }
  }

 private:
  std::istream& in_;
  char delimiter_;
};

namespace detail {

inline std::string_view trim_ascii(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses a decimal/scientific numeric token, accepting "inf", "-inf",
/// "infinity" and "nan" case-insensitively (also with a leading '+').
/// Returns nullopt if the token is not numeric.
inline std::optional<double> parse_numeric_token(std::string_view raw) {
  std::string_view s = detail::trim_ascii(raw);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

struct CsvOptions {
  char delimiter = ',';
  std::optional<std::size_t> max_rows;          // row cap for desk-scale runs
  std::vector<std::string> include_columns;     // empty = all
  std::vector<std::string> exclude_columns;
};

/// Decides each column's kind: numeric iff every non-empty cell parses as a
/// number (finite or not); otherwise categorical. The label column is always
/// categorical. Deterministic and independent of row order.
inline std::vector<ColumnSchema> infer_schema(const RawTable& table) {
  std::vector<ColumnSchema> out;
  out.reserve(table.column_count());
  const auto label = table.label_column();
  for (std::size_t i = 0; i < table.column_count(); ++i) {
    const Column& c = table.column(i);
    ColumnKind kind;
    if (label && c.name == *label) {
      kind = ColumnKind::categorical;
    } else if (c.kind == ColumnKind::numeric) {
      kind = ColumnKind::numeric;
    } else {
      kind = ColumnKind::numeric;
      for (const std::string& cell : c.text) {
        if (detail::trim_ascii(cell).empty()) continue;
        if (!parse_numeric_token(cell)) {
          kind = ColumnKind::categorical;
          break;
        }
      }
    }
    out.push_back({c.name, kind, i});
  }
  return out;
}

namespace detail {

/// Converts text columns to typed storage per the given schema. Empty cells
/// in numeric columns become missing.
inline RawTable apply_schema(const RawTable& table, const std::vector<ColumnSchema>& schema) {
  std::vector<Column> cols;
  cols.reserve(table.column_count());
  for (std::size_t i = 0; i < table.column_count(); ++i) {
    const Column& c = table.column(i);
    const ColumnKind kind = schema[i].kind;
    if (kind == ColumnKind::categorical || c.kind == ColumnKind::numeric) {
      Column copy = c;
      cols.push_back(std::move(copy));
      continue;
    }
    Column out;
    out.name = c.name;
    out.kind = ColumnKind::numeric;
    out.numeric.reserve(c.text.size());
    out.missing.reserve(c.text.size());
    for (std::size_t r = 0; r < c.text.size(); ++r) {
      if (trim_ascii(c.text[r]).empty()) {
        out.numeric.push_back(0.0);
        out.missing.push_back(1);
      } else {
        const auto v = parse_numeric_token(c.text[r]);
        if (!v) {
          throw_data("column '" + c.name + "' row " + std::to_string(r + 1) +
                     ": cannot parse '" + c.text[r] + "' as a number");
        }
        out.numeric.push_back(*v);
        out.missing.push_back(0);
      }
    }
    cols.push_back(std::move(out));
  }
  return RawTable::from_columns(std::move(cols), table.label_column());
}

inline std::vector<std::size_t> select_header_columns(const std::vector<std::string>& header,
                                                      const std::optional<std::string>& label,
                                                      const CsvOptions& opts) {
  std::unordered_set<std::string> include(opts.include_columns.begin(),
                                          opts.include_columns.end());
  std::unordered_set<std::string> exclude(opts.exclude_columns.begin(),
                                          opts.exclude_columns.end());
  for (const std::string& name : include) {
    bool found = false;
    for (const std::string& h : header) found = found || h == name;
    if (!found) throw_data("included column '" + name + "' not present in header");
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    const bool is_label = label && name == *label;
    if (!is_label) {
      if (!include.empty() && !include.count(name)) continue;
      if (exclude.count(name)) continue;
    }
    kept.push_back(i);
  }
  return kept;
}

}  // namespace detail

/// Loads a CSV file into a typed RawTable. The first record is the header.
/// Column kinds come from infer_schema unless `expected_schema` pins them
/// (evaluate/predict type columns to match a trained model).
inline RawTable load_csv(const std::string& path, std::optional<std::string> label_column,
                         const CsvOptions& opts = {},
                         const std::vector<ColumnSchema>* expected_schema = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open '" + path + "' for reading");
  CsvReader reader(in, opts.delimiter);

  std::vector<std::string> header;
  if (!reader.next_record(header)) throw_data("'" + path + "' is empty (no header row)");
  {
    std::unordered_set<std::string> seen;
    for (const std::string& h : header) {
      if (!seen.insert(h).second) throw_data("duplicate column '" + h + "' in header");
    }
  }
  if (label_column) {
    bool found = false;
    for (const std::string& h : header) found = found || h == *label_column;
    if (!found) throw_data("label column '" + *label_column + "' not found in header");
  }

  const std::vector<std::size_t> kept = detail::select_header_columns(header, label_column, opts);

  std::vector<Column> cols(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    cols[i].name = header[kept[i]];
    cols[i].kind = ColumnKind::categorical;
  }

  std::vector<std::string> record;
  std::size_t row = 0;
  while (reader.next_record(record)) {
    if (record.size() == 1 && record[0].empty()) continue;  // blank line
    ++row;
    if (record.size() != header.size()) {
      throw_data("'" + path + "' row " + std::to_string(row) + ": expected " +
                 std::to_string(header.size()) + " cells, got " + std::to_string(record.size()));
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
      cols[i].text.push_back(std::move(record[kept[i]]));
    }
    if (opts.max_rows && row >= *opts.max_rows) break;
  }

  RawTable text_table = RawTable::from_columns(std::move(cols), std::move(label_column));

  std::vector<ColumnSchema> schema;
  if (expected_schema) {
    schema.reserve(text_table.column_count());
    for (std::size_t i = 0; i < text_table.column_count(); ++i) {
      const std::string& name = text_table.column(i).name;
      bool found = false;
      for (const ColumnSchema& s : *expected_schema) {
        if (s.name == name) {
          schema.push_back({name, s.kind, i});
          found = true;
          break;
        }
      }
      if (!found) schema.push_back({name, ColumnKind::categorical, i});
    }
  } else {
    schema = infer_schema(text_table);
  }
  return detail::apply_schema(text_table, schema);
}

namespace detail {

inline bool needs_quoting(std::string_view field, char delimiter) {
  for (const char c : field) {
    if (c == delimiter || c == '"' || c == '\n' || c == '\r') return true;
  }
  return false;
}

inline void write_field(std::ostream& out, std::string_view field, char delimiter) {
  if (!needs_quoting(field, delimiter)) {
    out << field;
    return;
  }
  out << '"';
  for (const char c : field) {
    if (c == '"') out << "\"\"";
    else out << c;
  }
  out << '"';
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace detail

inline void write_csv(const RawTable& table, std::ostream& out, char delimiter = ',') {
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    if (c) out << delimiter;
    detail::write_field(out, table.column(c).name, delimiter);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < table.column_count(); ++c) {
      if (c) out << delimiter;
      const Column& col = table.column(c);
      if (col.kind == ColumnKind::numeric) {
        if (!col.missing[r]) out << detail::format_double(col.numeric[r]);
      } else {
        detail::write_field(out, col.text[r], delimiter);
      }
    }
    out << '\n';
  }
}

inline void write_csv(const RawTable& table, const std::string& path, char delimiter = ',') {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  write_csv(table, out, delimiter);
  if (!out) throw_io("failed writing '" + path + "'");
}

}  // namespace etg
