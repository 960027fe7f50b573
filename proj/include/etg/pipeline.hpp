#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "etg/csv.hpp"
#include "etg/ensemble.hpp"
#include "etg/error.hpp"
#include "etg/metrics.hpp"
#include "etg/model_io.hpp"
#include "etg/preprocess.hpp"
#include "etg/table.hpp"
#include "etg/tree.hpp"

// End-to-end drivers shared by the CLI and the test suites: load -> clean ->
// split -> fit transforms on the training rows only -> encode -> train, and
// the matching evaluate/predict paths that replay a model's stored
// preprocessing.

namespace etg {

namespace detail {

/// Feature columns in table order: every column except the label.
inline std::vector<std::string> feature_names_of(const RawTable& table) {
  std::vector<std::string> names;
  const auto label = table.label_column();
  for (const Column& c : table.columns()) {
    if (label && c.name == *label) continue;
    names.push_back(c.name);
  }
  return names;
}

}  // namespace detail

/// Encoded table -> column-major matrix over the named feature columns, plus
/// encoded labels when a label column is present. Missing or non-finite
/// feature cells are data errors naming the row and column.
struct EncodedData {
  Matrix X;
  std::vector<std::int32_t> y;  // empty when the table has no label column
};

inline EncodedData table_to_matrix(const RawTable& table,
                                   const std::vector<std::string>& feature_names,
                                   bool require_label) {
  EncodedData out;
  out.X = Matrix(table.row_count(), feature_names.size());
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    const auto idx = table.find_column(feature_names[f]);
    if (!idx) throw_data("missing feature column '" + feature_names[f] + "'");
    const Column& c = table.column(*idx);
    if (c.kind != ColumnKind::numeric) {
      throw_data("feature column '" + c.name + "' is not numeric after encoding");
    }
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      if (c.missing[r] || !std::isfinite(c.numeric[r])) {
        throw_data("column '" + c.name + "' row " + std::to_string(r + 1) +
                   ": missing or non-finite value");
      }
      out.X.at(r, f) = c.numeric[r];
    }
  }
  if (require_label) {
    const auto label_idx = table.label_index();
    if (!label_idx) throw_data("table has no label column");
    const Column& c = table.column(*label_idx);
    out.y.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      out.y.push_back(static_cast<std::int32_t>(c.numeric[r]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Train.
// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string input_path;
  std::string label_column;
  CsvOptions csv;
  double train_fraction = 0.7;
  bool stratified = false;
  EnsembleParams params;
  unsigned threads = 1;
};

struct TrainResult {
  ExtraTreesModel model;
  CleanReport clean_report;
  std::size_t rows_loaded = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double wall_time_ms = 0.0;
};

inline TrainResult train_pipeline(const TrainOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;

  const RawTable raw = load_csv(opts.input_path, opts.label_column, opts.csv);
  result.rows_loaded = raw.row_count();

  auto [cleaned, clean_report] = clean(raw);
  result.clean_report = clean_report;
  if (cleaned.row_count() < 2) {
    throw_data("fewer than 2 rows remain after cleaning; nothing to train on");
  }

  SplitSpec split;
  if (opts.stratified) {
    const Column& label = cleaned.column(*cleaned.label_index());
    split = stratified_split(label.text, opts.train_fraction, opts.params.seed);
  } else {
    split = train_test_split(cleaned.row_count(), opts.train_fraction, opts.params.seed);
  }
  if (split.train_indices.empty()) throw_data("training split is empty");
  result.train_rows = split.train_indices.size();
  result.test_rows = split.test_indices.size();

  const Standardizer standardizer = fit_standardizer(cleaned, split.train_indices);
  const CategoryEncoder encoder = fit_encoder(cleaned, split.train_indices);
  const RawTable encoded = apply_encoder(encoder, apply_standardizer(standardizer, cleaned));

  const std::vector<std::string> feature_names = detail::feature_names_of(encoded);
  const EncodedData all = table_to_matrix(encoded, feature_names, /*require_label=*/true);

  Matrix X_train(split.train_indices.size(), feature_names.size());
  std::vector<std::int32_t> y_train(split.train_indices.size());
  for (std::size_t i = 0; i < split.train_indices.size(); ++i) {
    const std::size_t r = split.train_indices[i];
    for (std::size_t c = 0; c < feature_names.size(); ++c) X_train.at(i, c) = all.X.at(r, c);
    y_train[i] = all.y[r];
  }

  const auto* label_vocab = encoder.find(opts.label_column);
  if (!label_vocab) throw_data("label column '" + opts.label_column + "' has no vocabulary");
  result.model = fit(X_train, y_train, opts.params, label_vocab->vocabulary, feature_names,
                     opts.threads);
  result.model.preprocess = PreprocessModel{standardizer, encoder, opts.label_column,
                                            opts.train_fraction, opts.params.seed,
                                            opts.stratified};

  result.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

// ---------------------------------------------------------------------------
// Evaluate / predict.
// ---------------------------------------------------------------------------

/// Which rows of the (cleaned) evaluation table to score. `test` and `train`
/// replay the split stored in the model, which reproduces the training-time
/// holdout when given the same input file.
enum class RowSelection : std::uint8_t { all, test, train };

namespace detail {

/// Expected column kinds under a trained model: standardized columns are
/// numeric, encoded columns categorical.
inline std::vector<ColumnSchema> model_schema(const ExtraTreesModel& model) {
  std::vector<ColumnSchema> schema;
  std::size_t i = 0;
  for (const auto& c : model.preprocess.standardizer.columns) {
    schema.push_back({c.name, ColumnKind::numeric, i++});
  }
  for (const auto& c : model.preprocess.encoder.columns) {
    schema.push_back({c.name, ColumnKind::categorical, i++});
  }
  return schema;
}

inline void check_feature_columns(const ExtraTreesModel& model, const RawTable& table) {
  for (const std::string& name : model.feature_names) {
    if (!table.find_column(name)) {
      throw_data("input is missing model feature column '" + name + "'");
    }
  }
}

/// Keeps exactly the model's columns (features, plus the label when asked),
/// dropping extras the model never saw. This reproduces the training-time
/// table, so replayed splits line up row for row.
inline RawTable project_to_model(const ExtraTreesModel& model, const RawTable& table,
                                 bool with_label) {
  std::vector<Column> cols;
  cols.reserve(model.feature_names.size() + 1);
  for (const std::string& name : model.feature_names) {
    cols.push_back(table.column(*table.find_column(name)));
  }
  std::optional<std::string> label;
  if (with_label) {
    label = model.preprocess.label_column;
    cols.push_back(table.column(*table.find_column(*label)));
  }
  return RawTable::from_columns(std::move(cols), std::move(label));
}

}  // namespace detail

struct EvaluateResult {
  MetricsReport metrics;
  CleanReport clean_report;
  std::size_t rows_loaded = 0;
  std::size_t rows_evaluated = 0;
};

inline EvaluateResult evaluate_pipeline(const ExtraTreesModel& model, const std::string& input,
                                        RowSelection rows = RowSelection::all,
                                        const CsvOptions& csv = {}, unsigned threads = 1,
                                        Averaging averaging = Averaging::weighted) {
  const std::vector<ColumnSchema> schema = detail::model_schema(model);
  const RawTable loaded = load_csv(input, model.preprocess.label_column, csv, &schema);
  detail::check_feature_columns(model, loaded);
  const RawTable raw = detail::project_to_model(model, loaded, /*with_label=*/true);

  EvaluateResult result;
  result.rows_loaded = raw.row_count();
  auto [cleaned, clean_report] = clean(raw);
  result.clean_report = clean_report;
  if (cleaned.row_count() == 0) throw_data("no rows remain after cleaning");

  RawTable selected = std::move(cleaned);
  if (rows != RowSelection::all) {
    if (selected.row_count() < 2) throw_data("too few rows to replay the stored split");
    SplitSpec split;
    if (model.preprocess.stratified) {
      const Column& label = selected.column(*selected.label_index());
      split = stratified_split(label.text, model.preprocess.split_fraction,
                               model.preprocess.split_seed);
    } else {
      split = train_test_split(selected.row_count(), model.preprocess.split_fraction,
                               model.preprocess.split_seed);
    }
    selected = selected.select_rows(rows == RowSelection::test ? split.test_indices
                                                               : split.train_indices);
  }
  if (selected.row_count() == 0) throw_data("selected row set is empty");
  result.rows_evaluated = selected.row_count();

  const RawTable encoded =
      apply_encoder(model.preprocess.encoder, apply_standardizer(model.preprocess.standardizer,
                                                                 selected));
  const EncodedData data = table_to_matrix(encoded, model.feature_names, /*require_label=*/true);

  const BatchPrediction pred = predict_rows(model, data.X, threads);
  result.metrics = full_report(data.y, pred.labels, pred.shares, model.class_vocabulary,
                               averaging);
  return result;
}

struct PredictResult {
  std::vector<std::string> predicted_class;  // decoded names
  std::vector<double> confidence;            // vote share of the predicted class
};

/// Scores an unlabeled CSV: one output row per input row, no cleaning.
/// Missing or non-finite feature values are data errors.
inline PredictResult predict_pipeline(const ExtraTreesModel& model, const std::string& input,
                                      const CsvOptions& csv = {}, unsigned threads = 1) {
  const std::vector<ColumnSchema> schema = detail::model_schema(model);
  const RawTable loaded = load_csv(input, std::nullopt, csv, &schema);
  detail::check_feature_columns(model, loaded);
  const RawTable raw = detail::project_to_model(model, loaded, /*with_label=*/false);

  RawTable encoded = apply_standardizer(model.preprocess.standardizer, raw);
  // Encode feature columns only; the label vocabulary goes unused here.
  CategoryEncoder feature_encoder;
  for (const auto& c : model.preprocess.encoder.columns) {
    if (c.name != model.preprocess.label_column) feature_encoder.columns.push_back(c);
  }
  encoded = apply_encoder(feature_encoder, encoded);

  const EncodedData data = table_to_matrix(encoded, model.feature_names, /*require_label=*/false);
  const BatchPrediction pred = predict_rows(model, data.X, threads);

  PredictResult result;
  result.predicted_class.reserve(pred.labels.size());
  result.confidence.reserve(pred.labels.size());
  for (std::size_t r = 0; r < pred.labels.size(); ++r) {
    const auto code = static_cast<std::size_t>(pred.labels[r]);
    result.predicted_class.push_back(model.class_vocabulary[code]);
    result.confidence.push_back(pred.shares.at(r, code));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Grid search over cleaned, encoded data.
// ---------------------------------------------------------------------------

struct GridSearchPipelineResult {
  GridSearchOutcome outcome;
  CleanReport clean_report;
  std::size_t rows_loaded = 0;
};

inline GridSearchPipelineResult gridsearch_pipeline(const TrainOptions& opts,
                                                    const std::vector<EnsembleParams>& grid,
                                                    double validation_fraction) {
  const RawTable raw = load_csv(opts.input_path, opts.label_column, opts.csv);
  GridSearchPipelineResult result;
  result.rows_loaded = raw.row_count();

  auto [cleaned, clean_report] = clean(raw);
  result.clean_report = clean_report;
  if (cleaned.row_count() < 2) throw_data("fewer than 2 rows remain after cleaning");

  // Tree splits are order statistics, so fitting the transforms on all rows
  // here cannot leak information into the validation accuracies.
  std::vector<std::size_t> all_rows(cleaned.row_count());
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  const Standardizer standardizer = fit_standardizer(cleaned, all_rows);
  const CategoryEncoder encoder = fit_encoder(cleaned, all_rows);
  const RawTable encoded = apply_encoder(encoder, apply_standardizer(standardizer, cleaned));

  const std::vector<std::string> feature_names = detail::feature_names_of(encoded);
  const EncodedData data = table_to_matrix(encoded, feature_names, /*require_label=*/true);

  result.outcome = grid_search(data.X, data.y, grid, validation_fraction, opts.params.seed,
                               opts.threads);
  return result;
}

}  // namespace etg
