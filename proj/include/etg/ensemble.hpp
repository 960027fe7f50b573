#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "etg/error.hpp"
#include "etg/parallel.hpp"
#include "etg/preprocess.hpp"
#include "etg/rng.hpp"
#include "etg/table.hpp"
#include "etg/tree.hpp"

namespace etg {

struct EnsembleParams {
  std::size_t n_trees = 100;
  TreeParams tree;
  bool bootstrap = true;
  std::uint64_t seed = 42;
};

struct ExtraTreesModel {
  std::vector<DecisionTree> trees;
  std::vector<std::string> class_vocabulary;  // class name per code
  std::vector<std::string> feature_names;
  EnsembleParams params;
  PreprocessModel preprocess;

  std::size_t n_features() const { return feature_names.size(); }
  std::size_t n_classes() const { return class_vocabulary.size(); }
};

/// N_train indices drawn uniformly with replacement from [0, N_train).
inline std::vector<std::size_t> bootstrap_indices(std::size_t n_train, std::uint64_t rng_seed) {
  if (n_train == 0) throw_data("bootstrap_indices: empty training set");
  rng::Engine eng(rng_seed);
  std::vector<std::size_t> out(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    out[i] = static_cast<std::size_t>(rng::bounded(eng, n_train));
  }
  return out;
}

namespace detail {

// Per-tree seed streams: 2i for the bootstrap draw, 2i+1 for node-level
// randomness. Independent of build order, so any thread schedule yields the
// same model.
inline std::uint64_t bootstrap_seed(std::uint64_t seed, std::size_t i) {
  return rng::derive_seed(seed, 2 * static_cast<std::uint64_t>(i));
}
inline std::uint64_t tree_seed(std::uint64_t seed, std::size_t i) {
  return rng::derive_seed(seed, 2 * static_cast<std::uint64_t>(i) + 1);
}

}  // namespace detail

/// Trains the n-tree ensemble over an encoded feature matrix. Tree i grows
/// on a fresh bootstrap sample (or on all rows when bootstrap is off).
inline ExtraTreesModel fit(const Matrix& X, std::span<const std::int32_t> y,
                           const EnsembleParams& params,
                           std::vector<std::string> class_names = {},
                           std::vector<std::string> feature_names = {},
                           unsigned threads = 1) {
  if (X.rows() == 0 || X.cols() == 0) throw_data("fit: empty training data");
  if (y.size() != X.rows()) throw_data("fit: label count does not match row count");
  if (params.n_trees == 0) throw_data("fit: n_trees must be >= 1");

  std::int32_t max_label = 0;
  for (const std::int32_t l : y) {
    if (l < 0) throw_data("fit: negative class id");
    max_label = std::max(max_label, l);
  }
  std::size_t n_classes = static_cast<std::size_t>(max_label) + 1;
  if (!class_names.empty()) {
    if (class_names.size() < n_classes) throw_data("fit: class vocabulary smaller than labels");
    n_classes = class_names.size();
  } else {
    for (std::size_t c = 0; c < n_classes; ++c) class_names.push_back(std::to_string(c));
  }
  if (feature_names.empty()) {
    for (std::size_t f = 0; f < X.cols(); ++f) feature_names.push_back("f" + std::to_string(f));
  }
  if (feature_names.size() != X.cols()) {
    throw_data("fit: feature name count does not match column count");
  }

  ExtraTreesModel model;
  model.params = params;
  model.class_vocabulary = std::move(class_names);
  model.feature_names = std::move(feature_names);
  model.trees.resize(params.n_trees);

  const std::size_t n = X.rows();
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});

  parallel_for(params.n_trees, threads, [&](std::size_t i) {
    std::vector<std::size_t> sample;
    if (params.bootstrap) sample = bootstrap_indices(n, detail::bootstrap_seed(params.seed, i));
    const std::span<const std::size_t> rows = params.bootstrap ? sample : all_rows;
    model.trees[i] = build_tree(X, y, rows, params.tree, detail::tree_seed(params.seed, i),
                                model.class_vocabulary.size());
  });
  return model;
}

/// Per-class vote counts for one row.
inline std::vector<std::size_t> vote_counts(const ExtraTreesModel& model,
                                            std::span<const double> row) {
  std::vector<std::size_t> counts(model.n_classes(), 0);
  for (const DecisionTree& tree : model.trees) ++counts[tree_predict(tree, row)];
  return counts;
}

/// Majority-vote class: the mode of the per-tree predictions, ties broken by
/// lowest class code.
inline std::int32_t predict(const ExtraTreesModel& model, std::span<const double> row) {
  const std::vector<std::size_t> counts = vote_counts(model, row);
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return static_cast<std::int32_t>(best);
}

/// Fraction of trees voting each class; sums to 1, argmax agrees with
/// predict(). Used as the class score for ROC/AUC.
inline std::vector<double> vote_shares(const ExtraTreesModel& model, std::span<const double> row) {
  const std::vector<std::size_t> counts = vote_counts(model, row);
  std::vector<double> shares(counts.size());
  const double n = static_cast<double>(model.trees.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    shares[c] = static_cast<double>(counts[c]) / n;
  }
  return shares;
}

/// Predictions plus vote-share matrix (rows x classes) for a whole table.
struct BatchPrediction {
  std::vector<std::int32_t> labels;
  Matrix shares;
};

inline BatchPrediction predict_rows(const ExtraTreesModel& model, const Matrix& X,
                                    unsigned threads = 1) {
  if (X.cols() != model.n_features()) {
    throw_data("predict: input has " + std::to_string(X.cols()) + " features, model expects " +
               std::to_string(model.n_features()));
  }
  BatchPrediction out;
  out.labels.resize(X.rows());
  out.shares = Matrix(X.rows(), model.n_classes());
  parallel_for(X.rows(), threads, [&](std::size_t r) {
    std::vector<double> row(X.cols());
    X.gather_row(r, row);
    const std::vector<std::size_t> counts = vote_counts(model, row);
    std::size_t best = 0;
    const double n = static_cast<double>(model.trees.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
      out.shares.at(r, c) = static_cast<double>(counts[c]) / n;
      if (counts[c] > counts[best]) best = c;
    }
    out.labels[r] = static_cast<std::int32_t>(best);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Grid search.
// ---------------------------------------------------------------------------

struct GridResult {
  EnsembleParams params;
  double validation_accuracy = 0.0;
};

struct GridSearchOutcome {
  EnsembleParams best;
  std::size_t best_index = 0;
  std::vector<GridResult> table;
};

/// Holds out a validation split, fits every candidate on the remainder and
/// returns the candidate with the highest validation accuracy (ties go to
/// the earliest grid entry).
inline GridSearchOutcome grid_search(const Matrix& X, std::span<const std::int32_t> y,
                                     const std::vector<EnsembleParams>& grid,
                                     double validation_fraction, std::uint64_t seed,
                                     unsigned threads = 1) {
  if (grid.empty()) throw_data("grid_search: empty parameter grid");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw_data("grid_search: validation fraction must be in (0, 1)");
  }
  const SplitSpec split = train_test_split(X.rows(), 1.0 - validation_fraction, seed);
  if (split.train_indices.empty() || split.test_indices.empty()) {
    throw_data("grid_search: degenerate validation split");
  }

  Matrix X_fit(split.train_indices.size(), X.cols());
  std::vector<std::int32_t> y_fit(split.train_indices.size());
  for (std::size_t i = 0; i < split.train_indices.size(); ++i) {
    const std::size_t r = split.train_indices[i];
    for (std::size_t c = 0; c < X.cols(); ++c) X_fit.at(i, c) = X.at(r, c);
    y_fit[i] = y[r];
  }

  GridSearchOutcome outcome;
  outcome.table.reserve(grid.size());
  for (const EnsembleParams& candidate : grid) {
    const ExtraTreesModel model = fit(X_fit, y_fit, candidate, {}, {}, threads);
    std::size_t correct = 0;
    std::vector<double> row(X.cols());
    for (const std::size_t r : split.test_indices) {
      X.gather_row(r, row);
      if (predict(model, row) == y[r]) ++correct;
    }
    const double accuracy =
        static_cast<double>(correct) / static_cast<double>(split.test_indices.size());
    outcome.table.push_back({candidate, accuracy});
  }

  outcome.best_index = 0;
  for (std::size_t i = 1; i < outcome.table.size(); ++i) {
    if (outcome.table[i].validation_accuracy >
        outcome.table[outcome.best_index].validation_accuracy) {
      outcome.best_index = i;
    }
  }
  outcome.best = outcome.table[outcome.best_index].params;
  return outcome;
}

}  // namespace etg
