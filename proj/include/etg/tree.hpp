#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etg/error.hpp"
#include "etg/rng.hpp"
#include "etg/table.hpp"

namespace etg {

enum class SplitterKind : std::uint8_t {
  best,    // exhaustive argmin over midpoint thresholds
  random,  // one uniform threshold per candidate feature
};

/// Sentinel for "use every feature at every node".
inline constexpr std::size_t kAllFeatures = static_cast<std::size_t>(-1);

struct TreeParams {
  std::size_t k_features = 0;  // features sampled per node; 0 = ceil(sqrt(m))
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  SplitterKind splitter = SplitterKind::best;
  // Impurity is Gini; an entropy criterion would slot in at gini()/
  // split_impurity() if ever needed.
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;
  std::size_t left_count = 0;
  std::size_t right_count = 0;
};

/// Gini impurity 1 - sum(p_c^2) over class proportions.
inline double gini(std::span<const std::uint64_t> class_counts) {
  std::uint64_t total = 0;
  for (const std::uint64_t c : class_counts) total += c;
  if (total == 0) throw_data("gini: zero total count");
  double sum_sq = 0.0;
  for (const std::uint64_t c : class_counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

/// Child-weighted impurity (N_left/N)*I_left + (N_right/N)*I_right.
inline double split_impurity(std::span<const std::uint64_t> left_counts,
                             std::span<const std::uint64_t> right_counts) {
  std::uint64_t n_left = 0, n_right = 0;
  for (const std::uint64_t c : left_counts) n_left += c;
  for (const std::uint64_t c : right_counts) n_right += c;
  if (n_left == 0 || n_right == 0) throw_data("split_impurity: empty child");
  const double n = static_cast<double>(n_left + n_right);
  return (static_cast<double>(n_left) / n) * gini(left_counts) +
         (static_cast<double>(n_right) / n) * gini(right_counts);
}

struct TreeNode {
  bool is_leaf = true;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t predicted = 0;                 // leaf only
  std::vector<std::uint64_t> class_counts;     // leaf only
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // preorder; root at 0
  std::size_t depth = 0;
  std::size_t leaf_count = 0;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  TreeParams params;
  std::uint64_t seed = 0;
};

namespace detail {

/// Midpoint between adjacent sorted values, pinned so that `x <= t` sends
/// every training value <= a left and every value >= b right even when the
/// midpoint rounds onto b.
inline double midpoint_threshold(double a, double b) {
  const double mid = a + (b - a) / 2.0;
  return mid < b ? mid : a;
}

/// Lowest class id among those attaining the maximum count.
inline std::uint32_t majority_class(std::span<const std::uint64_t> counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return static_cast<std::uint32_t>(best);
}

struct ScanBuffers {
  std::vector<std::pair<double, std::int32_t>> sorted;  // (value, label)
  std::vector<std::uint64_t> left, right, total;
};

/// Exhaustive best split over the given features: candidate thresholds are
/// midpoints between consecutive distinct sorted values; ties break on
/// (impurity, feature index, threshold), all ascending.
inline std::optional<SplitCandidate> best_split_scan(const Matrix& data,
                                                     std::span<const std::int32_t> labels,
                                                     std::span<const std::size_t> samples,
                                                     std::span<const std::size_t> features,
                                                     std::size_t n_classes, ScanBuffers& buf) {
  std::optional<SplitCandidate> best;
  const std::size_t n = samples.size();
  buf.total.assign(n_classes, 0);
  for (const std::size_t s : samples) ++buf.total[labels[s]];

  for (const std::size_t f : features) {
    buf.sorted.clear();
    buf.sorted.reserve(n);
    const std::span<const double> col = data.col(f);
    for (const std::size_t s : samples) buf.sorted.emplace_back(col[s], labels[s]);
    std::sort(buf.sorted.begin(), buf.sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (buf.sorted.front().first == buf.sorted.back().first) continue;  // constant feature

    buf.left.assign(n_classes, 0);
    buf.right = buf.total;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto cls = static_cast<std::size_t>(buf.sorted[i].second);
      ++buf.left[cls];
      --buf.right[cls];
      if (buf.sorted[i].first == buf.sorted[i + 1].first) continue;
      const double impurity = split_impurity(buf.left, buf.right);
      if (!best || impurity < best->impurity) {
        best = SplitCandidate{f, midpoint_threshold(buf.sorted[i].first, buf.sorted[i + 1].first),
                              impurity, i + 1, n - (i + 1)};
      }
    }
  }
  return best;
}

/// Extremely-randomized variant: one uniform threshold in (min, max) per
/// non-constant feature; argmin with the same tie rules.
inline std::optional<SplitCandidate> random_split_scan(const Matrix& data,
                                                       std::span<const std::int32_t> labels,
                                                       std::span<const std::size_t> samples,
                                                       std::span<const std::size_t> features,
                                                       std::size_t n_classes, rng::Engine& eng,
                                                       ScanBuffers& buf) {
  std::optional<SplitCandidate> best;
  for (const std::size_t f : features) {
    const std::span<const double> col = data.col(f);
    double lo = col[samples[0]], hi = col[samples[0]];
    for (const std::size_t s : samples) {
      lo = std::min(lo, col[s]);
      hi = std::max(hi, col[s]);
    }
    if (lo == hi) continue;
    double threshold = lo + rng::uniform_real(eng) * (hi - lo);
    if (!(threshold < hi)) threshold = lo;  // keep both children non-empty

    buf.left.assign(n_classes, 0);
    buf.right.assign(n_classes, 0);
    std::size_t n_left = 0;
    for (const std::size_t s : samples) {
      if (col[s] <= threshold) {
        ++buf.left[labels[s]];
        ++n_left;
      } else {
        ++buf.right[labels[s]];
      }
    }
    const double impurity = split_impurity(buf.left, buf.right);
    if (!best || impurity < best->impurity) {
      best = SplitCandidate{f, threshold, impurity, n_left, samples.size() - n_left};
    }
  }
  return best;
}

}  // namespace detail

/// Best split over `features` at a node. Returns nullopt when no feature has
/// two distinct values among the samples.
inline std::optional<SplitCandidate> find_best_split(const Matrix& data,
                                                     std::span<const std::int32_t> labels,
                                                     std::span<const std::size_t> samples,
                                                     std::span<const std::size_t> features,
                                                     std::size_t n_classes) {
  if (samples.size() < 2 || features.empty()) return std::nullopt;
  detail::ScanBuffers buf;
  std::vector<std::size_t> ordered(features.begin(), features.end());
  std::sort(ordered.begin(), ordered.end());
  return detail::best_split_scan(data, labels, samples, ordered, n_classes, buf);
}

namespace detail {

struct TreeBuilder {
  const Matrix& data;
  std::span<const std::int32_t> labels;
  const TreeParams& params;
  std::size_t k;
  std::size_t n_classes;
  rng::Engine eng;
  DecisionTree tree;
  ScanBuffers buf;
  std::vector<std::size_t> all_features;

  std::uint32_t build(std::vector<std::size_t>& samples, std::size_t depth) {
    tree.depth = std::max(tree.depth, depth);
    const auto index = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::vector<std::uint64_t> counts(n_classes, 0);
    for (const std::size_t s : samples) ++counts[labels[s]];
    const bool pure = std::count(counts.begin(), counts.end(), 0) >=
                      static_cast<std::ptrdiff_t>(n_classes) - 1;

    std::optional<SplitCandidate> split;
    if (!pure && samples.size() >= params.min_samples_split &&
        (!params.max_depth || depth < *params.max_depth)) {
      std::span<const std::size_t> features;
      std::vector<std::size_t> subset;
      if (k >= data.cols()) {
        features = all_features;
      } else {
        subset = rng::sample_without_replacement(data.cols(), k, eng);
        std::sort(subset.begin(), subset.end());
        features = subset;
      }
      split = (params.splitter == SplitterKind::best)
                  ? best_split_scan(data, labels, samples, features, n_classes, buf)
                  : random_split_scan(data, labels, samples, features, n_classes, eng, buf);
      if (split && (split->left_count < params.min_samples_leaf ||
                    split->right_count < params.min_samples_leaf)) {
        split.reset();
      }
    }

    if (!split) {
      TreeNode& leaf = tree.nodes[index];
      leaf.is_leaf = true;
      leaf.predicted = majority_class(counts);
      leaf.class_counts = std::move(counts);
      ++tree.leaf_count;
      return index;
    }

    std::vector<std::size_t> left_samples, right_samples;
    left_samples.reserve(split->left_count);
    right_samples.reserve(split->right_count);
    const std::span<const double> col = data.col(split->feature);
    for (const std::size_t s : samples) {
      if (col[s] <= split->threshold) left_samples.push_back(s);
      else right_samples.push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();

    tree.nodes[index].is_leaf = false;
    tree.nodes[index].feature = static_cast<std::uint32_t>(split->feature);
    tree.nodes[index].threshold = split->threshold;
    const std::uint32_t left = build(left_samples, depth + 1);
    const std::uint32_t right = build(right_samples, depth + 1);
    tree.nodes[index].left = left;
    tree.nodes[index].right = right;
    return index;
  }
};

}  // namespace detail

/// Builds one decision tree by recursive impurity-minimizing splits. A node
/// becomes a leaf when it is pure, has fewer than min_samples_split samples,
/// sits at max_depth, no valid split exists, or the best split would leave a
/// child below min_samples_leaf. All randomness derives from `rng_seed`.
inline DecisionTree build_tree(const Matrix& data, std::span<const std::int32_t> labels,
                               std::span<const std::size_t> samples, const TreeParams& params,
                               std::uint64_t rng_seed, std::size_t n_classes = 0) {
  if (samples.empty()) throw_data("build_tree: empty sample set");
  if (labels.size() != data.rows()) throw_data("build_tree: label/row count mismatch");
  const std::size_t m = data.cols();
  if (m == 0) throw_data("build_tree: no features");
  if (n_classes == 0) {
    std::int32_t max_label = 0;
    for (const std::int32_t l : labels) max_label = std::max(max_label, l);
    n_classes = static_cast<std::size_t>(max_label) + 1;
  }
  std::size_t k = params.k_features;
  if (k == 0) k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
  if (k == kAllFeatures) k = m;
  if (k > m) throw_data("build_tree: k_features exceeds feature count");

  detail::TreeBuilder builder{data,      labels.subspan(0), params, k, n_classes,
                              rng::Engine(rng_seed),        {},     {}, {}};
  builder.tree.params = params;
  builder.tree.params.k_features = k;
  builder.tree.seed = rng_seed;
  builder.tree.n_features = m;
  builder.tree.n_classes = n_classes;
  builder.all_features.resize(m);
  for (std::size_t i = 0; i < m; ++i) builder.all_features[i] = i;

  std::vector<std::size_t> root_samples(samples.begin(), samples.end());
  builder.build(root_samples, 0);
  builder.tree.nodes.shrink_to_fit();
  return std::move(builder.tree);
}

/// Descends from the root, going left iff value <= threshold.
inline std::uint32_t tree_predict(const DecisionTree& tree, std::span<const double> row) {
  if (row.size() != tree.n_features) {
    throw_data("tree_predict: row width " + std::to_string(row.size()) + ", expected " +
               std::to_string(tree.n_features));
  }
  std::uint32_t node = 0;
  while (!tree.nodes[node].is_leaf) {
    const TreeNode& n = tree.nodes[node];
    node = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[node].predicted;
}

}  // namespace etg
