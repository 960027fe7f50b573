#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etg/error.hpp"
#include "etg/table.hpp"

namespace etg {

/// C x C counts; rows index the true class, columns the predicted class.
struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::uint64_t> cells;  // row-major
  std::uint64_t total = 0;

  std::uint64_t at(std::size_t t, std::size_t p) const { return cells[t * n_classes + p]; }
  std::uint64_t& at(std::size_t t, std::size_t p) { return cells[t * n_classes + p]; }

  std::uint64_t row_sum(std::size_t t) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < n_classes; ++p) s += at(t, p);
    return s;
  }
  std::uint64_t col_sum(std::size_t p) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < n_classes; ++t) s += at(t, p);
    return s;
  }
  std::uint64_t trace() const {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < n_classes; ++c) s += at(c, c);
    return s;
  }
};

inline ConfusionMatrix build_confusion(std::span<const std::int32_t> y_true,
                                       std::span<const std::int32_t> y_pred,
                                       std::size_t n_classes) {
  if (y_true.empty()) throw_data("build_confusion: empty label lists");
  if (y_true.size() != y_pred.size()) {
    throw_data("build_confusion: length mismatch (" + std::to_string(y_true.size()) + " vs " +
               std::to_string(y_pred.size()) + ")");
  }
  ConfusionMatrix cm;
  cm.n_classes = n_classes;
  cm.cells.assign(n_classes * n_classes, 0);
  cm.total = y_true.size();
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const std::int32_t t = y_true[i], p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
        static_cast<std::size_t>(p) >= n_classes) {
      throw_data("build_confusion: class id out of range at index " + std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

/// accuracy = trace/N (the multiclass reduction of (TP+TN)/(TP+FN+FP+TN));
/// error rate = 1 - accuracy.
inline std::pair<double, double> accuracy_and_error(const ConfusionMatrix& cm) {
  if (cm.total == 0) throw_data("accuracy_and_error: empty confusion matrix");
  const double accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total);
  return {accuracy, 1.0 - accuracy};
}

enum class Averaging : std::uint8_t { weighted, macro };

inline const char* averaging_name(Averaging a) {
  return a == Averaging::weighted ? "weighted" : "macro";
}

struct PerClassMetrics {
  std::uint64_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // filled by full_report when scores are given
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<PerClassMetrics> per_class;
  std::uint64_t zero_division_warnings = 0;
};

/// Per-class precision/recall/F1 (zero when the denominator is zero) plus
/// the aggregate. Weighted averaging weights each class by its support,
/// which makes aggregate recall equal accuracy; macro averages all classes
/// uniformly.
inline PrecisionRecallF1 precision_recall_f1(const ConfusionMatrix& cm,
                                             Averaging averaging = Averaging::weighted) {
  if (cm.total == 0) throw_data("precision_recall_f1: empty confusion matrix");
  PrecisionRecallF1 out;
  const std::size_t C = cm.n_classes;
  out.per_class.resize(C);

  for (std::size_t c = 0; c < C; ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t support = cm.row_sum(c);
    const std::uint64_t predicted = cm.col_sum(c);
    PerClassMetrics& m = out.per_class[c];
    m.support = support;
    if (predicted == 0) {
      m.precision = 0.0;
      ++out.zero_division_warnings;
    } else {
      m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    }
    if (support == 0) {
      m.recall = 0.0;
      ++out.zero_division_warnings;
    } else {
      m.recall = static_cast<double>(tp) / static_cast<double>(support);
    }
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }

  if (averaging == Averaging::weighted) {
    const double n = static_cast<double>(cm.total);
    double precision = 0.0, f1 = 0.0;
    std::uint64_t tp_sum = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const double w = static_cast<double>(out.per_class[c].support);
      precision += w * out.per_class[c].precision;
      f1 += w * out.per_class[c].f1;
      tp_sum += cm.at(c, c);
    }
    out.precision = precision / n;
    out.f1 = f1 / n;
    // Support-weighted recall telescopes to trace/N; computing it that way
    // keeps recall == accuracy exact rather than within rounding.
    out.recall = static_cast<double>(tp_sum) / n;
  } else {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    for (const PerClassMetrics& m : out.per_class) {
      precision += m.precision;
      recall += m.recall;
      f1 += m.f1;
    }
    const double c = static_cast<double>(C);
    out.precision = precision / c;
    out.recall = recall / c;
    out.f1 = f1 / c;
  }
  return out;
}

/// Cohen's Kappa (P_o - P_e) / (1 - P_e) with P_o = trace/N and
/// P_e = sum_c row_c * col_c / N^2. When P_e = 1 (single-class degenerate
/// case) returns 1 if P_o = 1 else 0.
inline double cohen_kappa(const ConfusionMatrix& cm) {
  if (cm.total == 0) throw_data("cohen_kappa: empty confusion matrix");
  const double n = static_cast<double>(cm.total);
  const double p_o = static_cast<double>(cm.trace()) / n;
  double p_e = 0.0;
  for (std::size_t c = 0; c < cm.n_classes; ++c) {
    p_e += (static_cast<double>(cm.row_sum(c)) / n) * (static_cast<double>(cm.col_sum(c)) / n);
  }
  if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

struct AucResult {
  std::optional<double> weighted;                 // support-weighted over defined classes
  std::vector<std::optional<double>> per_class;   // undefined where one-vs-rest degenerates
};

/// One-vs-rest ROC AUC via the rank statistic: the fraction of
/// (positive, negative) pairs where the positive outscores the negative,
/// ties counting half. Equals the trapezoidal area under the ROC curve.
/// Classes without both positives and negatives are undefined and excluded
/// from the aggregate; if no class is defined, throws.
inline AucResult roc_auc(std::span<const std::int32_t> y_true, const Matrix& scores,
                         std::size_t n_classes) {
  if (y_true.empty()) throw_data("roc_auc: empty label list");
  if (scores.rows() != y_true.size() || scores.cols() != n_classes) {
    throw_data("roc_auc: score matrix shape mismatch");
  }
  AucResult out;
  out.per_class.assign(n_classes, std::nullopt);

  const std::size_t n = y_true.size();
  std::vector<std::size_t> order(n);
  double weighted_sum = 0.0;
  std::uint64_t weight_total = 0;

  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t positives = 0;
    for (const std::int32_t t : y_true) positives += static_cast<std::size_t>(t) == c;
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) continue;

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores.at(a, c) < scores.at(b, c);
    });

    // Average ranks over tied scores, then the Mann-Whitney statistic.
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && scores.at(order[j + 1], c) == scores.at(order[i], c)) ++j;
      const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) {
        if (static_cast<std::size_t>(y_true[order[k]]) == c) positive_rank_sum += avg_rank;
      }
      i = j + 1;
    }
    const double p = static_cast<double>(positives);
    const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
    const double auc = u / (p * static_cast<double>(negatives));
    out.per_class[c] = auc;
    weighted_sum += static_cast<double>(positives) * auc;
    weight_total += positives;
  }

  if (weight_total == 0) throw_data("roc_auc: no class has both positives and negatives");
  out.weighted = weighted_sum / static_cast<double>(weight_total);
  return out;
}

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double cohen_kappa = 0.0;
  std::optional<double> auc;  // undefined when no one-vs-rest class is valid
  double error_rate = 0.0;
  std::vector<std::string> class_names;
  std::vector<PerClassMetrics> per_class;
  Averaging averaging = Averaging::weighted;
  ConfusionMatrix confusion;
  std::uint64_t zero_division_warnings = 0;
};

/// Runs the whole metric suite: confusion matrix, accuracy/error,
/// precision/recall/F1, Cohen's Kappa and ROC AUC from the score matrix.
inline MetricsReport full_report(std::span<const std::int32_t> y_true,
                                 std::span<const std::int32_t> y_pred, const Matrix& scores,
                                 std::vector<std::string> class_names,
                                 Averaging averaging = Averaging::weighted) {
  MetricsReport report;
  report.class_names = std::move(class_names);
  report.averaging = averaging;
  report.confusion = build_confusion(y_true, y_pred, report.class_names.size());

  const auto [accuracy, error_rate] = accuracy_and_error(report.confusion);
  report.accuracy = accuracy;
  report.error_rate = error_rate;
  report.cohen_kappa = cohen_kappa(report.confusion);

  PrecisionRecallF1 prf = precision_recall_f1(report.confusion, averaging);
  report.precision = prf.precision;
  report.recall = prf.recall;
  report.f1 = prf.f1;
  report.per_class = std::move(prf.per_class);
  report.zero_division_warnings = prf.zero_division_warnings;

  try {
    const AucResult auc = roc_auc(y_true, scores, report.class_names.size());
    report.auc = auc.weighted;
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
      report.per_class[c].auc = auc.per_class[c];
    }
  } catch (const Error&) {
    report.auc = std::nullopt;  // single-class data: AUC undefined
  }
  return report;
}

}  // namespace etg
