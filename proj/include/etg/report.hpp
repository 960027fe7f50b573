#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "etg/metrics.hpp"
#include "etg/model_io.hpp"

namespace etg {

/// Machine-readable metrics document. Top-level keys are exactly: accuracy,
/// precision, recall, f1, cohen_kappa, auc, error_rate, per_class, averaging.
inline nlohmann::json metrics_to_json(const MetricsReport& report) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const PerClassMetrics& m = report.per_class[c];
    nlohmann::json row{
        {"class", report.class_names[c]}, {"support", m.support},
        {"precision", m.precision},       {"recall", m.recall},
        {"f1", m.f1},
    };
    if (m.auc) row["auc"] = *m.auc;
    else row["auc"] = nullptr;
    per_class.push_back(std::move(row));
  }
  return nlohmann::json{
      {"accuracy", report.accuracy},
      {"precision", report.precision},
      {"recall", report.recall},
      {"f1", report.f1},
      {"cohen_kappa", report.cohen_kappa},
      {"auc", report.auc ? nlohmann::json(*report.auc) : nlohmann::json(nullptr)},
      {"error_rate", report.error_rate},
      {"per_class", std::move(per_class)},
      {"averaging", averaging_name(report.averaging)},
  };
}

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace detail

/// Human-readable summary: the seven headline metrics plus a per-class table.
inline std::string metrics_to_text(const MetricsReport& report) {
  std::ostringstream out;
  out << "accuracy     " << detail::fixed6(report.accuracy) << "\n"
      << "precision    " << detail::fixed6(report.precision) << "\n"
      << "recall       " << detail::fixed6(report.recall) << "\n"
      << "f1           " << detail::fixed6(report.f1) << "\n"
      << "cohen_kappa  " << detail::fixed6(report.cohen_kappa) << "\n"
      << "auc          " << (report.auc ? detail::fixed6(*report.auc) : "undefined") << "\n"
      << "error_rate   " << detail::fixed6(report.error_rate) << "\n";
  out << "\nper-class (" << averaging_name(report.averaging) << " averaging):\n";
  out << "  class                          support  precision  recall    f1        auc\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const PerClassMetrics& m = report.per_class[c];
    char line[256];
    std::snprintf(line, sizeof(line), "  %-30s %7llu  %.6f  %.6f  %.6f  %s\n",
                  report.class_names[c].c_str(), static_cast<unsigned long long>(m.support),
                  m.precision, m.recall, m.f1,
                  m.auc ? detail::fixed6(*m.auc).c_str() : "undefined");
    out << line;
  }
  return out.str();
}

/// Confusion matrix as CSV: header row of predicted class names, one row per
/// true class.
inline std::string confusion_to_csv(const ConfusionMatrix& cm,
                                    const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << "true_class";
  for (const std::string& name : class_names) out << ',' << name;
  out << '\n';
  for (std::size_t t = 0; t < cm.n_classes; ++t) {
    out << class_names[t];
    for (std::size_t p = 0; p < cm.n_classes; ++p) out << ',' << cm.at(t, p);
    out << '\n';
  }
  return out.str();
}

inline nlohmann::json clean_report_to_json(const CleanReport& r) {
  return nlohmann::json{
      {"duplicates_removed", r.duplicates_removed},
      {"nonfinite_cells_marked", r.nonfinite_cells_marked},
      {"rows_dropped_missing", r.rows_dropped_missing},
      {"rows_remaining", r.rows_remaining},
  };
}

inline nlohmann::json params_to_json(const EnsembleParams& p) {
  nlohmann::json tree{
      {"k_features", p.tree.k_features == 0
                         ? nlohmann::json("sqrt")
                         : (p.tree.k_features == kAllFeatures ? nlohmann::json("all")
                                                              : nlohmann::json(p.tree.k_features))},
      {"max_depth", p.tree.max_depth ? nlohmann::json(*p.tree.max_depth)
                                     : nlohmann::json(nullptr)},
      {"min_samples_split", p.tree.min_samples_split},
      {"min_samples_leaf", p.tree.min_samples_leaf},
      {"splitter", p.tree.splitter == SplitterKind::best ? "best" : "random"},
  };
  return nlohmann::json{
      {"n_trees", p.n_trees},
      {"tree", std::move(tree)},
      {"bootstrap", p.bootstrap},
      {"seed", p.seed},
  };
}

}  // namespace etg
