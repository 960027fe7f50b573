// etg: train, evaluate and run extra-trees classifiers over CSV feature
// tables. Subcommands: preprocess, train, evaluate, predict, gridsearch.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "etg/etg.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
  std::string input;
  std::string label;
  std::string delimiter = ",";
  std::uint64_t seed = 42;
  std::size_t max_rows = 0;
  std::vector<std::string> include_columns;
  std::vector<std::string> exclude_columns;
  unsigned threads = 0;
};

etg::CsvOptions csv_options(const CommonArgs& args) {
  if (args.delimiter.size() != 1) etg::throw_usage("--delimiter must be a single character");
  etg::CsvOptions opts;
  opts.delimiter = args.delimiter[0];
  if (args.max_rows > 0) opts.max_rows = args.max_rows;
  opts.include_columns = args.include_columns;
  opts.exclude_columns = args.exclude_columns;
  return opts;
}

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool with_label) {
  cmd->add_option("--input", args.input, "Input CSV file")->required();
  if (with_label) cmd->add_option("--label", args.label, "Label column name")->required();
  cmd->add_option("--delimiter", args.delimiter, "CSV delimiter (default ',')");
  cmd->add_option("--seed", args.seed, "Random seed (default 42)");
  cmd->add_option("--max-rows", args.max_rows, "Load at most this many data rows");
  cmd->add_option("--include-columns", args.include_columns,
                  "Use only these columns (label always kept)")
      ->delimiter(',');
  cmd->add_option("--exclude-columns", args.exclude_columns, "Drop these columns")->delimiter(',');
  cmd->add_option("--threads", args.threads,
                  "Worker threads (default: ETG_THREADS or hardware)");
}

struct ModelFlags {
  std::size_t trees = 100;
  std::string k_features = "sqrt";
  std::int64_t max_depth = -1;  // -1 = unbounded
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::string splitter = "best";
  std::string bootstrap = "on";
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
  cmd->add_option("--trees", flags.trees, "Number of trees (default 100)");
  cmd->add_option("--k-features", flags.k_features,
                  "Features sampled per node: 'sqrt', 'all' or a count");
  cmd->add_option("--max-depth", flags.max_depth, "Depth cap; -1 = unbounded (default)");
  cmd->add_option("--min-samples-split", flags.min_samples_split,
                  "Minimum samples to split a node (default 2)");
  cmd->add_option("--min-samples-leaf", flags.min_samples_leaf,
                  "Minimum samples per leaf (default 1)");
  cmd->add_option("--splitter", flags.splitter, "Split search: best | random")
      ->check(CLI::IsMember({"best", "random"}));
  cmd->add_option("--bootstrap", flags.bootstrap, "Bootstrap sampling: on | off")
      ->check(CLI::IsMember({"on", "off"}));
}

std::size_t parse_k_features(const std::string& text, const char* flag) {
  if (text == "sqrt") return 0;
  if (text == "all") return etg::kAllFeatures;
  try {
    const long long v = std::stoll(text);
    if (v < 1) etg::throw_usage(std::string(flag) + " must be >= 1, 'sqrt' or 'all'");
    return static_cast<std::size_t>(v);
  } catch (const etg::Error&) {
    throw;
  } catch (const std::exception&) {
    etg::throw_usage(std::string(flag) + ": cannot parse '" + text + "'");
  }
}

etg::EnsembleParams ensemble_params(const ModelFlags& flags, std::uint64_t seed) {
  etg::EnsembleParams params;
  params.n_trees = flags.trees;
  params.bootstrap = flags.bootstrap == "on";
  params.seed = seed;
  params.tree.k_features = parse_k_features(flags.k_features, "--k-features");
  if (flags.max_depth >= 0) params.tree.max_depth = static_cast<std::size_t>(flags.max_depth);
  params.tree.min_samples_split = flags.min_samples_split;
  params.tree.min_samples_leaf = flags.min_samples_leaf;
  params.tree.splitter =
      flags.splitter == "best" ? etg::SplitterKind::best : etg::SplitterKind::random;
  return params;
}

void write_json(const std::string& path, const json& doc) {
  etg::atomic_write_file(path, doc.dump(2) + "\n");
}

std::string default_output(const std::string& path, const char* suffix) {
  return (std::filesystem::path(path).stem().string() + suffix);
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const CommonArgs& args, const std::string& out_clean,
                   const std::string& out_transformed, const std::string& out_report) {
  const etg::RawTable raw = etg::load_csv(args.input, args.label, csv_options(args));
  auto [cleaned, report] = etg::clean(raw);
  std::cout << "loaded " << raw.row_count() << " rows, " << raw.column_count() << " columns\n";
  std::cout << "clean: -" << report.duplicates_removed << " duplicates, "
            << report.nonfinite_cells_marked << " non-finite cells, -"
            << report.rows_dropped_missing << " incomplete rows -> " << report.rows_remaining
            << " rows\n";

  if (!out_clean.empty()) {
    std::ostringstream buf;
    etg::write_csv(cleaned, buf, csv_options(args).delimiter);
    etg::atomic_write_file(out_clean, buf.str());
    std::cout << "cleaned table -> " << out_clean << "\n";
  }
  if (!out_transformed.empty()) {
    if (cleaned.row_count() == 0) etg::throw_data("no rows to transform after cleaning");
    std::vector<std::size_t> rows(cleaned.row_count());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const etg::Standardizer standardizer = etg::fit_standardizer(cleaned, rows);
    const etg::CategoryEncoder encoder = etg::fit_encoder(cleaned, rows);
    const etg::RawTable transformed =
        etg::apply_encoder(encoder, etg::apply_standardizer(standardizer, cleaned));
    std::ostringstream buf;
    etg::write_csv(transformed, buf, csv_options(args).delimiter);
    etg::atomic_write_file(out_transformed, buf.str());
    std::cout << "standardized+encoded table -> " << out_transformed << "\n";
  }
  if (!out_report.empty()) {
    json doc{{"command", "preprocess"},
             {"input", args.input},
             {"label", args.label},
             {"rows_loaded", raw.row_count()},
             {"clean", etg::clean_report_to_json(report)}};
    write_json(out_report, doc);
    std::cout << "report -> " << out_report << "\n";
  }
  return 0;
}

int cmd_train(const CommonArgs& args, const ModelFlags& flags, double train_fraction,
              bool stratified, const std::string& out_model, const std::string& out_report) {
  etg::TrainOptions opts;
  opts.input_path = args.input;
  opts.label_column = args.label;
  opts.csv = csv_options(args);
  opts.train_fraction = train_fraction;
  opts.stratified = stratified;
  opts.params = ensemble_params(flags, args.seed);
  opts.threads = etg::resolve_threads(args.threads);

  std::cout << "training on " << args.input << " (label '" << args.label << "', "
            << opts.threads << " threads)\n";
  etg::TrainResult result = etg::train_pipeline(opts);
  std::cout << "clean: -" << result.clean_report.duplicates_removed << " duplicates, -"
            << result.clean_report.rows_dropped_missing << " incomplete rows -> "
            << result.clean_report.rows_remaining << " rows\n";
  std::cout << "split: " << result.train_rows << " train / " << result.test_rows << " test\n";
  std::cout << "fitted " << result.model.trees.size() << " trees over "
            << result.model.n_features() << " features, " << result.model.n_classes()
            << " classes\n";

  etg::save_model(result.model, out_model);
  std::cout << "model -> " << out_model << "\n";

  json doc{{"command", "train"},
           {"input", args.input},
           {"label", args.label},
           {"rows_loaded", result.rows_loaded},
           {"clean", etg::clean_report_to_json(result.clean_report)},
           {"split",
            {{"train_rows", result.train_rows},
             {"test_rows", result.test_rows},
             {"train_fraction", train_fraction},
             {"stratified", stratified},
             {"seed", args.seed}}},
           {"params", etg::params_to_json(result.model.params)},
           {"classes", result.model.class_vocabulary},
           {"feature_count", result.model.n_features()},
           {"threads", opts.threads},
           {"model_path", out_model},
           {"wall_time_ms", result.wall_time_ms}};
  write_json(out_report, doc);
  std::cout << "run report -> " << out_report << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& model_path,
                 const std::string& rows_mode, const std::string& averaging_mode,
                 const std::string& out_report, const std::string& out_confusion) {
  const etg::ExtraTreesModel model = etg::load_model(model_path);
  etg::RowSelection rows = etg::RowSelection::all;
  if (rows_mode == "test") rows = etg::RowSelection::test;
  else if (rows_mode == "train") rows = etg::RowSelection::train;
  const etg::Averaging averaging =
      averaging_mode == "macro" ? etg::Averaging::macro : etg::Averaging::weighted;

  const etg::EvaluateResult result =
      etg::evaluate_pipeline(model, args.input, rows, csv_options(args),
                             etg::resolve_threads(args.threads), averaging);

  std::cout << etg::metrics_to_text(result.metrics);
  if (result.metrics.zero_division_warnings > 0) {
    std::cerr << "warning: " << result.metrics.zero_division_warnings
              << " zero-denominator metric(s) reported as 0\n";
  }

  write_json(out_report, etg::metrics_to_json(result.metrics));
  std::cout << "\nmetrics report -> " << out_report << "\n";
  if (!out_confusion.empty()) {
    etg::atomic_write_file(
        out_confusion, etg::confusion_to_csv(result.metrics.confusion, model.class_vocabulary));
    std::cout << "confusion matrix -> " << out_confusion << "\n";
  }
  return 0;
}

int cmd_predict(const CommonArgs& args, const std::string& model_path, const std::string& out) {
  const etg::ExtraTreesModel model = etg::load_model(model_path);
  const etg::PredictResult result = etg::predict_pipeline(
      model, args.input, csv_options(args), etg::resolve_threads(args.threads));

  std::ostringstream buf;
  buf << "predicted_class,confidence\n";
  for (std::size_t i = 0; i < result.predicted_class.size(); ++i) {
    char conf[32];
    std::snprintf(conf, sizeof(conf), "%.6f", result.confidence[i]);
    const std::string& name = result.predicted_class[i];
    const bool quote = name.find_first_of(",\"\r\n") != std::string::npos;
    if (quote) {
      buf << '"';
      for (const char c : name) {
        if (c == '"') buf << "\"\"";
        else buf << c;
      }
      buf << '"';
    } else {
      buf << name;
    }
    buf << ',' << conf << '\n';
  }
  etg::atomic_write_file(out, buf.str());
  std::cout << result.predicted_class.size() << " predictions -> " << out << "\n";
  return 0;
}

int cmd_gridsearch(const CommonArgs& args, const ModelFlags& flags,
                   const std::vector<std::string>& grid_trees,
                   const std::vector<std::string>& grid_depth,
                   const std::vector<std::string>& grid_k, double validation_fraction,
                   const std::string& out_results, const std::string& out_best) {
  // Default grid: trees {50,100,200} x depth {unbounded,20} x k {sqrt,all}.
  std::vector<std::string> trees = grid_trees.empty()
                                       ? std::vector<std::string>{"50", "100", "200"}
                                       : grid_trees;
  std::vector<std::string> depths =
      grid_depth.empty() ? std::vector<std::string>{"none", "20"} : grid_depth;
  std::vector<std::string> ks =
      grid_k.empty() ? std::vector<std::string>{"sqrt", "all"} : grid_k;

  std::vector<etg::EnsembleParams> grid;
  for (const std::string& t : trees) {
    for (const std::string& d : depths) {
      for (const std::string& k : ks) {
        etg::EnsembleParams p = ensemble_params(flags, args.seed);
        try {
          const long long n = std::stoll(t);
          if (n < 1) etg::throw_usage("--grid-trees entries must be >= 1");
          p.n_trees = static_cast<std::size_t>(n);
        } catch (const etg::Error&) {
          throw;
        } catch (const std::exception&) {
          etg::throw_usage("--grid-trees: cannot parse '" + t + "'");
        }
        if (d == "none") {
          p.tree.max_depth.reset();
        } else {
          try {
            p.tree.max_depth = static_cast<std::size_t>(std::stoull(d));
          } catch (const std::exception&) {
            etg::throw_usage("--grid-depth: cannot parse '" + d + "' (use a count or 'none')");
          }
        }
        p.tree.k_features = parse_k_features(k, "--grid-k");
        grid.push_back(p);
      }
    }
  }

  etg::TrainOptions opts;
  opts.input_path = args.input;
  opts.label_column = args.label;
  opts.csv = csv_options(args);
  opts.params = ensemble_params(flags, args.seed);
  opts.threads = etg::resolve_threads(args.threads);

  std::cout << "grid search: " << grid.size() << " candidates, validation fraction "
            << validation_fraction << "\n";
  const etg::GridSearchPipelineResult result =
      etg::gridsearch_pipeline(opts, grid, validation_fraction);

  json rows = json::array();
  for (std::size_t i = 0; i < result.outcome.table.size(); ++i) {
    const etg::GridResult& r = result.outcome.table[i];
    rows.push_back({{"index", i},
                    {"params", etg::params_to_json(r.params)},
                    {"validation_accuracy", r.validation_accuracy}});
    char acc[32];
    std::snprintf(acc, sizeof(acc), "%.6f", r.validation_accuracy);
    std::cout << "  [" << i << "] trees=" << r.params.n_trees << " depth="
              << (r.params.tree.max_depth ? std::to_string(*r.params.tree.max_depth) : "none")
              << " k="
              << (r.params.tree.k_features == 0
                      ? "sqrt"
                      : (r.params.tree.k_features == etg::kAllFeatures
                             ? "all"
                             : std::to_string(r.params.tree.k_features)))
              << "  accuracy " << acc << (i == result.outcome.best_index ? "  <- best" : "")
              << "\n";
  }
  write_json(out_results, json{{"command", "gridsearch"},
                               {"input", args.input},
                               {"validation_fraction", validation_fraction},
                               {"seed", args.seed},
                               {"results", std::move(rows)},
                               {"best_index", result.outcome.best_index}});
  write_json(out_best, etg::params_to_json(result.outcome.best));
  std::cout << "results -> " << out_results << "\nbest params -> " << out_best << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extra-trees ensemble classifier for network attack detection"};
  app.require_subcommand(1);

  CommonArgs args;
  ModelFlags flags;

  // preprocess
  std::string out_clean, out_transformed, out_prep_report;
  CLI::App* prep = app.add_subcommand("preprocess", "Clean a CSV and export tables/reports");
  add_common_flags(prep, args, /*with_label=*/true);
  prep->add_option("--out-clean", out_clean, "Write the cleaned table to this CSV");
  prep->add_option("--out-transformed", out_transformed,
                   "Write the standardized+encoded table to this CSV");
  prep->add_option("--out-report", out_prep_report, "Write the cleaning report to this JSON");

  // train
  double train_fraction = 0.7;
  bool stratified = false;
  std::string out_model, out_train_report;
  CLI::App* train = app.add_subcommand("train", "Train an ensemble and write a .etg model");
  add_common_flags(train, args, /*with_label=*/true);
  add_model_flags(train, flags);
  train->add_option("--train-fraction", train_fraction, "Training fraction (default 0.7)");
  train->add_flag("--stratify", stratified, "Stratify the split by class");
  train->add_option("--out", out_model, "Model output path (default: <input stem>.etg in the working directory)");
  train->add_option("--out-report", out_train_report,
                    "Run report path (default: <input stem>_train_report.json)");

  // evaluate
  std::string model_path, rows_mode = "all", averaging_mode = "weighted";
  std::string out_eval_report, out_confusion;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score labeled data against a model");
  add_common_flags(evaluate, args, /*with_label=*/false);
  evaluate->add_option("--model", model_path, "Trained .etg model")->required();
  evaluate->add_option("--rows", rows_mode, "Rows to evaluate: all | test | train")
      ->check(CLI::IsMember({"all", "test", "train"}));
  evaluate->add_option("--averaging", averaging_mode, "Aggregate mode: weighted | macro")
      ->check(CLI::IsMember({"weighted", "macro"}));
  evaluate->add_option("--out-report", out_eval_report,
                       "Metrics JSON path (default: <input stem>_metrics.json)");
  evaluate->add_option("--out-confusion", out_confusion, "Confusion matrix CSV path");

  // predict
  std::string out_predictions;
  CLI::App* predict = app.add_subcommand("predict", "Classify unlabeled rows");
  add_common_flags(predict, args, /*with_label=*/false);
  predict->add_option("--model", model_path, "Trained .etg model")->required();
  predict->add_option("--out", out_predictions,
                      "Predictions CSV path (default: <input stem>_predictions.csv)");

  // gridsearch
  std::vector<std::string> grid_trees, grid_depth, grid_k;
  double validation_fraction = 0.3;
  std::string out_grid_results, out_grid_best;
  CLI::App* gridsearch = app.add_subcommand("gridsearch", "Pick ensemble params by holdout");
  add_common_flags(gridsearch, args, /*with_label=*/true);
  add_model_flags(gridsearch, flags);
  gridsearch->add_option("--grid-trees", grid_trees, "Tree counts to try")->delimiter(',');
  gridsearch->add_option("--grid-depth", grid_depth, "Depth caps to try ('none' = unbounded)")
      ->delimiter(',');
  gridsearch->add_option("--grid-k", grid_k, "k-features values to try (count, 'sqrt', 'all')")
      ->delimiter(',');
  gridsearch->add_option("--validation-fraction", validation_fraction,
                         "Holdout fraction (default 0.3)");
  gridsearch->add_option("--out-results", out_grid_results,
                         "Results table JSON (default: <input stem>_grid.json)");
  gridsearch->add_option("--out-best", out_grid_best,
                         "Best params JSON (default: <input stem>_best_params.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (prep->parsed()) {
      return cmd_preprocess(args, out_clean, out_transformed, out_prep_report);
    }
    if (train->parsed()) {
      if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        etg::throw_usage("--train-fraction must be in (0, 1)");
      }
      if (out_model.empty()) out_model = default_output(args.input, ".etg");
      if (out_train_report.empty()) {
        out_train_report = default_output(args.input, "_train_report.json");
      }
      return cmd_train(args, flags, train_fraction, stratified, out_model, out_train_report);
    }
    if (evaluate->parsed()) {
      if (out_eval_report.empty()) out_eval_report = default_output(args.input, "_metrics.json");
      return cmd_evaluate(args, model_path, rows_mode, averaging_mode, out_eval_report,
                          out_confusion);
    }
    if (predict->parsed()) {
      if (out_predictions.empty()) out_predictions = default_output(args.input, "_predictions.csv");
      return cmd_predict(args, model_path, out_predictions);
    }
    if (gridsearch->parsed()) {
      if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        etg::throw_usage("--validation-fraction must be in (0, 1)");
      }
      if (out_grid_results.empty()) out_grid_results = default_output(args.input, "_grid.json");
      if (out_grid_best.empty()) out_grid_best = default_output(args.input, "_best_params.json");
      return cmd_gridsearch(args, flags, grid_trees, grid_depth, grid_k, validation_fraction,
                            out_grid_results, out_grid_best);
    }
  } catch (const etg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
