#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace ssrgr;
using namespace ssrgr::cli;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string out;
  std::string report;
  std::string model;
  std::string data;
  std::string predictions;
  std::string truth;
  bool truth_dataset = false;
  std::vector<std::string> patterns;
  std::vector<std::uint64_t> seeds;
};

RunConfig load_run_config(const Options& o) {
  RunConfig cfg = load_config(o.config);
  if (!o.mode.empty()) apply_mode(cfg, mode_from_string(o.mode));
  if (o.seed) apply_seed(cfg, *o.seed);
  return cfg;
}

int run_train(const Options& o) {
  RunConfig cfg = load_run_config(o);
  if (!o.out.empty()) cfg.model_path = o.out;
  if (!o.report.empty()) cfg.report_path = o.report;
  const auto outcome = cmd_train(cfg);
  const auto& r = outcome.report;
  std::cout << "trained " << r["mode"].get<std::string>() << " model on " << r["num_points"]
            << " points (" << r["num_labeled"] << " labeled), accuracy " << r["accuracy"].dump()
            << ", " << r["outer_iterations"] << " outer iterations\n"
            << "model: " << cfg.model_path.string() << '\n';
  return 0;
}

int run_predict(const Options& o) {
  const auto predictions = cmd_predict(o.model, o.data, o.out);
  std::cout << predictions.size() << " predictions written to " << o.out << '\n';
  return 0;
}

int run_eval(const Options& o) {
  const auto result = cmd_eval(o.predictions, o.truth, o.truth_dataset);
  const std::string text = to_json(result).dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(o.out, text);
    std::cout << "accuracy " << result.accuracy << " over " << result.evaluated << " samples\n";
  }
  return 0;
}

int run_ablate(const Options& o) {
  const RunConfig cfg = load_run_config(o);
  std::vector<BetaPattern> patterns;
  for (const auto& p : o.patterns) patterns.push_back(pattern_from_string(p));
  if (patterns.empty()) patterns = default_patterns();
  std::vector<std::uint64_t> seeds = o.seeds;
  if (seeds.empty()) seeds.push_back(cfg.seed);
  const auto rows = cmd_ablate(cfg, patterns, seeds);
  std::cout << format_table(rows);
  if (!o.out.empty()) write_file_atomic(o.out, to_json(rows).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised sparse representation with graph regularization"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "Fit a model and write it with a JSON report");
  train->add_option("--config", o.config, "INI run configuration")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", o.seed, "Overrides the run seed");
  train->add_option("--mode", o.mode, "linear or kernel")->check(CLI::IsMember({"linear", "kernel"}));
  train->add_option("--out", o.out, "Model file (overrides [output] model)");
  train->add_option("--report", o.report, "Report file (overrides [output] report)");

  auto* predict = app.add_subcommand("predict", "Classify the samples of a dataset file");
  predict->add_option("--model", o.model, "Trained model")->required();
  predict->add_option("--data", o.data, "Dataset file")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", o.out, "Predictions file")->required();

  auto* eval = app.add_subcommand("eval", "Compare predictions with ground truth");
  eval->add_option("--predictions", o.predictions, "Predictions file")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", o.truth, "Predictions-format labels or a dataset file")->required()->check(CLI::ExistingFile);
  eval->add_flag("--truth-dataset", o.truth_dataset, "Read --truth as a dataset file");
  eval->add_option("--out", o.out, "Metrics JSON file (default: stdout)");

  auto* ablate = app.add_subcommand("ablate", "Accuracy with graph weights switched off");
  ablate->add_option("--config", o.config, "INI run configuration")->required()->check(CLI::ExistingFile);
  ablate->add_option("--seed", o.seed, "Overrides the run seed");
  ablate->add_option("--mode", o.mode, "linear or kernel")->check(CLI::IsMember({"linear", "kernel"}));
  ablate->add_option("--patterns", o.patterns, "beta patterns such as 000 100 111")->delimiter(',');
  ablate->add_option("--seeds", o.seeds, "Seeds averaged per pattern")->delimiter(',');
  ablate->add_option("--out", o.out, "Table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return run_train(o);
    if (*predict) return run_predict(o);
    if (*eval) return run_eval(o);
    if (*ablate) return run_ablate(o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
