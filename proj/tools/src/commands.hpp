#pragma once

#include "model_file.hpp"
#include "run_config.hpp"

#include <ssrgr/error.hpp>

#include <json.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace ssrgr::cli {

using Json = nlohmann::ordered_json;

struct TrainOutcome {
  StoredModel model;
  /// accuracy (on points hidden from training), accuracy_all,
  /// per_class_accuracy, objective trace, wall clock, config echo, seed.
  Json report;
};

/// Loads, projects and splits the configured dataset and fits the model.
/// Nothing is written.
TrainOutcome run_training(const RunConfig& cfg);

/// run_training, then writes the model and the report atomically. The
/// report goes to cfg.report_path or, when unset, next to the model.
TrainOutcome cmd_train(const RunConfig& cfg);

struct Prediction {
  Index label = 0;  // 0-based
  Vector scores;
};

/// Training columns (bitwise equal) take their transductive scores; other
/// samples are coded against the learned dictionary.
std::vector<Prediction> predict(const StoredModel& model, const data::Dataset& samples);

/// Writes one line per sample: 1-based class, then the class scores.
std::vector<Prediction> cmd_predict(const std::filesystem::path& model_path,
                                    const std::filesystem::path& data_path,
                                    const std::filesystem::path& out_path);

/// Class ids (1-based, 0 = unknown) from the first column of a predictions file.
std::vector<Index> read_prediction_labels(const std::filesystem::path& path);

struct EvalResult {
  double accuracy = 0.0;
  Index evaluated = 0;
  Index skipped = 0;  // unknown truth
  std::vector<double> per_class_accuracy;  // NaN for classes absent from the truth
  std::vector<std::vector<Index>> confusion;  // [truth][predicted]
};

/// Both inputs hold 1-based class ids with 0 meaning unknown.
EvalResult evaluate(const std::vector<Index>& predicted, const std::vector<Index>& truth);
Json to_json(const EvalResult& result);

/// `truth` is a predictions file, or a dataset file when `truth_is_dataset`.
EvalResult cmd_eval(const std::filesystem::path& predictions, const std::filesystem::path& truth,
                    bool truth_is_dataset);

/// Graph weights kept (true) or zeroed (false), in beta1, beta2, beta3 order.
using BetaPattern = std::array<bool, 3>;

/// Parses "110" style patterns.
BetaPattern pattern_from_string(const std::string& text);
std::string to_string(const BetaPattern& pattern);

/// No graph terms, the global graph alone, and all three graphs.
std::vector<BetaPattern> default_patterns();

struct AblationRow {
  BetaPattern pattern;
  std::vector<double> accuracies;  // one per seed
  double mean_accuracy = 0.0;
  double seconds = 0.0;
};

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::vector<BetaPattern>& patterns,
                                    const std::vector<std::uint64_t>& seeds);
Json to_json(const std::vector<AblationRow>& rows);
std::string format_table(const std::vector<AblationRow>& rows);

/// 0 success, 1 usage or configuration, 2 data, 3 numeric failure.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace ssrgr::cli
