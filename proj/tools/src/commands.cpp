#include "commands.hpp"

#include <ssrgr/labels.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ssrgr::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool precomputed(const RunConfig& cfg) {
  return cfg.mode == Mode::kernel && cfg.kernel.kind == kernel::KernelKind::precomputed;
}

Matrix project(const RunConfig& cfg, const Matrix& features) {
  if (cfg.projection_dim == 0) return features;
  if (precomputed(cfg)) {
    throw Error(ErrorKind::invalid_config, "a precomputed kernel cannot be randomly projected");
  }
  return data::random_projection(features, cfg.projection_dim, cfg.seed);
}

Json config_json(const boost::property_tree::ptree& tree) {
  Json out = Json::object();
  for (const auto& [section, body] : tree) {
    Json entries = Json::object();
    for (const auto& [key, value] : body) entries[key] = value.data();
    out[section] = std::move(entries);
  }
  return out;
}

Json nullable(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

std::vector<Index> one_based(const Labels& labels) {
  std::vector<Index> out;
  out.reserve(labels.size());
  for (const auto& y : labels) out.push_back(y ? *y + 1 : 0);
  return out;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_config: return 1;
    case ErrorKind::degenerate_graph:
    case ErrorKind::indefinite_laplacian: return 3;
    default: return 2;
  }
}

TrainOutcome run_training(const RunConfig& cfg) {
  const auto start = Clock::now();
  if (cfg.data_path.empty()) throw Error(ErrorKind::invalid_config, "no dataset path configured");
  const data::Dataset ds = data::load_dataset(cfg.data_path, cfg.resolved_format());
  if (ds.class_count < 1) {
    throw Error(ErrorKind::invalid_labels, cfg.data_path.string() + " carries no class labels");
  }

  TrainOutcome out;
  StoredModel& m = out.model;
  m.config = cfg;
  m.config.source_dim = ds.dim();
  m.class_count = ds.class_count;
  m.train_features = project(cfg, ds.features);
  const auto split = data::split(ds, cfg.split);
  m.train_labels = data::training_labels(ds, split);

  double initial = 0.0;
  std::vector<double> trace;
  bool stopped_early = false;
  if (cfg.mode == Mode::linear) {
    auto fit = ssrgr::fit(m.train_features, m.train_labels, m.class_count, cfg.hp);
    m.linear = std::move(fit.model);
    m.resolved = cfg.kernel;
    initial = fit.initial_objective;
    trace = std::move(fit.trace);
    stopped_early = fit.stopped_early;
  } else {
    auto fit = precomputed(cfg)
                   ? kernel::fit_kernel(kernel::KernelGram::from_matrix(m.train_features),
                                        m.train_labels, m.class_count, cfg.hp)
                   : kernel::fit_kernel(m.train_features, m.train_labels, m.class_count, cfg.hp,
                                        cfg.kernel);
    m.kernel = std::move(fit.model);
    m.resolved = fit.kernel;
    initial = fit.initial_objective;
    trace = std::move(fit.trace);
    stopped_early = fit.stopped_early;
  }

  const auto predicted = predict_transductive(m.label_scores());
  std::vector<Index> hidden_truth(ds.labels.size(), 0);
  for (Index j : split.unlabeled) {
    const auto& y = ds.labels[static_cast<std::size_t>(j)];
    hidden_truth[static_cast<std::size_t>(j)] = y ? *y + 1 : 0;
  }
  std::vector<Index> predicted_one_based;
  for (Index p : predicted) predicted_one_based.push_back(p + 1);
  const EvalResult hidden = evaluate(predicted_one_based, hidden_truth);
  const EvalResult all = evaluate(predicted_one_based, one_based(ds.labels));

  Json& r = out.report;
  r["mode"] = to_string(cfg.mode);
  r["seed"] = cfg.seed;
  r["num_points"] = ds.size();
  r["num_labeled"] = split.labeled.size();
  r["num_classes"] = m.class_count;
  r["accuracy"] = nullable(hidden.evaluated ? hidden.accuracy : std::nan(""));
  r["accuracy_all"] = nullable(all.evaluated ? all.accuracy : std::nan(""));
  Json per_class = Json::array();
  for (double a : hidden.per_class_accuracy) per_class.push_back(nullable(a));
  r["per_class_accuracy"] = std::move(per_class);
  r["initial_objective"] = initial;
  r["objective_trace"] = trace;
  r["outer_iterations"] = trace.size();
  r["stopped_early"] = stopped_early;
  if (cfg.mode == Mode::kernel) {
    r["kernel"] = {{"kind", kernel::to_string(m.resolved.kind)}, {"sigma", m.resolved.sigma}};
  }
  r["config"] = config_json(echo_config(m.config));
  r["wall_clock_seconds"] = seconds_since(start);
  return out;
}

TrainOutcome cmd_train(const RunConfig& cfg) {
  if (cfg.model_path.empty()) throw Error(ErrorKind::invalid_config, "no model output path");
  TrainOutcome out = run_training(cfg);
  std::filesystem::path report = cfg.report_path;
  if (report.empty()) {
    report = cfg.model_path;
    report += ".report.json";
  }
  save_model(out.model, cfg.model_path);
  write_file_atomic(report, out.report.dump(2) + "\n");
  return out;
}

std::vector<Prediction> predict(const StoredModel& model, const data::Dataset& samples) {
  std::vector<Prediction> out;
  if (samples.size() == 0) return out;
  const RunConfig& cfg = model.config;
  const Index n = model.train_features.cols();
  const Index expected = precomputed(cfg) ? n
                         : cfg.source_dim > 0 ? cfg.source_dim
                                              : model.train_features.rows();
  if (samples.dim() != expected) {
    throw Error(ErrorKind::dimension_mismatch,
                "dataset has dimension " + std::to_string(samples.dim()) + ", model expects " +
                    std::to_string(expected));
  }
  const Matrix x = project(cfg, samples.features);
  const Matrix& scores = model.label_scores();
  out.reserve(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    Prediction p;
    Index match = -1;
    for (Index i = 0; i < n && match < 0; ++i) {
      if (model.train_features.col(i) == x.col(j)) match = i;
    }
    if (match >= 0) {
      p.scores = scores.col(match);
    } else if (cfg.mode == Mode::linear) {
      p.scores = inductive_scores(model.linear, x.col(j), cfg.hp);
    } else if (precomputed(cfg)) {
      p.scores = kernel::kernel_scores_from_row(model.kernel, x.col(j), cfg.hp);
    } else {
      p.scores = kernel::inductive_scores_kernel(model.kernel, model.train_features, x.col(j),
                                                 model.resolved, cfg.hp);
    }
    p.label = argmax_class(p.scores);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> cmd_predict(const std::filesystem::path& model_path,
                                    const std::filesystem::path& data_path,
                                    const std::filesystem::path& out_path) {
  const StoredModel model = load_model(model_path);
  const data::Dataset ds = data::load_dataset(data_path, data::format_for(data_path));
  const auto predictions = predict(model, ds);
  std::ostringstream text;
  text << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : predictions) {
    text << p.label + 1;
    for (Index c = 0; c < p.scores.size(); ++c) text << ' ' << p.scores(c);
    text << '\n';
  }
  write_file_atomic(out_path, text.str());
  return predictions;
}

std::vector<Index> read_prediction_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<Index> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::size_t used = 0;
    long long value = -1;
    try {
      value = std::stoll(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || value < 0) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) +
                                        ": expected a class id, got '" + token + "'");
    }
    labels.push_back(static_cast<Index>(value));
  }
  return labels;
}

EvalResult evaluate(const std::vector<Index>& predicted, const std::vector<Index>& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truth.size()) + " truth labels");
  }
  Index classes = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    classes = std::max({classes, truth[j], predicted[j]});
  }
  EvalResult r;
  r.confusion.assign(static_cast<std::size_t>(classes),
                     std::vector<Index>(static_cast<std::size_t>(classes), 0));
  Index correct = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (truth[j] == 0) {
      ++r.skipped;
      continue;
    }
    ++r.evaluated;
    if (predicted[j] == truth[j]) ++correct;
    if (predicted[j] > 0) {
      ++r.confusion[static_cast<std::size_t>(truth[j] - 1)][static_cast<std::size_t>(predicted[j] - 1)];
    }
  }
  r.accuracy = r.evaluated ? static_cast<double>(correct) / static_cast<double>(r.evaluated) : 0.0;
  std::vector<Index> members(static_cast<std::size_t>(classes), 0);
  for (Index t : truth) {
    if (t > 0) ++members[static_cast<std::size_t>(t - 1)];
  }
  for (std::size_t c = 0; c < members.size(); ++c) {
    r.per_class_accuracy.push_back(members[c] ? static_cast<double>(r.confusion[c][c]) /
                                                    static_cast<double>(members[c])
                                              : std::nan(""));
  }
  return r;
}

Json to_json(const EvalResult& result) {
  Json j;
  j["accuracy"] = result.accuracy;
  j["evaluated"] = result.evaluated;
  j["skipped"] = result.skipped;
  Json per_class = Json::array();
  for (double a : result.per_class_accuracy) per_class.push_back(nullable(a));
  j["per_class_accuracy"] = std::move(per_class);
  j["confusion"] = result.confusion;
  return j;
}

EvalResult cmd_eval(const std::filesystem::path& predictions, const std::filesystem::path& truth,
                    bool truth_is_dataset) {
  const auto predicted = read_prediction_labels(predictions);
  const auto expected =
      truth_is_dataset ? one_based(data::load_dataset(truth, data::format_for(truth)).labels)
                       : read_prediction_labels(truth);
  return evaluate(predicted, expected);
}

BetaPattern pattern_from_string(const std::string& text) {
  if (text.size() != 3 || text.find_first_not_of("01") != std::string::npos) {
    throw Error(ErrorKind::invalid_config,
                "beta pattern '" + text + "' must be three 0/1 digits, e.g. 110");
  }
  return {text[0] == '1', text[1] == '1', text[2] == '1'};
}

std::string to_string(const BetaPattern& pattern) {
  std::string s;
  for (bool b : pattern) s += b ? '1' : '0';
  return s;
}

std::vector<BetaPattern> default_patterns() {
  return {{false, false, false}, {true, false, false}, {true, true, true}};
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::vector<BetaPattern>& patterns,
                                    const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error(ErrorKind::invalid_config, "ablation needs at least one seed");
  std::vector<AblationRow> rows;
  for (const auto& pattern : patterns) {
    AblationRow row;
    row.pattern = pattern;
    const auto start = Clock::now();
    for (std::uint64_t seed : seeds) {
      RunConfig run = cfg;
      apply_seed(run, seed);
      if (!pattern[0]) run.hp.beta1 = 0.0;
      if (!pattern[1]) run.hp.beta2 = 0.0;
      if (!pattern[2]) run.hp.beta3 = 0.0;
      const auto outcome = run_training(run);
      const auto& acc = outcome.report["accuracy"];
      row.accuracies.push_back(acc.is_null() ? std::nan("") : acc.get<double>());
    }
    row.seconds = seconds_since(start);
    double sum = 0.0;
    for (double a : row.accuracies) sum += a;
    row.mean_accuracy = sum / static_cast<double>(row.accuracies.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const std::vector<AblationRow>& rows) {
  Json out = Json::array();
  for (const auto& row : rows) {
    Json accs = Json::array();
    for (double a : row.accuracies) accs.push_back(nullable(a));
    out.push_back({{"pattern", to_string(row.pattern)},
                   {"beta1", row.pattern[0]},
                   {"beta2", row.pattern[1]},
                   {"beta3", row.pattern[2]},
                   {"accuracies", std::move(accs)},
                   {"mean_accuracy", nullable(row.mean_accuracy)},
                   {"seconds", row.seconds}});
  }
  return out;
}

std::string format_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(36) << "configuration" << std::right << std::setw(10)
      << "accuracy" << std::setw(10) << "seconds" << '\n';
  for (const auto& row : rows) {
    std::string name = "(";
    for (int b = 0; b < 3; ++b) {
      if (b) name += ", ";
      name += "beta" + std::to_string(b + 1) + (row.pattern[static_cast<std::size_t>(b)] ? "!=0" : "=0");
    }
    name += ")";
    out << std::left << std::setw(36) << name << std::right << std::fixed << std::setprecision(2)
        << std::setw(10) << 100.0 * row.mean_accuracy << std::setw(10) << row.seconds << '\n';
  }
  return out.str();
}

}  // namespace ssrgr::cli
