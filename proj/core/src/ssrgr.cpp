#include "ssrgr/ssrgr.hpp"

#include "ssrgr/data.hpp"
#include "ssrgr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace ssrgr {

// ---------------------------------------------------------------------------
// HyperParams

HyperParams HyperParams::linear_defaults() { return HyperParams{}; }

HyperParams HyperParams::kernel_defaults() {
  HyperParams hp;
  hp.lambda = 0.003;
  hp.alpha = 0.07;
  hp.label_consistency_weight = 0.0003;
  return hp;
}

Index HyperParams::resolved_dict_size(Index num_points, Index num_classes) const {
  if (dict_size > 0) return dict_size;
  return std::max<Index>(1, std::min(num_points, 15 * num_classes));
}

void HyperParams::validate() const {
  const auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::invalid_config, std::string(name) + " must be finite and >= 0");
    }
  };
  non_negative(lambda, "lambda");
  non_negative(label_consistency_weight, "label_consistency_weight");
  non_negative(beta1, "beta1");
  non_negative(beta2, "beta2");
  non_negative(beta3, "beta3");
  non_negative(early_stop_tol, "early_stop_tol");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::invalid_config,
                "alpha must be positive (the classifier is recovered by dividing by sqrt(alpha))");
  }
  if (!(ridge_mu > 0.0) || !std::isfinite(ridge_mu)) {
    throw Error(ErrorKind::invalid_config, "ridge_mu must be positive");
  }
  if (dict_size < 0 || outer_iters < 0 || init_rounds < 0 || init_admm_iters < 1) {
    throw Error(ErrorKind::invalid_config,
                "dict_size, outer_iters and init_rounds must be >= 0, init_admm_iters >= 1");
  }
  sparse_coding_config().validate();
}

// ---------------------------------------------------------------------------
// Shared pieces

namespace detail {

Matrix solve_label_system(const Matrix& rhs, const Matrix& system) {
  if (system.rows() != system.cols() || rhs.cols() != system.rows()) {
    throw Error(ErrorKind::dimension_mismatch, "label system shapes are inconsistent");
  }
  require_finite(system, "label system matrix");
  const Eigen::PartialPivLU<Matrix> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond >= 1e-12)) {
    throw Error(ErrorKind::indefinite_laplacian,
                "label update system is numerically singular (condition estimate " +
                    std::to_string(rcond > 0.0 ? 1.0 / rcond : INFINITY) +
                    "); the combined Laplacian is too indefinite, reduce beta3");
  }
  return lu.solve(rhs.transpose()).transpose();
}

Matrix initial_label_scores(const LabelConstraint& lc, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix h(lc.num_classes(), lc.num_points());
  for (Index j = 0; j < h.cols(); ++j) {
    if (lc.indicator(j) != 0.0) {
      h.col(j) = lc.targets.col(j);
    } else {
      for (Index i = 0; i < h.rows(); ++i) h(i, j) = unif(rng);
    }
  }
  return h;
}

Matrix ridge_classifier(const Matrix& label_scores, const Matrix& codes, double alpha, double mu) {
  Matrix system = alpha * codes * codes.transpose();
  system.diagonal().array() += mu;
  // W system = alpha H S^T; system is SPD for mu > 0.
  const Matrix rhs = alpha * label_scores * codes.transpose();
  return system.llt().solve(rhs.transpose()).transpose();
}

double label_terms(const Matrix& classifier, const Matrix& codes, const Matrix& label_scores,
                   const Matrix& laplacian, const LabelConstraint& lc, double alpha,
                   double gamma) {
  const Matrix& h = label_scores;
  const double fit_term = alpha * (h - classifier * codes).squaredNorm();
  const double graph_term = (h * laplacian).cwiseProduct(h).sum();
  const Matrix gap = h - lc.targets;
  const double consistency = gamma * (gap.colwise().squaredNorm().transpose().cwiseProduct(lc.indicator)).sum();
  return fit_term + graph_term + consistency;
}

bool relative_change_below(double previous, double current, double tol) {
  if (tol <= 0.0) return false;
  return std::abs(previous - current) <= tol * std::max(std::abs(previous), 1e-300);
}

Matrix safeguarded_codes(const Matrix& previous, const solvers::AdmmState& state,
                         const std::function<double(const Matrix&)>& coding_objective) {
  const Matrix* best = &state.codes;
  double best_value = coding_objective(state.codes);
  for (const Matrix* candidate : {&state.split, &previous}) {
    const double value = coding_objective(*candidate);
    if (value < best_value) {
      best_value = value;
      best = candidate;
    }
  }
  return *best;
}

/// Column indices of the starting atoms: a seeded permutation of the data columns.
std::vector<Index> starting_atoms(Index num_points, Index dict_size, std::mt19937_64& rng) {
  std::vector<Index> order(static_cast<std::size_t>(num_points));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(std::min(num_points, dict_size)));
  return order;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear estimator

Matrix prepare_features(const Matrix& features, const HyperParams& hp) {
  require_finite(features, "feature matrix");
  return hp.normalize ? data::normalize_columns(features) : features;
}

graphs::GraphSet euclidean_graphs(const Matrix& prepared, const Labels& labels,
                                  const graphs::GraphConfig& cfg) {
  return graphs::build_graphs(graphs::squared_distances(prepared), labels, cfg);
}

SsrgrModel initialize(const Matrix& features, const LabelConstraint& lc, const HyperParams& hp,
                      solvers::AdmmState* coding_state) {
  hp.validate();
  const Index d = features.rows();
  const Index n = features.cols();
  if (lc.num_points() != n) {
    throw Error(ErrorKind::dimension_mismatch, "label constraint and data disagree on n");
  }
  lc.require_every_class();
  const Index k = hp.resolved_dict_size(n, lc.num_classes());
  std::mt19937_64 rng(hp.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix dict(d, k);
  const auto atoms = detail::starting_atoms(n, k, rng);
  for (Index j = 0; j < k; ++j) {
    if (j < static_cast<Index>(atoms.size())) {
      dict.col(j) = features.col(atoms[static_cast<std::size_t>(j)]);
    } else {
      for (Index r = 0; r < d; ++r) dict(r, j) = normal(rng);
    }
    const double norm = dict.col(j).norm();
    if (norm > 0.0) dict.col(j) /= norm;
  }

  solvers::AdmmConfig coding = hp.sparse_coding_config();
  coding.max_iters = hp.init_admm_iters;
  coding.tol = 0.0;
  for (Index round = 0; round < hp.init_rounds; ++round) {
    const Matrix codes = solvers::lasso_admm(features, dict, coding);
    dict = solvers::lagrange_dual_dictionary(features, codes, 1.0, dict);
  }
  solvers::AdmmState state;
  solvers::lasso_admm(features, dict, coding, state);

  SsrgrModel model;
  model.dictionary = std::move(dict);
  model.codes = state.codes;
  if (coding_state) *coding_state = std::move(state);
  model.label_scores = detail::initial_label_scores(lc, rng);
  model.classifier =
      detail::ridge_classifier(model.label_scores, model.codes, hp.alpha, hp.ridge_mu);
  return model;
}

DictionaryClassifier update_dictionary_classifier(const SsrgrModel& model, const Matrix& features,
                                                  double alpha) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorKind::invalid_config, "alpha must be positive to split the stacked dictionary");
  }
  const Index d = features.rows();
  const Index c = model.label_scores.rows();
  const double root = std::sqrt(alpha);

  Matrix stacked_data(d + c, features.cols());
  stacked_data << features, root * model.label_scores;
  Matrix stacked_dict(d + c, model.dictionary.cols());
  stacked_dict << model.dictionary, root * model.classifier;

  const Matrix updated =
      solvers::lagrange_dual_dictionary(stacked_data, model.codes, 1.0 + alpha, stacked_dict);
  return {updated.topRows(d), updated.bottomRows(c) / root};
}

Matrix update_labels(const SsrgrModel& model, const Matrix& laplacian, const LabelConstraint& lc,
                     double alpha, double gamma) {
  const Index n = model.label_scores.cols();
  if (laplacian.rows() != n || laplacian.cols() != n || lc.num_points() != n) {
    throw Error(ErrorKind::dimension_mismatch, "Laplacian / label constraint size differs from n");
  }
  Matrix system = 0.5 * (laplacian + laplacian.transpose());
  system.diagonal().array() += alpha;
  system.diagonal() += gamma * lc.indicator;
  const Matrix rhs = alpha * model.classifier * model.codes +
                     gamma * lc.targets * lc.indicator.asDiagonal();
  return detail::solve_label_system(rhs, system);
}

double objective(const SsrgrModel& model, const Matrix& features, const Matrix& laplacian,
                 const LabelConstraint& lc, const HyperParams& hp) {
  return solvers::lasso_objective(features, model.dictionary, model.codes, hp.lambda) +
         detail::label_terms(model.classifier, model.codes, model.label_scores, laplacian, lc,
                             hp.alpha, hp.label_consistency_weight);
}

namespace {

void check_fit_inputs(const Matrix& features, const Labels& labels, Index num_classes) {
  if (static_cast<Index>(labels.size()) != features.cols()) {
    throw Error(ErrorKind::dimension_mismatch,
                std::to_string(labels.size()) + " labels for " + std::to_string(features.cols()) +
                    " samples");
  }
  if (num_classes < 1) throw Error(ErrorKind::invalid_labels, "at least one class is required");
  const auto counts = labeled_class_counts(labels, num_classes);
  for (std::size_t cls = 0; cls < counts.size(); ++cls) {
    if (counts[cls] == 0) {
      throw Error(ErrorKind::invalid_labels,
                  "class " + std::to_string(cls + 1) + " has no labeled samples");
    }
  }
}

}  // namespace

SsrgrFit fit(const Matrix& features, const Labels& labels, Index num_classes,
             const HyperParams& hp) {
  hp.validate();
  check_fit_inputs(features, labels, num_classes);
  const Matrix x = prepare_features(features, hp);
  const auto graphs = euclidean_graphs(x, labels, hp.graph);
  const Matrix laplacian = graphs.laplacians.combine(hp.beta1, hp.beta2, hp.beta3).matrix;
  const LabelConstraint lc = LabelConstraint::from_labels(labels, num_classes);

  SsrgrFit result;
  solvers::AdmmState state;
  result.model = initialize(x, lc, hp, &state);
  SsrgrModel& m = result.model;
  result.initial_objective = objective(m, x, laplacian, lc, hp);

  const double root = std::sqrt(hp.alpha);
  const solvers::AdmmConfig coding = hp.sparse_coding_config();
  double previous = result.initial_objective;

  for (Index it = 0; it < hp.outer_iters; ++it) {
    auto dw = update_dictionary_classifier(m, x, hp.alpha);
    m.dictionary = std::move(dw.dictionary);
    m.classifier = std::move(dw.classifier);

    Matrix stacked_data(x.rows() + m.label_scores.rows(), x.cols());
    stacked_data << x, root * m.label_scores;
    Matrix stacked_dict(x.rows() + m.classifier.rows(), m.dictionary.cols());
    stacked_dict << m.dictionary, root * m.classifier;
    solvers::lasso_admm(stacked_data, stacked_dict, coding, state);
    m.codes = detail::safeguarded_codes(m.codes, state, [&](const Matrix& s) {
      return solvers::lasso_objective(stacked_data, stacked_dict, s, hp.lambda);
    });

    m.label_scores = update_labels(m, laplacian, lc, hp.alpha, hp.label_consistency_weight);

    const double current = objective(m, x, laplacian, lc, hp);
    result.trace.push_back(current);
    if (detail::relative_change_below(previous, current, hp.early_stop_tol)) {
      result.stopped_early = true;
      break;
    }
    previous = current;
  }
  return result;
}

Vector inductive_scores(const SsrgrModel& model, const Vector& sample, const HyperParams& hp) {
  if (sample.size() != model.dictionary.rows()) {
    throw Error(ErrorKind::dimension_mismatch,
                "sample has dimension " + std::to_string(sample.size()) + ", model expects " +
                    std::to_string(model.dictionary.rows()));
  }
  require_finite(sample, "sample");
  Vector x = sample;
  if (hp.normalize && x.norm() > 0.0) x /= x.norm();

  solvers::AdmmConfig coding = hp.sparse_coding_config();
  coding.max_iters = std::max<Index>(coding.max_iters, 2000);
  coding.tol = 1e-10;
  const Matrix s = solvers::lasso_admm(x, model.dictionary, coding);
  return model.classifier * s;
}

Index predict_inductive(const SsrgrModel& model, const Vector& sample, const HyperParams& hp) {
  return argmax_class(inductive_scores(model, sample, hp));
}

}  // namespace ssrgr
