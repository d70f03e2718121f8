#include "ssrgr/kssrgr.hpp"

#include "ssrgr/error.hpp"
#include "ssrgr/ssrgr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace ssrgr::kernel {

const char* to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::linear: return "linear";
    case KernelKind::precomputed: return "precomputed";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "linear") return KernelKind::linear;
  if (name == "precomputed") return KernelKind::precomputed;
  throw Error(ErrorKind::invalid_config, "unknown kernel kind '" + name + "'");
}

double median_heuristic_sigma(const Matrix& points) {
  const Index n = points.cols();
  if (n < 2) throw Error(ErrorKind::invalid_config, "median heuristic needs at least 2 points");
  std::vector<double> sq;
  sq.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) sq.push_back((points.col(i) - points.col(j)).squaredNorm());
  }
  const auto mid = sq.begin() + static_cast<std::ptrdiff_t>(sq.size() / 2);
  std::nth_element(sq.begin(), mid, sq.end());
  double median = *mid;
  if (sq.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(sq.begin(), mid));
  }
  if (!(median > 0.0)) {
    throw Error(ErrorKind::invalid_config,
                "median pairwise distance is zero; set the gaussian sigma explicitly");
  }
  return std::sqrt(median);
}

KernelConfig resolve(const KernelConfig& cfg, const Matrix& points) {
  KernelConfig out = cfg;
  if (cfg.kind == KernelKind::gaussian) {
    if (cfg.sigma < 0.0 || !std::isfinite(cfg.sigma)) {
      throw Error(ErrorKind::invalid_config, "gaussian sigma must be positive");
    }
    if (cfg.sigma == 0.0) out.sigma = median_heuristic_sigma(points);
  }
  return out;
}

KernelGram gaussian_kernel(const Matrix& points, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::invalid_config, "gaussian sigma must be positive");
  }
  require_finite(points, "point matrix");
  const Index n = points.cols();
  const double inv = 1.0 / (sigma * sigma);
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j) {
    k(j, j) = 1.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-(points.col(i) - points.col(j)).squaredNorm() * inv);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return KernelGram::trusted(std::move(k));
}

KernelGram linear_kernel(const Matrix& points) {
  require_finite(points, "point matrix");
  Matrix k = points.transpose() * points;
  return KernelGram::trusted(0.5 * (k + k.transpose()));
}

KernelGram build_kernel(const Matrix& points, const KernelConfig& resolved) {
  switch (resolved.kind) {
    case KernelKind::gaussian: return gaussian_kernel(points, resolved.sigma);
    case KernelKind::linear: return linear_kernel(points);
    case KernelKind::precomputed: break;
  }
  throw Error(ErrorKind::invalid_config, "a precomputed kernel cannot be built from features");
}

Vector kernel_row(const Matrix& train, const Vector& sample, const KernelConfig& resolved) {
  if (sample.size() != train.rows()) {
    throw Error(ErrorKind::dimension_mismatch,
                "sample has dimension " + std::to_string(sample.size()) + ", training data has " +
                    std::to_string(train.rows()));
  }
  switch (resolved.kind) {
    case KernelKind::gaussian: {
      const double inv = 1.0 / (resolved.sigma * resolved.sigma);
      return (-(train.colwise() - sample).colwise().squaredNorm().transpose() * inv)
          .array()
          .exp()
          .matrix();
    }
    case KernelKind::linear: return train.transpose() * sample;
    case KernelKind::precomputed: break;
  }
  throw Error(ErrorKind::invalid_config,
              "a precomputed kernel cannot be evaluated on new samples; supply the kernel row");
}

double kernel_distance(const Matrix& gram, Index i, Index j) {
  if (i == j) return 0.0;
  return gram(i, i) - 2.0 * gram(i, j) + gram(j, j);
}

Matrix kernel_sq_distances(const Matrix& gram) {
  const Index n = gram.rows();
  Matrix d(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) d(i, j) = kernel_distance(gram, i, j);
  }
  return d;
}

graphs::GraphSet kernel_graphs(const KernelGram& gram, const Labels& labels,
                               const graphs::GraphConfig& cfg) {
  return graphs::build_graphs(kernel_sq_distances(gram.values()), labels, cfg);
}

double kernel_objective(const KernelModel& model, const Matrix& laplacian,
                        const LabelConstraint& lc, const HyperParams& hp) {
  return solvers::kernel_fidelity(model.gram, model.coeffs, model.codes) +
         hp.lambda * model.codes.cwiseAbs().sum() +
         detail::label_terms(model.classifier, model.codes, model.label_scores, laplacian, lc,
                             hp.alpha, hp.label_consistency_weight);
}

Matrix update_classifier(const Matrix& codes, const Matrix& label_scores, double alpha,
                         const Matrix& previous) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorKind::invalid_config, "alpha must be positive for the classifier update");
  }
  // alpha scales the objective only; the constrained minimizer is alpha-free.
  return solvers::lagrange_dual_dictionary(label_scores, codes, 1.0, previous);
}

Matrix update_labels_kernel(const KernelModel& model, const Matrix& laplacian,
                            const LabelConstraint& lc, double alpha, double gamma) {
  const Index n = model.label_scores.cols();
  if (laplacian.rows() != n || laplacian.cols() != n || lc.num_points() != n) {
    throw Error(ErrorKind::dimension_mismatch, "Laplacian / label constraint size differs from n");
  }
  Matrix system = laplacian + laplacian.transpose();
  system.diagonal().array() += 2.0 * alpha;
  system.diagonal() += 2.0 * gamma * lc.indicator;
  const Matrix rhs = 2.0 * alpha * model.classifier * model.codes +
                     2.0 * gamma * lc.targets * lc.indicator.asDiagonal();
  return detail::solve_label_system(rhs, system);
}

KernelModel initialize_kernel(const KernelGram& gram, const LabelConstraint& lc,
                              const HyperParams& hp, solvers::AdmmState* coding_state) {
  hp.validate();
  const Matrix& k = gram.values();
  const Index n = k.rows();
  if (lc.num_points() != n) {
    throw Error(ErrorKind::dimension_mismatch, "label constraint and kernel disagree on n");
  }
  lc.require_every_class();
  const Index atoms_count = hp.resolved_dict_size(n, lc.num_classes());
  std::mt19937_64 rng(hp.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix coeffs = Matrix::Zero(n, atoms_count);
  const auto atoms = detail::starting_atoms(n, atoms_count, rng);
  for (Index j = 0; j < atoms_count; ++j) {
    if (j < static_cast<Index>(atoms.size())) {
      const Index a = atoms[static_cast<std::size_t>(j)];
      if (k(a, a) > 0.0) coeffs(a, j) = 1.0 / std::sqrt(k(a, a));
    } else {
      for (Index r = 0; r < n; ++r) coeffs(r, j) = normal(rng);
      const double sq = coeffs.col(j).dot(k * coeffs.col(j));
      if (sq > 0.0) coeffs.col(j) /= std::sqrt(sq);
    }
  }

  solvers::AdmmConfig coding = hp.sparse_coding_config();
  coding.max_iters = hp.init_admm_iters;
  coding.tol = 0.0;
  const Matrix no_classifier(0, atoms_count);
  const Matrix no_labels(0, n);
  for (Index round = 0; round < hp.init_rounds; ++round) {
    const Matrix codes =
        solvers::kernel_lasso_admm(gram, coeffs, no_classifier, no_labels, 0.0, coding);
    coeffs = solvers::kernel_dictionary_update(codes, gram, 1.0, coeffs);
  }
  solvers::AdmmState state;
  solvers::kernel_lasso_admm(gram, coeffs, no_classifier, no_labels, 0.0, coding, state);

  KernelModel model;
  model.gram = gram;
  model.coeffs = std::move(coeffs);
  model.codes = state.codes;
  if (coding_state) *coding_state = std::move(state);
  model.label_scores = detail::initial_label_scores(lc, rng);
  model.classifier =
      detail::ridge_classifier(model.label_scores, model.codes, hp.alpha, hp.ridge_mu);
  return model;
}

namespace {

KernelFit run_kernel_fit(const KernelGram& gram, const Labels& labels, Index num_classes,
                         const HyperParams& hp) {
  const Index n = gram.size();
  if (static_cast<Index>(labels.size()) != n) {
    throw Error(ErrorKind::dimension_mismatch,
                std::to_string(labels.size()) + " labels for a kernel over " + std::to_string(n) +
                    " samples");
  }
  const auto counts = labeled_class_counts(labels, num_classes);
  for (std::size_t cls = 0; cls < counts.size(); ++cls) {
    if (counts[cls] == 0) {
      throw Error(ErrorKind::invalid_labels,
                  "class " + std::to_string(cls + 1) + " has no labeled samples");
    }
  }
  const auto graphs = kernel_graphs(gram, labels, hp.graph);
  const Matrix laplacian = graphs.laplacians.combine(hp.beta1, hp.beta2, hp.beta3).matrix;
  const LabelConstraint lc = LabelConstraint::from_labels(labels, num_classes);

  KernelFit result;
  solvers::AdmmState state;
  result.model = initialize_kernel(gram, lc, hp, &state);
  KernelModel& m = result.model;
  result.initial_objective = kernel_objective(m, laplacian, lc, hp);

  const solvers::AdmmConfig coding = hp.sparse_coding_config();
  double previous = result.initial_objective;

  for (Index it = 0; it < hp.outer_iters; ++it) {
    m.coeffs = solvers::kernel_dictionary_update(m.codes, gram, 1.0, m.coeffs);
    solvers::kernel_lasso_admm(gram, m.coeffs, m.classifier, m.label_scores, hp.alpha, coding,
                               state);
    m.codes = detail::safeguarded_codes(m.codes, state, [&](const Matrix& s) {
      return solvers::kernel_fidelity(gram, m.coeffs, s) + hp.lambda * s.cwiseAbs().sum() +
             hp.alpha * (m.label_scores - m.classifier * s).squaredNorm();
    });
    m.classifier = update_classifier(m.codes, m.label_scores, hp.alpha, m.classifier);
    m.label_scores = update_labels_kernel(m, laplacian, lc, hp.alpha, hp.label_consistency_weight);

    const double current = kernel_objective(m, laplacian, lc, hp);
    result.trace.push_back(current);
    if (detail::relative_change_below(previous, current, hp.early_stop_tol)) {
      result.stopped_early = true;
      break;
    }
    previous = current;
  }
  return result;
}

}  // namespace

KernelFit fit_kernel(const Matrix& features, const Labels& labels, Index num_classes,
                     const HyperParams& hp, const KernelConfig& cfg) {
  hp.validate();
  const Matrix x = prepare_features(features, hp);
  const KernelConfig resolved = resolve(cfg, x);
  KernelFit fit = run_kernel_fit(build_kernel(x, resolved), labels, num_classes, hp);
  fit.kernel = resolved;
  return fit;
}

KernelFit fit_kernel(const KernelGram& gram, const Labels& labels, Index num_classes,
                     const HyperParams& hp) {
  hp.validate();
  KernelFit fit = run_kernel_fit(gram, labels, num_classes, hp);
  fit.kernel = KernelConfig{KernelKind::precomputed, 0.0};
  return fit;
}

Vector kernel_scores_from_row(const KernelModel& model, const Vector& row, const HyperParams& hp) {
  const Matrix& k = model.gram.values();
  if (row.size() != k.rows()) {
    throw Error(ErrorKind::dimension_mismatch,
                "kernel row has " + std::to_string(row.size()) + " entries, model has " +
                    std::to_string(k.rows()) + " training samples");
  }
  require_finite(row, "kernel row");
  const Matrix q = model.coeffs.transpose() * k * model.coeffs;
  const Matrix r = model.coeffs.transpose() * row;

  solvers::AdmmConfig coding = hp.sparse_coding_config();
  coding.max_iters = std::max<Index>(coding.max_iters, 2000);
  coding.tol = 1e-10;
  solvers::AdmmState state;
  solvers::quadratic_l1_admm(q, r, coding, state);
  return model.classifier * state.codes;
}

Vector inductive_scores_kernel(const KernelModel& model, const Matrix& train,
                              const Vector& sample, const KernelConfig& resolved,
                              const HyperParams& hp) {
  if (train.cols() != model.gram.size()) {
    throw Error(ErrorKind::dimension_mismatch, "training matrix does not match the model's kernel");
  }
  const Matrix x_train = prepare_features(train, hp);
  Vector x = sample;
  if (x.size() != train.rows()) {
    throw Error(ErrorKind::dimension_mismatch,
                "sample has dimension " + std::to_string(x.size()) + ", model expects " +
                    std::to_string(train.rows()));
  }
  if (hp.normalize && x.norm() > 0.0) x /= x.norm();
  return kernel_scores_from_row(model, kernel_row(x_train, x, resolved), hp);
}

Index predict_inductive_kernel(const KernelModel& model, const Matrix& train,
                               const Vector& sample, const KernelConfig& resolved,
                               const HyperParams& hp) {
  return argmax_class(inductive_scores_kernel(model, train, sample, resolved, hp));
}

}  // namespace ssrgr::kernel
