#include "ssrgr/sparse_solvers.hpp"

#include "ssrgr/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ssrgr::solvers {

void AdmmConfig::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorKind::invalid_config, "ADMM penalty rho must be positive");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::invalid_config, "l1 weight lambda must be non-negative");
  }
  if (max_iters < 1) {
    throw Error(ErrorKind::invalid_config, "ADMM max_iters must be at least 1");
  }
  if (!(tol >= 0.0)) {
    throw Error(ErrorKind::invalid_config, "ADMM tolerance must be non-negative");
  }
}

void AdmmState::reset(Index k, Index n) {
  codes = Matrix::Zero(k, n);
  split = Matrix::Zero(k, n);
  dual = Matrix::Zero(k, n);
}

void AdmmState::start_from(const Matrix& s) {
  codes = s;
  split = s;
  dual = Matrix::Zero(s.rows(), s.cols());
}

// ---------------------------------------------------------------------------
// Kernel Gram

KernelGram KernelGram::from_matrix(Matrix values) {
  if (values.rows() != values.cols()) {
    throw Error(ErrorKind::invalid_kernel, "kernel matrix must be square");
  }
  if (!values.allFinite()) {
    throw Error(ErrorKind::invalid_kernel, "kernel matrix has non-finite entries");
  }
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if ((values - values.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorKind::invalid_kernel, "kernel matrix is not symmetric");
  }
  Matrix sym = 0.5 * (values + values.transpose());
  if (sym.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < -1e-6) {
      throw Error(ErrorKind::invalid_kernel,
                  "kernel matrix is not positive semidefinite (min eigenvalue " +
                      std::to_string(min_eig) + ")");
    }
  }
  return KernelGram(std::move(sym));
}

KernelGram KernelGram::trusted(Matrix values) { return KernelGram(std::move(values)); }

// ---------------------------------------------------------------------------
// Soft thresholding and ADMM

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

Matrix soft_threshold(const Matrix& x, double t) {
  return x.unaryExpr([t](double v) { return soft_threshold(v, t); });
}

AdmmReport quadratic_l1_admm(const Matrix& quadratic, const Matrix& linear, const AdmmConfig& cfg,
                             AdmmState& state) {
  cfg.validate();
  const Index k = quadratic.rows();
  const Index m = linear.cols();
  if (quadratic.cols() != k || linear.rows() != k) {
    throw Error(ErrorKind::dimension_mismatch, "ADMM quadratic/linear terms disagree in size");
  }
  require_finite(quadratic, "ADMM quadratic term");
  require_finite(linear, "ADMM linear term");
  if (!state.matches(k, m)) state.reset(k, m);

  Matrix system = 2.0 * quadratic;
  system.diagonal().array() += cfg.rho;
  const Eigen::LLT<Matrix> chol(system);
  if (chol.info() != Eigen::Success) {
    throw Error(ErrorKind::numeric_input, "ADMM S-update system is not positive definite");
  }
  const Matrix twice_linear = 2.0 * linear;
  const double shrink = cfg.lambda / cfg.rho;

  AdmmReport report;
  Matrix previous_split;
  for (Index it = 0; it < cfg.max_iters; ++it) {
    previous_split = state.split;
    state.split = soft_threshold(state.codes + state.dual / cfg.rho, shrink);
    state.codes = chol.solve(twice_linear + cfg.rho * state.split - state.dual);
    state.dual += cfg.rho * (state.codes - state.split);

    report.iterations = it + 1;
    report.primal_residual = m > 0 ? (state.codes - state.split).cwiseAbs().maxCoeff() : 0.0;
    report.dual_residual =
        m > 0 ? cfg.rho * (state.split - previous_split).cwiseAbs().maxCoeff() : 0.0;
    if (cfg.tol > 0.0 && report.primal_residual <= cfg.tol && report.dual_residual <= cfg.tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

AdmmReport lasso_admm(const Matrix& data, const Matrix& dict, const AdmmConfig& cfg,
                      AdmmState& state) {
  if (data.rows() != dict.rows()) {
    throw Error(ErrorKind::dimension_mismatch,
                "data has " + std::to_string(data.rows()) + " rows, dictionary has " +
                    std::to_string(dict.rows()));
  }
  require_finite(data, "data matrix");
  require_finite(dict, "dictionary");
  const Matrix q = dict.transpose() * dict;
  const Matrix r = dict.transpose() * data;
  return quadratic_l1_admm(q, r, cfg, state);
}

Matrix lasso_admm(const Matrix& data, const Matrix& dict, const AdmmConfig& cfg) {
  AdmmState state;
  lasso_admm(data, dict, cfg, state);
  return state.codes;
}

double lasso_objective(const Matrix& data, const Matrix& dict, const Matrix& codes,
                       double lambda) {
  return (data - dict * codes).squaredNorm() + lambda * codes.cwiseAbs().sum();
}

AdmmReport kernel_lasso_admm(const KernelGram& gram, const Matrix& coeffs,
                             const Matrix& classifier, const Matrix& label_scores, double alpha,
                             const AdmmConfig& cfg, AdmmState& state) {
  const Matrix& k = gram.values();
  if (coeffs.rows() != k.rows()) {
    throw Error(ErrorKind::dimension_mismatch, "coefficient matrix rows must match kernel size");
  }
  if (classifier.cols() != coeffs.cols() || label_scores.rows() != classifier.rows() ||
      label_scores.cols() != k.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "classifier / label matrix shapes are inconsistent");
  }
  require_finite(coeffs, "kernel dictionary coefficients");
  require_finite(classifier, "classifier");
  require_finite(label_scores, "label matrix");
  const Matrix kb = k * coeffs;
  Matrix q = coeffs.transpose() * kb;
  Matrix r = kb.transpose();
  if (alpha != 0.0) {
    q += alpha * classifier.transpose() * classifier;
    r += alpha * classifier.transpose() * label_scores;
  }
  return quadratic_l1_admm(q, r, cfg, state);
}

Matrix kernel_lasso_admm(const KernelGram& gram, const Matrix& coeffs, const Matrix& classifier,
                         const Matrix& label_scores, double alpha, const AdmmConfig& cfg) {
  AdmmState state;
  kernel_lasso_admm(gram, coeffs, classifier, label_scores, alpha, cfg, state);
  return state.codes;
}

// ---------------------------------------------------------------------------
// Norm-constrained least squares through the Lagrange dual

namespace {

/// Pseudo-inverse of a symmetric PSD matrix.
Matrix symmetric_pinv(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Vector& ev = eig.eigenvalues();
  const double cutoff = 1e-13 * std::max(1.0, ev.cwiseAbs().maxCoeff()) * static_cast<double>(m.rows());
  Vector inv(ev.size());
  for (Index i = 0; i < ev.size(); ++i) inv(i) = ev(i) > cutoff ? 1.0 / ev(i) : 0.0;
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

struct DualEval {
  double value = 0.0;
  Vector grad;
  Matrix hessian;
};

/// Inverse through Cholesky when well conditioned, otherwise the pseudo-inverse.
Matrix symmetric_inverse(const Matrix& m) {
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) {
    const Vector diag = Matrix(llt.matrixLLT()).diagonal();
    const double lo = diag.minCoeff();
    const double hi = diag.maxCoeff();
    if (lo > 0.0 && lo * lo >= 1e-10 * hi * hi) {
      return llt.solve(Matrix::Identity(m.rows(), m.cols()));
    }
  }
  return symmetric_pinv(m);
}

DualEval evaluate_dual(const Matrix& code_gram, const Matrix& cross, const Vector& multipliers,
                       double bound, bool with_hessian) {
  Matrix m = code_gram;
  m.diagonal() += multipliers;
  const Matrix m_inv = symmetric_inverse(m);
  DualEval out;
  out.value = (cross.cwiseProduct(m_inv)).sum() + bound * multipliers.sum();
  const Matrix atom_gram = m_inv * cross * m_inv;  // D^T D of the primal solution
  out.grad = Vector::Constant(multipliers.size(), bound) - atom_gram.diagonal();
  if (with_hessian) out.hessian = 2.0 * m_inv.cwiseProduct(atom_gram);
  return out;
}

}  // namespace

Vector solve_norm_dual(const Matrix& code_gram, const Matrix& cross, double norm_bound) {
  const Index k = code_gram.rows();
  Vector lambda = Vector::Zero(k);
  if (k == 0) return lambda;

  const double tol = 1e-9 * std::max(1.0, norm_bound);
  constexpr int kMaxNewton = 100;
  constexpr double kArmijo = 1e-4;

  DualEval cur = evaluate_dual(code_gram, cross, lambda, norm_bound, true);
  for (int iter = 0; iter < kMaxNewton; ++iter) {
    // Projected gradient: at the bound only negative components matter.
    double pg = 0.0;
    std::vector<Index> free;
    for (Index j = 0; j < k; ++j) {
      const bool at_bound = lambda(j) <= 0.0;
      if (!at_bound || cur.grad(j) < 0.0) {
        pg = std::max(pg, std::abs(cur.grad(j)));
        free.push_back(j);
      }
    }
    if (pg <= tol || free.empty()) break;

    const auto nf = static_cast<Index>(free.size());
    Matrix h(nf, nf);
    Vector g(nf);
    for (Index a = 0; a < nf; ++a) {
      g(a) = cur.grad(free[a]);
      for (Index b = 0; b < nf; ++b) h(a, b) = cur.hessian(free[a], free[b]);
    }
    h.diagonal().array() += 1e-14 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    Vector step_free = h.ldlt().solve(-g);
    if (!step_free.allFinite() || step_free.dot(g) >= 0.0) step_free = -g;

    Vector direction = Vector::Zero(k);
    for (Index a = 0; a < nf; ++a) direction(free[a]) = step_free(a);

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        // Newton stalled; fall back to projected steepest descent.
        direction.setZero();
        for (Index a = 0; a < nf; ++a) direction(free[a]) = -g(a);
      }
      double t = 1.0;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        const Vector trial = (lambda + t * direction).cwiseMax(0.0);
        const DualEval next = evaluate_dual(code_gram, cross, trial, norm_bound, false);
        if (next.value <= cur.value + kArmijo * cur.grad.dot(trial - lambda)) {
          lambda = trial;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;
    const double before = cur.value;
    cur = evaluate_dual(code_gram, cross, lambda, norm_bound, true);
    if (before - cur.value <= 1e-15 * std::max(1.0, std::abs(before))) break;
  }
  return lambda;
}

namespace {

std::vector<Index> used_atoms(const Matrix& codes) {
  std::vector<Index> used;
  for (Index j = 0; j < codes.rows(); ++j) {
    if (codes.row(j).cwiseAbs().maxCoeff() > 0.0) used.push_back(j);
  }
  return used;
}

Matrix select_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t a = 0; a < rows.size(); ++a) out.row(static_cast<Index>(a)) = m.row(rows[a]);
  return out;
}

Matrix select_columns(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t a = 0; a < cols.size(); ++a) out.col(static_cast<Index>(a)) = m.col(cols[a]);
  return out;
}

void require_bound(double norm_bound) {
  if (!(norm_bound > 0.0) || !std::isfinite(norm_bound)) {
    throw Error(ErrorKind::invalid_config, "column norm bound must be positive");
  }
}

/// Squared column norms of `atoms` under `metric` (identity when null).
Vector metric_norms(const Matrix& atoms, const Matrix* metric) {
  if (!metric) return atoms.colwise().squaredNorm().transpose();
  return (atoms.cwiseProduct(*metric * atoms)).colwise().sum().transpose();
}

void scale_onto_bound(Matrix& atoms, const Matrix* metric, double norm_bound) {
  const Vector sq = metric_norms(atoms, metric);
  for (Index j = 0; j < atoms.cols(); ++j) {
    if (sq(j) > norm_bound) atoms.col(j) *= std::sqrt(norm_bound / sq(j));
  }
}

/// Reconstruction error up to the constant data term:
///   -2 tr(T^T M A) + tr(A^T M A G)
double reduced_objective(const Matrix& atoms, const Matrix& targets, const Matrix& code_gram,
                         const Matrix* metric) {
  const Matrix ma = metric ? Matrix(*metric * atoms) : atoms;
  return -2.0 * targets.cwiseProduct(ma).sum() +
         (atoms.transpose() * ma).cwiseProduct(code_gram).sum();
}

/// Cyclic exact minimization over one atom at a time, each followed by the
/// metric-ball projection (a radial rescale). Never increases the objective.
void refine_atoms(Matrix& atoms, const Matrix& targets, const Matrix& code_gram,
                  const Matrix* metric, double norm_bound) {
  constexpr int kMaxSweeps = 2000;
  const Index k = atoms.cols();
  double value = reduced_objective(atoms, targets, code_gram, metric);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (Index j = 0; j < k; ++j) {
      const double g = code_gram(j, j);
      if (!(g > 0.0)) continue;
      Vector u = atoms.col(j) + (targets.col(j) - atoms * code_gram.col(j)) / g;
      const double sq = metric ? u.dot(*metric * u) : u.squaredNorm();
      if (sq > norm_bound) u *= std::sqrt(norm_bound / sq);
      atoms.col(j) = u;
    }
    const double next = reduced_objective(atoms, targets, code_gram, metric);
    const double change = value - next;
    value = next;
    if (change <= 1e-15 * std::max(1.0, std::abs(value))) break;
  }
}

/// Atoms minimizing the reconstruction error under per-atom norm bounds.
/// `targets` is the cross term (X S^T, or S^T in kernel coefficient space).
Matrix constrained_atoms(const Matrix& targets, const Matrix& code_gram, const Matrix& cross,
                         const Matrix* metric, double norm_bound, const Matrix* start) {
  const Vector lambda = solve_norm_dual(code_gram, cross, norm_bound);
  Matrix m = code_gram;
  m.diagonal() += lambda;
  Matrix atoms = targets * symmetric_inverse(m);
  scale_onto_bound(atoms, metric, norm_bound);
  if (start) {
    Matrix fallback = *start;
    scale_onto_bound(fallback, metric, norm_bound);
    if (reduced_objective(fallback, targets, code_gram, metric) <
        reduced_objective(atoms, targets, code_gram, metric)) {
      atoms = std::move(fallback);
    }
  }
  refine_atoms(atoms, targets, code_gram, metric, norm_bound);
  return atoms;
}

Matrix dictionary_update_impl(const Matrix& data, const Matrix& codes, double norm_bound,
                              const Matrix* previous) {
  require_bound(norm_bound);
  if (data.cols() != codes.cols()) {
    throw Error(ErrorKind::dimension_mismatch,
                "data has " + std::to_string(data.cols()) + " columns, codes have " +
                    std::to_string(codes.cols()));
  }
  require_finite(data, "data matrix");
  require_finite(codes, "sparse codes");
  const Index d = data.rows();
  const Index k = codes.rows();
  if (previous && (previous->rows() != d || previous->cols() != k)) {
    throw Error(ErrorKind::dimension_mismatch, "previous dictionary has the wrong shape");
  }

  Matrix dict = Matrix::Zero(d, k);
  const auto used = used_atoms(codes);
  if (!used.empty()) {
    const Matrix s = select_rows(codes, used);
    const Matrix c = data * s.transpose();  // d x k_used
    const Matrix code_gram = s * s.transpose();
    Matrix start;
    if (previous) start = select_columns(*previous, used);
    const Matrix solved = constrained_atoms(c, code_gram, c.transpose() * c, nullptr, norm_bound,
                                            previous ? &start : nullptr);
    for (std::size_t a = 0; a < used.size(); ++a) dict.col(used[a]) = solved.col(static_cast<Index>(a));
  }
  if (previous) {
    for (Index j = 0; j < k; ++j) {
      if (!std::binary_search(used.begin(), used.end(), j)) dict.col(j) = previous->col(j);
    }
  }
  scale_onto_bound(dict, nullptr, norm_bound);
  return dict;
}

Matrix kernel_update_impl(const Matrix& codes, const KernelGram& gram, double norm_bound,
                          const Matrix* previous) {
  require_bound(norm_bound);
  const Matrix& kmat = gram.values();
  const Index n = kmat.rows();
  const Index k = codes.rows();
  if (codes.cols() != n) {
    throw Error(ErrorKind::dimension_mismatch, "codes must have one column per kernel point");
  }
  require_finite(codes, "sparse codes");
  if (previous && (previous->rows() != n || previous->cols() != k)) {
    throw Error(ErrorKind::dimension_mismatch, "previous coefficient matrix has the wrong shape");
  }

  Matrix coeffs = Matrix::Zero(n, k);
  const auto used = used_atoms(codes);
  if (!used.empty()) {
    const Matrix s = select_rows(codes, used);
    const Matrix code_gram = s * s.transpose();
    const Matrix cross = s * kmat * s.transpose();
    Matrix start;
    if (previous) start = select_columns(*previous, used);
    const Matrix solved = constrained_atoms(s.transpose(), code_gram, cross, &kmat, norm_bound,
                                            previous ? &start : nullptr);
    for (std::size_t a = 0; a < used.size(); ++a) {
      coeffs.col(used[a]) = solved.col(static_cast<Index>(a));
    }
  }
  if (previous) {
    for (Index j = 0; j < k; ++j) {
      if (!std::binary_search(used.begin(), used.end(), j)) coeffs.col(j) = previous->col(j);
    }
  }
  scale_onto_bound(coeffs, &kmat, norm_bound);
  return coeffs;
}

}  // namespace

Matrix lagrange_dual_dictionary(const Matrix& data, const Matrix& codes, double norm_bound) {
  return dictionary_update_impl(data, codes, norm_bound, nullptr);
}

Matrix lagrange_dual_dictionary(const Matrix& data, const Matrix& codes, double norm_bound,
                                const Matrix& previous) {
  return dictionary_update_impl(data, codes, norm_bound, &previous);
}

Matrix kernel_dictionary_update(const Matrix& codes, const KernelGram& gram, double norm_bound) {
  return kernel_update_impl(codes, gram, norm_bound, nullptr);
}

Matrix kernel_dictionary_update(const Matrix& codes, const KernelGram& gram, double norm_bound,
                                const Matrix& previous) {
  return kernel_update_impl(codes, gram, norm_bound, &previous);
}

double kernel_fidelity(const KernelGram& gram, const Matrix& coeffs, const Matrix& codes) {
  const Matrix& k = gram.values();
  Matrix residual = -coeffs * codes;
  residual.diagonal().array() += 1.0;
  return (residual.transpose() * k * residual).trace();
}

}  // namespace ssrgr::solvers
