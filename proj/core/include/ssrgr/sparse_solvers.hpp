#pragma once

#include "ssrgr/types.hpp"

namespace ssrgr::solvers {

struct AdmmConfig {
  double rho = 1.0;
  /// l1 weight.
  double lambda = 0.0;
  Index max_iters = 1;
  /// Stop once both the primal residual max|S - Z| and the dual residual
  /// rho max|Z - Z_prev| fall to this value. 0 runs all max_iters cycles.
  double tol = 0.0;

  void validate() const;
};

/// Iterates of the splitting S = Z with scaled multiplier y. Kept between
/// calls so outer loops can warm-start the inner solver.
struct AdmmState {
  Matrix codes;   // S
  Matrix split;   // Z
  Matrix dual;    // y

  bool matches(Index k, Index n) const {
    return codes.rows() == k && codes.cols() == n && split.rows() == k && split.cols() == n &&
           dual.rows() == k && dual.cols() == n;
  }
  void reset(Index k, Index n);
  /// S = Z = codes, y = 0.
  void start_from(const Matrix& codes);
};

struct AdmmReport {
  Index iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Gram matrix of an implicit feature map. Construction checks symmetry
/// and positive semidefiniteness (smallest eigenvalue >= -1e-6).
class KernelGram {
 public:
  static KernelGram from_matrix(Matrix values);
  /// Skips validation; for grams that are PSD by construction.
  static KernelGram trusted(Matrix values);

  const Matrix& values() const { return values_; }
  Index size() const { return values_.rows(); }

 private:
  explicit KernelGram(Matrix values) : values_(std::move(values)) {}
  Matrix values_;
};

double soft_threshold(double x, double t);
Matrix soft_threshold(const Matrix& x, double t);

/// ADMM on  tr(S^T Q S) - 2 tr(S^T R) + lambda |S|_1  over S (k x m):
///   Z <- T_{lambda/rho}(S + y / rho)
///   S <- (2Q + rho I)^-1 (2R + rho Z - y)
///   y <- y + rho (S - Z)
/// Q (k x k) must be symmetric PSD. `state` is used as the starting point
/// when its shape matches, otherwise reset to zeros.
AdmmReport quadratic_l1_admm(const Matrix& quadratic, const Matrix& linear, const AdmmConfig& cfg,
                             AdmmState& state);

/// Lasso  |X - D S|^2 + lambda |S|_1  by ADMM. Returns S.
Matrix lasso_admm(const Matrix& data, const Matrix& dict, const AdmmConfig& cfg);
AdmmReport lasso_admm(const Matrix& data, const Matrix& dict, const AdmmConfig& cfg,
                      AdmmState& state);

double lasso_objective(const Matrix& data, const Matrix& dict, const Matrix& codes, double lambda);

/// argmin_D |X - D S|^2  s.t.  |D_j|^2 <= norm_bound, via projected Newton
/// ascent on the Lagrange dual. Atoms whose code row is identically zero do
/// not affect the objective; they keep `previous` (rescaled into the
/// feasible set) when given, else become zero.
Matrix lagrange_dual_dictionary(const Matrix& data, const Matrix& codes, double norm_bound);
Matrix lagrange_dual_dictionary(const Matrix& data, const Matrix& codes, double norm_bound,
                                const Matrix& previous);

/// argmin_B tr((I - B S)^T K (I - B S))  s.t.  B_j^T K B_j <= norm_bound.
/// The solution has the form B = S^T (S S^T + Lambda)^-1.
Matrix kernel_dictionary_update(const Matrix& codes, const KernelGram& gram, double norm_bound);
Matrix kernel_dictionary_update(const Matrix& codes, const KernelGram& gram, double norm_bound,
                                const Matrix& previous);

/// tr((I - B S)^T K (I - B S)).
double kernel_fidelity(const KernelGram& gram, const Matrix& coeffs, const Matrix& codes);

/// Kernel sparse coding with the classification term:
///   tr((I - B S)^T K (I - B S)) + lambda |S|_1 + alpha |H - W S|^2.
AdmmReport kernel_lasso_admm(const KernelGram& gram, const Matrix& coeffs,
                             const Matrix& classifier, const Matrix& label_scores, double alpha,
                             const AdmmConfig& cfg, AdmmState& state);
Matrix kernel_lasso_admm(const KernelGram& gram, const Matrix& coeffs, const Matrix& classifier,
                         const Matrix& label_scores, double alpha, const AdmmConfig& cfg);

/// Multipliers of the norm-constrained least-squares dual
///   min_{lambda >= 0}  tr(C^T C (G + diag(lambda))^+) + bound * sum(lambda)
/// where G = S S^T and cross = C^T C. Exposed for testing.
Vector solve_norm_dual(const Matrix& code_gram, const Matrix& cross, double norm_bound);

}  // namespace ssrgr::solvers
