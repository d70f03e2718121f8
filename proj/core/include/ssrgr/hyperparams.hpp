#pragma once

#include "ssrgr/graphs.hpp"
#include "ssrgr/sparse_solvers.hpp"
#include "ssrgr/types.hpp"

#include <cstdint>

namespace ssrgr {

/// Weights and iteration budgets shared by the linear and kernel estimators.
struct HyperParams {
  double lambda = 1.2;                     // l1 weight on the codes
  double alpha = 0.2;                      // classification-error weight
  double label_consistency_weight = 0.06;  // gamma on the (F, U) term
  double beta1 = 1.0;                      // global (propagated) graph
  double beta2 = 1.0;                      // within-class graph
  double beta3 = 0.1;                      // between-class graph
  double ridge_mu = 1.0;                   // ridge weight of the initial classifier
  /// Number of atoms; 0 picks min(n, 15 c).
  Index dict_size = 0;
  Index outer_iters = 15;
  /// Relative objective change that ends the outer loop early; 0 disables.
  double early_stop_tol = 1e-6;
  /// Alternating sparse-coding rounds used to build the initial dictionary.
  Index init_rounds = 5;
  Index init_admm_iters = 100;
  /// Scale every data column to unit l2 norm before fitting.
  bool normalize = true;
  graphs::GraphConfig graph;
  /// rho, max_iters and tol of the inner ADMM; its lambda is taken from
  /// the field above.
  solvers::AdmmConfig admm;
  std::uint64_t seed = 0;

  /// Values tuned for the linear estimator (l1 1.2, alpha 0.2, gamma 0.06).
  static HyperParams linear_defaults();
  /// Values tuned for the kernel estimator (l1 0.003, alpha 0.07, gamma 3e-4).
  static HyperParams kernel_defaults();

  solvers::AdmmConfig sparse_coding_config() const {
    solvers::AdmmConfig cfg = admm;
    cfg.lambda = lambda;
    return cfg;
  }

  Index resolved_dict_size(Index num_points, Index num_classes) const;

  /// Throws invalid_config on negative weights or empty budgets.
  void validate() const;
};

}  // namespace ssrgr
