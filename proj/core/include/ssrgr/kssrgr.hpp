#pragma once

#include "ssrgr/graphs.hpp"
#include "ssrgr/hyperparams.hpp"
#include "ssrgr/labels.hpp"
#include "ssrgr/sparse_solvers.hpp"
#include "ssrgr/types.hpp"

#include <string>
#include <vector>

/// Kernelized estimator. The dictionary lives in feature space as
/// D = phi(X) B, so every term is expressed through the Gram matrix K:
///
///   tr((I - B S)^T K (I - B S)) + lambda |S|_1 + alpha |H - W S|^2
///     + tr(H L H^T) + gamma tr((H - F) U (H - F)^T)
///
/// with the graphs built under the kernel-induced distance.
namespace ssrgr::kernel {

using solvers::KernelGram;

enum class KernelKind { gaussian, linear, precomputed };

struct KernelConfig {
  KernelKind kind = KernelKind::gaussian;
  /// Gaussian bandwidth in exp(-|x - y|^2 / sigma^2). 0 selects the median
  /// heuristic sigma^2 = median pairwise squared distance.
  double sigma = 0.0;
};

const char* to_string(KernelKind kind) noexcept;
KernelKind kernel_kind_from_string(const std::string& name);

/// sqrt of the median squared distance over distinct column pairs.
double median_heuristic_sigma(const Matrix& points);

/// Copy of `cfg` with sigma filled in for the gaussian kind.
KernelConfig resolve(const KernelConfig& cfg, const Matrix& points);

KernelGram gaussian_kernel(const Matrix& points, double sigma);
KernelGram linear_kernel(const Matrix& points);
/// Gram of a resolved config over `points`; precomputed kinds are rejected.
KernelGram build_kernel(const Matrix& points, const KernelConfig& resolved);

/// k(x_i, sample) for every training column.
Vector kernel_row(const Matrix& train, const Vector& sample, const KernelConfig& resolved);

/// |phi(x_i) - phi(x_j)|^2 = K_ii - 2 K_ij + K_jj.
double kernel_distance(const Matrix& gram, Index i, Index j);
Matrix kernel_sq_distances(const Matrix& gram);

graphs::GraphSet kernel_graphs(const KernelGram& gram, const Labels& labels,
                               const graphs::GraphConfig& cfg);

struct KernelModel {
  Matrix coeffs;        // B, n x k
  Matrix codes;         // S, k x n
  Matrix classifier;    // W, c x k
  Matrix label_scores;  // H, c x n
  KernelGram gram = KernelGram::trusted(Matrix());
};

struct KernelFit {
  KernelModel model;
  KernelConfig kernel;  // resolved
  double initial_objective = 0.0;
  std::vector<double> trace;
  bool stopped_early = false;
};

double kernel_objective(const KernelModel& model, const Matrix& laplacian,
                        const LabelConstraint& lc, const HyperParams& hp);

/// min alpha |H - W S|^2  s.t.  |W_m|^2 <= 1, through the Lagrange dual.
/// Atoms with an all-zero code row keep the previous column.
Matrix update_classifier(const Matrix& codes, const Matrix& label_scores, double alpha,
                         const Matrix& previous);

/// H = (2 alpha W S + 2 gamma F U)(2 alpha I + L + L^T + 2 gamma U)^-1.
Matrix update_labels_kernel(const KernelModel& model, const Matrix& laplacian,
                            const LabelConstraint& lc, double alpha, double gamma);

/// B0 from atoms phi(x_a)/|phi(x_a)| refined by alternating kernel coding
/// (classification term off) and B updates; H0 and W0 as in the linear
/// estimator. `coding_state` receives the final ADMM state when given.
KernelModel initialize_kernel(const KernelGram& gram, const LabelConstraint& lc,
                              const HyperParams& hp, solvers::AdmmState* coding_state = nullptr);

/// Alternates B, S (kernel ADMM), W and H updates.
KernelFit fit_kernel(const Matrix& features, const Labels& labels, Index num_classes,
                     const HyperParams& hp, const KernelConfig& cfg);
KernelFit fit_kernel(const KernelGram& gram, const Labels& labels, Index num_classes,
                     const HyperParams& hp);

/// W z where z minimizes k(x,x) - 2 k_x^T B z + z^T B^T K B z + lambda |z|_1.
Vector kernel_scores_from_row(const KernelModel& model, const Vector& row, const HyperParams& hp);

/// W z for a new sample; `train` are the raw training features.
Vector inductive_scores_kernel(const KernelModel& model, const Matrix& train,
                              const Vector& sample, const KernelConfig& resolved,
                              const HyperParams& hp);

/// Inductive class of a new sample. `train` are the raw training features;
/// both sides are prepared exactly as in fit_kernel.
Index predict_inductive_kernel(const KernelModel& model, const Matrix& train,
                               const Vector& sample, const KernelConfig& resolved,
                               const HyperParams& hp);

}  // namespace ssrgr::kernel
