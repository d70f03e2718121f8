#pragma once

#include "ssrgr/graphs.hpp"
#include "ssrgr/hyperparams.hpp"
#include "ssrgr/labels.hpp"
#include "ssrgr/sparse_solvers.hpp"
#include "ssrgr/types.hpp"

#include <functional>
#include <random>
#include <vector>

/// Linear semi-supervised sparse representation with triple graph
/// regularization. Minimizes
///
///   |X - D S|^2 + lambda |S|_1 + alpha |H - W S|^2 + tr(H L H^T)
///     + gamma tr((H - F) U (H - F)^T)
///
/// over dictionary D, codes S, classifier W and label scores H, with
/// L = beta1 L^g + beta2 L^w - beta3 L^b built once from X and the labels.
namespace ssrgr {

struct SsrgrModel {
  Matrix dictionary;    // D, d x k
  Matrix codes;         // S, k x n
  Matrix classifier;    // W, c x k
  Matrix label_scores;  // H, c x n
};

struct DictionaryClassifier {
  Matrix dictionary;
  Matrix classifier;
};

struct SsrgrFit {
  SsrgrModel model;
  /// Objective after initialization.
  double initial_objective = 0.0;
  /// Objective after each executed outer iteration.
  std::vector<double> trace;
  bool stopped_early = false;
};

/// Column-normalizes X when hp.normalize is set.
Matrix prepare_features(const Matrix& features, const HyperParams& hp);

/// Initial D0 and S0 from alternating l1 coding and dual dictionary updates,
/// H0 with labeled columns one-hot and uniform [0, 1) entries elsewhere, and
/// the ridge classifier W0 = alpha H S^T (alpha S S^T + mu I)^-1. When
/// `coding_state` is given it receives the final ADMM state (S, Z, y).
SsrgrModel initialize(const Matrix& features, const LabelConstraint& lc, const HyperParams& hp,
                      solvers::AdmmState* coding_state = nullptr);

/// Solves the stacked problem min |[X; sqrt(a) H] - [D; sqrt(a) W] S|^2 with
/// the joint column bound 1 + alpha and splits the result back.
DictionaryClassifier update_dictionary_classifier(const SsrgrModel& model, const Matrix& features,
                                                  double alpha);

/// Closed-form minimizer over H:
///   H = (alpha W S + gamma F U)(alpha I + (L + L^T)/2 + gamma U)^-1.
/// Throws indefinite_laplacian when the system is numerically singular.
Matrix update_labels(const SsrgrModel& model, const Matrix& laplacian, const LabelConstraint& lc,
                     double alpha, double gamma);

double objective(const SsrgrModel& model, const Matrix& features, const Matrix& laplacian,
                 const LabelConstraint& lc, const HyperParams& hp);

/// Graphs over the columns of `features` (after preparation) for the given labels.
graphs::GraphSet euclidean_graphs(const Matrix& prepared, const Labels& labels,
                                  const graphs::GraphConfig& cfg);

/// Alternating optimization: D/W, then S by warm-started ADMM, then H.
/// The S step keeps the previous codes when the ADMM iterates would raise
/// the coding objective, so the trace never increases.
/// `labels` holds one entry per column; unlabeled columns are nullopt.
SsrgrFit fit(const Matrix& features, const Labels& labels, Index num_classes,
             const HyperParams& hp);

/// Codes a new sample against the learned dictionary (ADMM run to
/// convergence) and returns the argmax of W s.
Index predict_inductive(const SsrgrModel& model, const Vector& sample, const HyperParams& hp);

/// W s for a new sample.
Vector inductive_scores(const SsrgrModel& model, const Vector& sample, const HyperParams& hp);

// Shared by the kernel estimator.
namespace detail {

/// Solves H * system = rhs for symmetric `system`, checking conditioning.
Matrix solve_label_system(const Matrix& rhs, const Matrix& system);

/// Labeled columns copied from F, the rest uniform [0, 1).
Matrix initial_label_scores(const LabelConstraint& lc, std::mt19937_64& rng);

/// Data columns used as starting atoms: a seeded permutation truncated to
/// min(n, dict_size).
std::vector<Index> starting_atoms(Index num_points, Index dict_size, std::mt19937_64& rng);

/// alpha H S^T (alpha S S^T + mu I)^-1
Matrix ridge_classifier(const Matrix& label_scores, const Matrix& codes, double alpha, double mu);

/// alpha |H - W S|^2 + tr(H L H^T) + gamma tr((H - F) U (H - F)^T)
double label_terms(const Matrix& classifier, const Matrix& codes, const Matrix& label_scores,
                   const Matrix& laplacian, const LabelConstraint& lc, double alpha, double gamma);

bool relative_change_below(double previous, double current, double tol);

/// Lowest-objective candidate among the ADMM iterates S and Z and the
/// previous codes, in that order of preference on ties.
Matrix safeguarded_codes(const Matrix& previous, const solvers::AdmmState& state,
                         const std::function<double(const Matrix&)>& coding_objective);

}  // namespace detail

}  // namespace ssrgr
