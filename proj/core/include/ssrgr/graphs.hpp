#pragma once

#include "ssrgr/types.hpp"

#include <vector>

/// Regularization graphs over the columns of a data matrix: the kNN base
/// affinity, the within-class and between-class affinities, the propagated
/// global similarity, and their Laplacians.
///
/// All builders work from a pairwise squared-distance matrix so the same code
/// serves the Euclidean and the kernel-induced metric.
namespace ssrgr::graphs {

struct GraphConfig {
  Index num_neighbors = 5;
  double beta_w = 0.2;
  double beta_b = 0.2;
  /// Mixing weight of neighbor information in the propagation fixed point,
  /// strictly inside (0, 1).
  double propagation_mixing = 0.5;
  /// Symmetrized similarities below this value are zeroed.
  double delta = 1e-4;

  /// Throws invalid_config when a field is out of range for n points.
  void validate(Index num_points) const;
};

struct AffinityGraph {
  Matrix weights;
  Index num_points() const { return weights.rows(); }
};

struct SimilarityMatrix {
  Matrix values;
  bool threshold_applied = false;
};

enum class LaplacianSource { within, between, global, combined };

struct Laplacian {
  Matrix matrix;
  LaplacianSource source = LaplacianSource::combined;
};

/// neighbors[i] lists the k nearest other points of i, closest first.
using NeighborSets = std::vector<std::vector<Index>>;

/// Squared Euclidean distances between the columns of `points`.
Matrix squared_distances(const Matrix& points);

/// k nearest neighbors of each point under a symmetric distance matrix.
/// Ties are broken by the lower point index.
NeighborSets nearest_neighbors(const Matrix& sq_distances, Index k);

/// A_ij = 1 iff i is among j's neighbors or j among i's.
AffinityGraph knn_affinity(const NeighborSets& neighbors);
AffinityGraph knn_affinity(const Matrix& sq_distances, const GraphConfig& cfg);

/// Within-class affinity: same-label pairs get A_ij / n_y + beta_w A_ij,
/// remaining neighbor pairs beta_w A_ij. n_y counts labeled points only.
AffinityGraph within_class_affinity(const AffinityGraph& base, const Labels& labels,
                                    const GraphConfig& cfg);

/// Between-class affinity. Pairs with both points labeled use the label
/// cases (same class: A_ij (1/n - 1/n_y) - beta_b A_ij, different class:
/// A_ij / n); neighbor pairs involving an unlabeled point get -beta_b A_ij.
AffinityGraph between_class_affinity(const AffinityGraph& base, const Labels& labels,
                                     const GraphConfig& cfg);

/// G_ij = 1 iff j is one of i's neighbors and both share a label.
SimilarityMatrix strong_similarity(const NeighborSets& neighbors, const Labels& labels);

/// Closed-form limit of the similarity propagation
///   P(t+1) = (1 - m) P(0) + m T P(t),  T = Deg^-1 A,  P(0) = G + I,
/// followed by symmetrization and truncation below cfg.delta.
/// Throws degenerate_graph if a row of A is empty.
SimilarityMatrix propagate_similarity(const AffinityGraph& base, const SimilarityMatrix& strong,
                                      const GraphConfig& cfg);

/// Unsymmetrized fixed point (1 - m)(I - m T)^-1 P(0), solved without
/// forming the inverse.
Matrix propagation_limit(const AffinityGraph& base, const SimilarityMatrix& strong,
                         double mixing);

/// (P + P^T) / 2 with entries below delta set to 0.
SimilarityMatrix symmetrize_truncate(const Matrix& p, double delta);

/// L = Deg - A with Deg_ii = sum_j A_ij.
Laplacian laplacian(const Matrix& weights, LaplacianSource source);
Laplacian laplacian(const AffinityGraph& graph, LaplacianSource source);
Laplacian laplacian(const SimilarityMatrix& similarity);

/// beta1 L^g + beta2 L^w - beta3 L^b. May be indefinite.
Laplacian combined_laplacian(const Laplacian& global, const Laplacian& within,
                             const Laplacian& between, double beta1, double beta2, double beta3);

struct LaplacianSet {
  Laplacian within;
  Laplacian between;
  Laplacian global;

  Laplacian combine(double beta1, double beta2, double beta3) const {
    return combined_laplacian(global, within, between, beta1, beta2, beta3);
  }
};

/// Every intermediate of the graph construction, kept for inspection.
struct GraphSet {
  NeighborSets neighbors;
  AffinityGraph base;
  AffinityGraph within;
  AffinityGraph between;
  SimilarityMatrix strong;
  SimilarityMatrix propagated;
  LaplacianSet laplacians;
};

GraphSet build_graphs(const Matrix& sq_distances, const Labels& labels, const GraphConfig& cfg);

}  // namespace ssrgr::graphs
