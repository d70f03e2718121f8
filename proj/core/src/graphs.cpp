#include "ssrgr/graphs.hpp"

#include "ssrgr/error.hpp"
#include "ssrgr/labels.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ssrgr::graphs {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::dimension_mismatch,
                std::string(what) + " must be square, got " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
  }
}

void require_label_count(const Labels& labels, Index n) {
  if (static_cast<Index>(labels.size()) != n) {
    throw Error(ErrorKind::dimension_mismatch,
                "label vector has " + std::to_string(labels.size()) + " entries for " +
                    std::to_string(n) + " points");
  }
}

bool same_label(const Labels& labels, Index i, Index j) {
  const auto& a = labels[static_cast<std::size_t>(i)];
  const auto& b = labels[static_cast<std::size_t>(j)];
  return a && b && *a == *b;
}

}  // namespace

void GraphConfig::validate(Index num_points) const {
  if (num_points < 2) {
    throw Error(ErrorKind::invalid_config, "graph construction needs at least 2 points");
  }
  if (num_neighbors < 1 || num_neighbors >= num_points) {
    throw Error(ErrorKind::invalid_config,
                "num_neighbors must lie in [1, " + std::to_string(num_points - 1) + "], got " +
                    std::to_string(num_neighbors));
  }
  if (beta_w < 0.0 || beta_b < 0.0) {
    throw Error(ErrorKind::invalid_config, "beta_w and beta_b must be non-negative");
  }
  if (!(propagation_mixing > 0.0 && propagation_mixing < 1.0)) {
    throw Error(ErrorKind::invalid_config, "propagation_mixing must lie strictly inside (0, 1)");
  }
  if (delta < 0.0) {
    throw Error(ErrorKind::invalid_config, "delta must be non-negative");
  }
}

Matrix squared_distances(const Matrix& points) {
  require_finite(points, "point matrix");
  const Index n = points.cols();
  Matrix d = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double v = (points.col(i) - points.col(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

NeighborSets nearest_neighbors(const Matrix& sq_distances, Index k) {
  require_square(sq_distances, "distance matrix");
  require_finite(sq_distances, "distance matrix");
  const Index n = sq_distances.rows();
  if (k < 1 || k >= n) {
    throw Error(ErrorKind::invalid_config,
                "num_neighbors must lie in [1, n-1] for n = " + std::to_string(n));
  }
  NeighborSets out(static_cast<std::size_t>(n));
  std::vector<Index> order;
  for (Index i = 0; i < n; ++i) {
    order.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    const auto closer = [&](Index a, Index b) {
      const double da = sq_distances(i, a);
      const double db = sq_distances(i, b);
      return da < db || (da == db && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
    out[static_cast<std::size_t>(i)].assign(order.begin(), order.begin() + k);
  }
  return out;
}

AffinityGraph knn_affinity(const NeighborSets& neighbors) {
  const auto n = static_cast<Index>(neighbors.size());
  AffinityGraph g{Matrix::Zero(n, n)};
  for (Index i = 0; i < n; ++i) {
    for (Index j : neighbors[static_cast<std::size_t>(i)]) {
      g.weights(i, j) = 1.0;
      g.weights(j, i) = 1.0;
    }
  }
  return g;
}

AffinityGraph knn_affinity(const Matrix& sq_distances, const GraphConfig& cfg) {
  require_square(sq_distances, "distance matrix");
  cfg.validate(sq_distances.rows());
  return knn_affinity(nearest_neighbors(sq_distances, cfg.num_neighbors));
}

AffinityGraph within_class_affinity(const AffinityGraph& base, const Labels& labels,
                                    const GraphConfig& cfg) {
  const Index n = base.num_points();
  require_label_count(labels, n);
  const auto counts = labeled_class_counts(labels, infer_num_classes(labels));
  const Matrix& a = base.weights;

  AffinityGraph w{Matrix::Zero(n, n)};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j || a(i, j) == 0.0) continue;
      if (same_label(labels, i, j)) {
        const auto n_y = static_cast<double>(counts[static_cast<std::size_t>(*labels[i])]);
        w.weights(i, j) = a(i, j) / n_y + cfg.beta_w * a(i, j);
      } else {
        w.weights(i, j) = cfg.beta_w * a(i, j);
      }
    }
  }
  return w;
}

AffinityGraph between_class_affinity(const AffinityGraph& base, const Labels& labels,
                                     const GraphConfig& cfg) {
  const Index n = base.num_points();
  require_label_count(labels, n);
  const auto counts = labeled_class_counts(labels, infer_num_classes(labels));
  const Matrix& a = base.weights;
  const double inv_n = 1.0 / static_cast<double>(n);

  AffinityGraph b{Matrix::Zero(n, n)};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j || a(i, j) == 0.0) continue;
      const auto& yi = labels[static_cast<std::size_t>(i)];
      const auto& yj = labels[static_cast<std::size_t>(j)];
      if (yi && yj) {
        if (*yi == *yj) {
          const auto n_y = static_cast<double>(counts[static_cast<std::size_t>(*yi)]);
          b.weights(i, j) = a(i, j) * (inv_n - 1.0 / n_y) - cfg.beta_b * a(i, j);
        } else {
          b.weights(i, j) = a(i, j) * inv_n;
        }
      } else {
        b.weights(i, j) = -cfg.beta_b * a(i, j);
      }
    }
  }
  return b;
}

SimilarityMatrix strong_similarity(const NeighborSets& neighbors, const Labels& labels) {
  const auto n = static_cast<Index>(neighbors.size());
  require_label_count(labels, n);
  SimilarityMatrix g{Matrix::Zero(n, n), false};
  for (Index i = 0; i < n; ++i) {
    for (Index j : neighbors[static_cast<std::size_t>(i)]) {
      if (j != i && same_label(labels, i, j)) g.values(i, j) = 1.0;
    }
  }
  return g;
}

Matrix propagation_limit(const AffinityGraph& base, const SimilarityMatrix& strong,
                         double mixing) {
  const Matrix& a = base.weights;
  require_square(a, "affinity matrix");
  if (strong.values.rows() != a.rows() || strong.values.cols() != a.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "strong similarity and affinity shapes differ");
  }
  if (!(mixing > 0.0 && mixing < 1.0)) {
    throw Error(ErrorKind::invalid_config, "propagation_mixing must lie strictly inside (0, 1)");
  }
  const Index n = a.rows();
  const Vector degree = a.rowwise().sum();
  for (Index i = 0; i < n; ++i) {
    if (!(degree(i) > 0.0)) {
      throw Error(ErrorKind::degenerate_graph,
                  "node " + std::to_string(i) +
                      " has no neighbors; the transition matrix is undefined (raise num_neighbors)");
    }
  }
  const Matrix transition = degree.cwiseInverse().asDiagonal() * a;
  Matrix seed = strong.values;
  seed.diagonal().setOnes();

  const Matrix system = Matrix::Identity(n, n) - mixing * transition;
  return system.partialPivLu().solve((1.0 - mixing) * seed);
}

SimilarityMatrix symmetrize_truncate(const Matrix& p, double delta) {
  require_square(p, "similarity matrix");
  SimilarityMatrix out{0.5 * (p + p.transpose()), true};
  out.values = (out.values.array() < delta).select(0.0, out.values);
  return out;
}

SimilarityMatrix propagate_similarity(const AffinityGraph& base, const SimilarityMatrix& strong,
                                      const GraphConfig& cfg) {
  if (cfg.delta < 0.0) throw Error(ErrorKind::invalid_config, "delta must be non-negative");
  return symmetrize_truncate(propagation_limit(base, strong, cfg.propagation_mixing), cfg.delta);
}

Laplacian laplacian(const Matrix& weights, LaplacianSource source) {
  require_square(weights, "affinity matrix");
  Laplacian l{-weights, source};
  l.matrix.diagonal() += weights.rowwise().sum();
  return l;
}

Laplacian laplacian(const AffinityGraph& graph, LaplacianSource source) {
  return laplacian(graph.weights, source);
}

Laplacian laplacian(const SimilarityMatrix& similarity) {
  return laplacian(similarity.values, LaplacianSource::global);
}

Laplacian combined_laplacian(const Laplacian& global, const Laplacian& within,
                             const Laplacian& between, double beta1, double beta2, double beta3) {
  const Index n = global.matrix.rows();
  for (const Laplacian* l : {&global, &within, &between}) {
    if (l->matrix.rows() != n || l->matrix.cols() != n) {
      throw Error(ErrorKind::dimension_mismatch, "Laplacian shapes differ");
    }
  }
  if (beta1 < 0.0 || beta2 < 0.0 || beta3 < 0.0) {
    throw Error(ErrorKind::invalid_config, "graph weights beta1..beta3 must be non-negative");
  }
  return Laplacian{beta1 * global.matrix + beta2 * within.matrix - beta3 * between.matrix,
                   LaplacianSource::combined};
}

GraphSet build_graphs(const Matrix& sq_distances, const Labels& labels, const GraphConfig& cfg) {
  require_square(sq_distances, "distance matrix");
  const Index n = sq_distances.rows();
  cfg.validate(n);
  require_label_count(labels, n);

  GraphSet gs;
  gs.neighbors = nearest_neighbors(sq_distances, cfg.num_neighbors);
  gs.base = knn_affinity(gs.neighbors);
  gs.within = within_class_affinity(gs.base, labels, cfg);
  gs.between = between_class_affinity(gs.base, labels, cfg);
  gs.strong = strong_similarity(gs.neighbors, labels);
  gs.propagated = propagate_similarity(gs.base, gs.strong, cfg);
  gs.laplacians.within = laplacian(gs.within, LaplacianSource::within);
  gs.laplacians.between = laplacian(gs.between, LaplacianSource::between);
  gs.laplacians.global = laplacian(gs.propagated);
  return gs;
}

}  // namespace ssrgr::graphs
