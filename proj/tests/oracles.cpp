#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace oracle {

namespace {

double shrink(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double largest_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

void project_columns(Matrix& d, double bound) {
  for (Index j = 0; j < d.cols(); ++j) {
    const double sq = d.col(j).squaredNorm();
    if (sq > bound) d.col(j) *= std::sqrt(bound / sq);
  }
}

}  // namespace

double quadratic_l1_value(const Matrix& q, const Matrix& r, const Matrix& s, double lambda) {
  return (s.transpose() * q * s).trace() - 2.0 * (s.transpose() * r).trace() +
         lambda * s.cwiseAbs().sum();
}

Matrix proximal_gradient(const Matrix& q, const Matrix& r, double lambda, double tol,
                         int max_iters) {
  const double lip = 2.0 * std::max(largest_eigenvalue(q), 1e-12);
  const double step = 1.0 / lip;
  Matrix x = Matrix::Zero(r.rows(), r.cols());
  Matrix y = x;
  double t = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    const Matrix grad = 2.0 * (q * y - r);
    Matrix next = (y - step * grad).unaryExpr([&](double v) { return shrink(v, lambda * step); });
    const double moved = (next - x).cwiseAbs().maxCoeff();
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    // Restart momentum when it stops helping.
    if (quadratic_l1_value(q, r, next, lambda) > quadratic_l1_value(q, r, x, lambda)) {
      y = next;
      t = 1.0;
    } else {
      t = t_next;
    }
    x = std::move(next);
    if (moved < tol) break;
  }
  return x;
}

Matrix lasso(const Matrix& data, const Matrix& dict, double lambda, double tol) {
  return proximal_gradient(dict.transpose() * dict, dict.transpose() * data, lambda, tol);
}

Matrix projected_gradient_dictionary(const Matrix& data, const Matrix& codes, double bound,
                                     int max_iters, double tol) {
  const Matrix gram = codes * codes.transpose();
  const Matrix cross = data * codes.transpose();
  const auto value = [&](const Matrix& d) { return (data - d * codes).squaredNorm(); };
  Matrix d = Matrix::Zero(data.rows(), codes.rows());
  Matrix y = d;
  double t = 1.0;
  double step = 1e-3;
  for (int it = 0; it < max_iters; ++it) {
    const Matrix grad = 2.0 * (y * gram - cross);
    const double fy = value(y);
    Matrix next;
    // Backtracking on the quadratic upper bound; the step may also grow.
    step *= 2.0;
    for (int ls = 0; ls < 80; ++ls) {
      next = y - step * grad;
      project_columns(next, bound);
      const Matrix diff = next - y;
      if (value(next) <= fy + grad.cwiseProduct(diff).sum() + diff.squaredNorm() / (2.0 * step)) {
        break;
      }
      step *= 0.5;
    }
    const double moved = (next - d).cwiseAbs().maxCoeff();
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (value(next) > value(d)) {
      y = next;
      t = 1.0;
    } else {
      y = next + ((t - 1.0) / t_next) * (next - d);
      t = t_next;
    }
    d = std::move(next);
    if (moved < tol) break;
  }
  return d;
}

Matrix gram_factor(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (gram + gram.transpose()));
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double kernel_dictionary_optimum(const Matrix& gram, const Matrix& codes, double bound) {
  const Matrix f = gram_factor(gram);
  const Matrix d = projected_gradient_dictionary(f, codes, bound);
  return (f - d * codes).squaredNorm();
}

Matrix propagation_fixed_point(const Matrix& affinity, const Matrix& strong, double mixing,
                               int iterations) {
  const Index n = affinity.rows();
  Matrix t = affinity;
  for (Index i = 0; i < n; ++i) t.row(i) /= affinity.row(i).sum();
  Matrix p0 = strong;
  p0.diagonal().setOnes();
  Matrix p = p0;
  for (int it = 0; it < iterations; ++it) p = mixing * t * p + (1.0 - mixing) * p0;
  return p;
}

Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double step) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const double keep = probe(i, j);
      probe(i, j) = keep + step;
      const double up = f(probe);
      probe(i, j) = keep - step;
      const double down = f(probe);
      probe(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

Matrix brute_force_knn(const Matrix& points, Index k) {
  const Index n = points.cols();
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Index>> order;
    for (Index j = 0; j < n; ++j) {
      if (j != i) order.emplace_back((points.col(i) - points.col(j)).squaredNorm(), j);
    }
    std::sort(order.begin(), order.end());
    for (Index m = 0; m < k; ++m) {
      const Index j = order[static_cast<std::size_t>(m)].second;
      a(i, j) = 1.0;
      a(j, i) = 1.0;
    }
  }
  return a;
}

double best_projection_threshold_accuracy(const Matrix& points, const std::vector<Index>& labels,
                                          int directions) {
  const auto n = static_cast<Index>(labels.size());
  const double pi = std::acos(-1.0);
  double best = 0.0;
  std::vector<std::pair<double, Index>> proj(static_cast<std::size_t>(n));
  for (int k = 0; k < directions; ++k) {
    const double angle = pi * k / directions;
    const double cx = std::cos(angle);
    const double cy = std::sin(angle);
    for (Index j = 0; j < n; ++j) {
      proj[static_cast<std::size_t>(j)] = {cx * points(0, j) + cy * points(1, j),
                                           labels[static_cast<std::size_t>(j)]};
    }
    std::sort(proj.begin(), proj.end());
    // Threshold below position m: points [0, m) on the low side.
    Index low_ones = 0;
    const Index total_ones = std::count_if(proj.begin(), proj.end(),
                                           [](const auto& p) { return p.second == 1; });
    for (Index m = 0; m <= n; ++m) {
      const Index low_zeros = m - low_ones;
      const Index high_ones = total_ones - low_ones;
      const double acc = static_cast<double>(low_zeros + high_ones) / static_cast<double>(n);
      best = std::max({best, acc, 1.0 - acc});
      if (m < n && proj[static_cast<std::size_t>(m)].second == 1) ++low_ones;
    }
  }
  return best;
}

double one_nn_accuracy(const Matrix& points, const std::vector<Index>& labels) {
  const Index n = points.cols();
  Index correct = 0;
  for (Index i = 0; i < n; ++i) {
    Index nearest = -1;
    double best = INFINITY;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (points.col(i) - points.col(j)).squaredNorm();
      if (d < best) {
        best = d;
        nearest = j;
      }
    }
    if (labels[static_cast<std::size_t>(nearest)] == labels[static_cast<std::size_t>(i)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

Matrix connected_affinity(Index n, double chord_probability, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution chord(chord_probability);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const Index j = (i + 1) % n;
    if (j != i) a(i, j) = a(j, i) = 1.0;
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 2; j < n; ++j) {
      if (chord(rng)) a(i, j) = a(j, i) = 1.0;
    }
  }
  return a;
}

}  // namespace oracle
