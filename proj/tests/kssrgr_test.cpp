#include "oracles.hpp"

#include <ssrgr/data.hpp>
#include <ssrgr/error.hpp>
#include <ssrgr/kssrgr.hpp>
#include <ssrgr/ssrgr.hpp>

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace ssrgr;
using namespace ssrgr::kernel;

Labels every_third_labeled(Index n, Index classes) {
  Labels labels(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; j += 3) labels[static_cast<std::size_t>(j)] = (j / 3) % classes;
  return labels;
}

double min_eigenvalue(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double accuracy(const std::vector<Index>& predicted, const Labels& truth) {
  Index hits = 0;
  for (std::size_t j = 0; j < predicted.size(); ++j) hits += predicted[j] == *truth[j] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

KernelModel random_kernel_model(const Matrix& x, Index k, Index c, std::uint64_t seed) {
  KernelModel m;
  m.gram = linear_kernel(x);
  m.coeffs = oracle::gaussian(x.cols(), k, seed) * 0.2;
  m.codes = oracle::gaussian(k, x.cols(), seed + 1) * 0.5;
  m.classifier = oracle::gaussian(c, k, seed + 2) * 0.3;
  m.label_scores = oracle::gaussian(c, x.cols(), seed + 3) * 0.5;
  return m;
}

TEST(GaussianKernel, IdenticalPointsAndUnitDistance) {
  Matrix p(2, 3);
  p << 0.0, 0.0, 3.0,
       0.0, 0.0, 4.0;
  const Matrix k = gaussian_kernel(p, 5.0).values();
  EXPECT_EQ(k(0, 1), 1.0);
  EXPECT_NEAR(k(0, 2), 0.36787944117144233, 1e-15);
  EXPECT_NEAR(k(2, 1), std::exp(-1.0), 1e-15);
}

TEST(GaussianKernel, SymmetricUnitDiagonalBoundedPsd) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = oracle::gaussian(5, 40, seed);
    const Matrix k = gaussian_kernel(x, 2.0).values();
    EXPECT_EQ(k, k.transpose());
    EXPECT_EQ(k.diagonal(), Vector::Ones(40));
    EXPECT_GT(k.minCoeff(), 0.0);
    EXPECT_LE(k.maxCoeff(), 1.0);
    EXPECT_GE(min_eigenvalue(k), -1e-8);
  }
}

TEST(GaussianKernel, NonPositiveSigmaIsAConfigError) {
  const Matrix x = oracle::gaussian(2, 4, 1);
  for (double sigma : {0.0, -1.0, std::nan("")}) {
    try {
      gaussian_kernel(x, sigma);
      FAIL() << "sigma " << sigma;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_config);
    }
  }
}

TEST(GaussianKernel, MedianHeuristic) {
  Matrix p(1, 3);
  p << 0.0, 1.0, 3.0;
  // Squared distances 1, 9, 4.
  EXPECT_DOUBLE_EQ(median_heuristic_sigma(p), 2.0);
  const auto cfg = resolve({KernelKind::gaussian, 0.0}, p);
  EXPECT_DOUBLE_EQ(cfg.sigma, 2.0);
  EXPECT_DOUBLE_EQ(resolve({KernelKind::gaussian, 0.7}, p).sigma, 0.7);
  EXPECT_THROW(median_heuristic_sigma(Matrix::Zero(2, 4)), Error);
}

TEST(KernelKindNames, RoundTrip) {
  for (auto kind : {KernelKind::gaussian, KernelKind::linear, KernelKind::precomputed}) {
    EXPECT_EQ(kernel_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_THROW(kernel_kind_from_string("poly"), Error);
}

TEST(KernelRow, MatchesGramColumns) {
  const Matrix x = oracle::gaussian(4, 12, 2);
  for (const KernelConfig cfg : {KernelConfig{KernelKind::gaussian, 1.5},
                                 KernelConfig{KernelKind::linear, 0.0}}) {
    const Matrix k = build_kernel(x, cfg).values();
    for (Index j = 0; j < 12; ++j) {
      EXPECT_LE((kernel_row(x, x.col(j), cfg) - k.col(j)).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
  EXPECT_THROW(kernel_row(x, Vector::Zero(3), {KernelKind::linear, 0.0}), Error);
}

TEST(KernelDistance, Cases) {
  const Matrix x = oracle::gaussian(3, 15, 3);
  const Matrix g = gaussian_kernel(x, 1.3).values();
  const Matrix l = linear_kernel(x).values();
  for (Index i = 0; i < 15; ++i) {
    EXPECT_EQ(kernel_distance(g, i, i), 0.0);
    for (Index j = 0; j < 15; ++j) {
      EXPECT_GE(kernel_distance(g, i, j), -1e-10);
      EXPECT_EQ(kernel_distance(g, i, j), kernel_distance(g, j, i));
      if (i != j) EXPECT_NEAR(kernel_distance(g, i, j), 2.0 * (1.0 - g(i, j)), 1e-15);
      EXPECT_NEAR(kernel_distance(l, i, j), (x.col(i) - x.col(j)).squaredNorm(), 1e-12);
    }
  }
}

TEST(KernelGraphs, LinearKernelReproducesEuclideanGraphs) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x = oracle::gaussian(4, 30, 10 + seed);
    const Labels labels = every_third_labeled(30, 2);
    const graphs::GraphConfig cfg;
    const auto kg = kernel_graphs(linear_kernel(x), labels, cfg);
    const auto eg = euclidean_graphs(x, labels, cfg);
    EXPECT_EQ(kg.neighbors, eg.neighbors);
    EXPECT_EQ(kg.base.weights, eg.base.weights);
    EXPECT_LE((kg.laplacians.combine(1, 1, 0.1).matrix - eg.laplacians.combine(1, 1, 0.1).matrix)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(KernelGraphs, GaussianKeepsEuclideanNeighborOrder) {
  Matrix p(2, 3);
  p << 0.0, 1.0, 3.0,
       0.0, 0.0, 0.0;
  graphs::GraphConfig cfg;
  cfg.num_neighbors = 1;
  const auto kg = kernel_graphs(gaussian_kernel(p, 1.0), Labels(3), cfg);
  const auto eg = euclidean_graphs(p, Labels(3), cfg);
  EXPECT_EQ(kg.neighbors, eg.neighbors);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x = oracle::gaussian(3, 25, 20 + seed);
    cfg.num_neighbors = 5;
    EXPECT_EQ(kernel_graphs(gaussian_kernel(x, 2.5), Labels(25), cfg).neighbors,
              euclidean_graphs(x, Labels(25), cfg).neighbors);
  }
}

TEST(KernelGraphs, LaplacianRowsSumToZero) {
  const Matrix x = oracle::gaussian(3, 25, 30);
  const auto g = kernel_graphs(gaussian_kernel(x, 1.0), every_third_labeled(25, 3), {});
  for (const auto* l : {&g.laplacians.within, &g.laplacians.between, &g.laplacians.global}) {
    EXPECT_LE(l->matrix.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(l->matrix, l->matrix.transpose());
  }
}

TEST(KernelObjective, ExactReconstructionHasNoFidelityCost) {
  const Matrix x = oracle::gaussian(3, 6, 40);
  KernelModel m;
  m.gram = gaussian_kernel(x, 1.0);
  m.coeffs = Matrix::Identity(6, 6);
  m.codes = Matrix::Identity(6, 6);
  m.classifier = Matrix::Zero(2, 6);
  m.label_scores = Matrix::Zero(2, 6);
  const LabelConstraint none{Matrix::Zero(2, 6), Vector::Zero(6)};
  HyperParams hp;
  EXPECT_NEAR(kernel_objective(m, Matrix::Zero(6, 6), none, hp), hp.lambda * 6.0, 1e-14);
  EXPECT_EQ(solvers::kernel_fidelity(m.gram, m.coeffs, m.codes), 0.0);
}

TEST(KernelObjective, ZeroModelLeavesTraceAndLabelTerms) {
  const Matrix x = oracle::gaussian(3, 9, 41);
  const Labels labels = every_third_labeled(9, 2);
  const auto lc = LabelConstraint::from_labels(labels, 2);
  KernelModel m;
  m.gram = gaussian_kernel(x, 0.8);
  m.coeffs = Matrix::Zero(9, 4);
  m.codes = Matrix::Zero(4, 9);
  m.classifier = Matrix::Zero(2, 4);
  m.label_scores = Matrix::Zero(2, 9);
  HyperParams hp;
  EXPECT_NEAR(kernel_objective(m, Matrix::Zero(9, 9), lc, hp),
              m.gram.values().trace() + hp.label_consistency_weight * 3.0, 1e-13);
}

TEST(KernelObjective, LinearKernelEqualsLinearObjective) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = oracle::gaussian(5, 14, 50 + seed);
    const Labels labels = every_third_labeled(14, 2);
    const auto lc = LabelConstraint::from_labels(labels, 2);
    const auto km = random_kernel_model(x, 6, 2, 60 + seed);
    const Matrix l = euclidean_graphs(x, labels, {}).laplacians.combine(1, 1, 0.1).matrix;
    const SsrgrModel lm{x * km.coeffs, km.codes, km.classifier, km.label_scores};
    HyperParams hp;
    const double linear = objective(lm, x, l, lc, hp);
    EXPECT_NEAR(kernel_objective(km, l, lc, hp), linear, 1e-10 * std::max(1.0, linear));
  }
}

TEST(UpdateClassifier, SlackConstraintsGiveLeastSquares) {
  const Matrix s = oracle::gaussian(4, 30, 70);
  const Matrix h = oracle::gaussian(3, 30, 71) * 0.01;
  const Matrix w = update_classifier(s, h, 0.5, Matrix::Zero(3, 4));
  const Matrix ls = h * s.transpose() * (s * s.transpose()).inverse();
  ASSERT_LT(ls.colwise().squaredNorm().maxCoeff(), 1.0);
  EXPECT_LE((w - ls).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(UpdateClassifier, ZeroScoresGiveZeroClassifier) {
  const Matrix s = oracle::gaussian(4, 20, 72);
  EXPECT_LE(update_classifier(s, Matrix::Zero(3, 20), 0.5, Matrix::Zero(3, 4)).norm(), 1e-12);
}

TEST(UpdateClassifier, FeasibleOptimalAndImproving) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix s = oracle::gaussian(5, 20, 80 + seed) * 0.3;
    const Matrix h = oracle::gaussian(3, 20, 90 + seed) * 2.0;
    const Matrix previous = oracle::gaussian(3, 5, 100 + seed).colwise().normalized();
    const double alpha = 0.07;
    const Matrix w = update_classifier(s, h, alpha, previous);
    EXPECT_LE(w.colwise().squaredNorm().maxCoeff(), 1.0 + 1e-8);
    const double value = alpha * (h - w * s).squaredNorm();
    const Matrix best = oracle::projected_gradient_dictionary(h, s, 1.0);
    const double reference = alpha * (h - best * s).squaredNorm();
    EXPECT_LE(value, reference + 1e-4 * std::max(1.0, reference)) << "seed " << seed;
    EXPECT_LE(value, alpha * (h - previous * s).squaredNorm() + 1e-12);
  }
}

TEST(UpdateClassifier, ZeroAlphaIsAConfigError) {
  EXPECT_THROW(update_classifier(Matrix::Ones(2, 3), Matrix::Ones(1, 3), 0.0, Matrix::Zero(1, 2)),
               Error);
}

TEST(UpdateLabelsKernel, WithoutGraphOrConsistencyReturnsWS) {
  const Matrix x = oracle::gaussian(4, 10, 110);
  const auto m = random_kernel_model(x, 5, 2, 111);
  const LabelConstraint lc = LabelConstraint::from_labels(every_third_labeled(10, 2), 2);
  const Matrix h = update_labels_kernel(m, Matrix::Zero(10, 10), lc, 0.3, 0.0);
  EXPECT_LE((h - m.classifier * m.codes).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UpdateLabelsKernel, SameAsLinearClosedForm) {
  const Matrix x = oracle::gaussian(4, 18, 120);
  const Labels labels = every_third_labeled(18, 3);
  const auto lc = LabelConstraint::from_labels(labels, 3);
  const auto km = random_kernel_model(x, 6, 3, 121);
  const Matrix l = kernel_graphs(km.gram, labels, {}).laplacians.combine(1, 1, 0.1).matrix;
  const SsrgrModel lm{x * km.coeffs, km.codes, km.classifier, km.label_scores};
  const Matrix a = update_labels_kernel(km, l, lc, 0.07, 3e-4);
  const Matrix b = update_labels(lm, l, lc, 0.07, 3e-4);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()));
}

TEST(UpdateLabelsKernel, GradientVanishesAtReturnedScores) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = oracle::gaussian(4, 18, 130 + seed);
    const Labels labels = every_third_labeled(18, 3);
    const auto lc = LabelConstraint::from_labels(labels, 3);
    auto m = random_kernel_model(x, 6, 3, 140 + seed);
    m.gram = gaussian_kernel(x, 1.5);
    const Matrix l = kernel_graphs(m.gram, labels, {}).laplacians.combine(1, 1, 0.1).matrix;
    const double alpha = 0.07;
    const double gamma = 0.05;
    const Matrix h = update_labels_kernel(m, l, lc, alpha, gamma);
    const Matrix ws = m.classifier * m.codes;
    const auto f = [&](const Matrix& probe) {
      double value = alpha * (probe - ws).squaredNorm() + (probe * l * probe.transpose()).trace();
      for (Index j = 0; j < probe.cols(); ++j) {
        value += gamma * lc.indicator(j) * (probe.col(j) - lc.targets.col(j)).squaredNorm();
      }
      return value;
    };
    const Matrix grad = oracle::numeric_gradient(f, h, 1e-3);
    EXPECT_LE(grad.norm(), 1e-8 * (1.0 + h.norm())) << "seed " << seed;
  }
}

HyperParams kernel_fit_params() {
  HyperParams hp = HyperParams::kernel_defaults();
  hp.dict_size = 20;
  hp.admm.max_iters = 200;
  hp.early_stop_tol = 0.0;
  hp.seed = 3;
  return hp;
}

TEST(FitKernel, ZeroIterationsReturnsInitialization) {
  const Matrix x = oracle::gaussian(5, 30, 150);
  const Labels labels = every_third_labeled(30, 2);
  HyperParams hp = kernel_fit_params();
  hp.outer_iters = 0;
  const auto result = fit_kernel(x, labels, 2, hp, {KernelKind::gaussian, 1.0});
  const auto init = initialize_kernel(gaussian_kernel(x.colwise().normalized(), 1.0),
                                      LabelConstraint::from_labels(labels, 2), hp);
  EXPECT_TRUE(result.trace.empty());
  EXPECT_EQ(result.model.coeffs, init.coeffs);
  EXPECT_EQ(result.model.codes, init.codes);
  EXPECT_EQ(result.model.classifier, init.classifier);
  EXPECT_EQ(result.model.label_scores, init.label_scores);
}

TEST(FitKernel, TraceNonIncreasingAndFeasible) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Matrix x = oracle::gaussian(8, 45, 160 + seed);
    const auto result = fit_kernel(x, every_third_labeled(45, 3), 3, kernel_fit_params(), {});
    ASSERT_EQ(result.trace.size(), 15u);
    double previous = result.initial_objective;
    for (double value : result.trace) {
      EXPECT_LE(value, previous + 1e-8) << "seed " << seed;
      previous = value;
    }
    const Matrix& b = result.model.coeffs;
    const Vector norms = (b.transpose() * result.model.gram.values() * b).diagonal();
    EXPECT_LE(norms.maxCoeff(), 1.0 + 1e-8);
    EXPECT_LE(result.model.classifier.colwise().squaredNorm().maxCoeff(), 1.0 + 1e-8);
    EXPECT_GT(result.kernel.sigma, 0.0);
  }
}

TEST(FitKernel, PrecomputedGramMatchesFeaturePath) {
  const Matrix x = oracle::gaussian(4, 24, 170);
  const Labels labels = every_third_labeled(24, 2);
  HyperParams hp = HyperParams::kernel_defaults();
  hp.normalize = false;
  const auto a = fit_kernel(x, labels, 2, hp, {KernelKind::gaussian, 1.2});
  const auto b = fit_kernel(gaussian_kernel(x, 1.2), labels, 2, hp);
  EXPECT_EQ(a.model.label_scores, b.model.label_scores);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(FitKernel, LinearKernelAgreesWithLinearFit) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ds = data::synthetic_blobs(3, 50, 10, data::kDefaultBlobSpread, 600 + seed);
    const auto split = data::split(ds, {5, seed, true});
    const Labels labels = data::training_labels(ds, split);
    HyperParams hp;
    hp.seed = seed;
    const auto linear = predict_transductive(fit(ds.features, labels, 3, hp).model.label_scores);
    const auto kern = predict_transductive(
        fit_kernel(ds.features, labels, 3, hp, {KernelKind::linear, 0.0}).model.label_scores);
    Index agree = 0;
    for (std::size_t j = 0; j < linear.size(); ++j) agree += linear[j] == kern[j] ? 1 : 0;
    EXPECT_GE(static_cast<double>(agree) / static_cast<double>(linear.size()), 0.95)
        << "seed " << seed;
  }
}

TEST(FitKernel, SeparatesConcentricCircles) {
  const auto ds = data::synthetic_circles(100, 0.05, 7);
  const auto split = data::split(ds, {10, 7, true});
  HyperParams hp = HyperParams::kernel_defaults();
  hp.normalize = false;
  hp.seed = 7;
  const auto result = fit_kernel(ds.features, data::training_labels(ds, split), 2, hp, {});
  EXPECT_GE(accuracy(predict_transductive(result.model.label_scores), ds.labels), 0.90);
}

TEST(FitKernel, RejectsIndefiniteGram) {
  Matrix k = Matrix::Identity(4, 4);
  k(0, 0) = -1.0;
  EXPECT_THROW(fit_kernel(KernelGram::from_matrix(k), Labels{0, 1, {}, {}}, 2, {}), Error);
}

TEST(PredictInductiveKernel, TrainingColumnsKeepTheirClass) {
  Index agree = 0;
  Index total = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ds = data::synthetic_blobs(3, 30, 10, data::kDefaultBlobSpread, 700 + seed);
    const auto split = data::split(ds, {5, seed, true});
    HyperParams hp = HyperParams::kernel_defaults();
    hp.seed = seed;
    const auto result = fit_kernel(ds.features, data::training_labels(ds, split), 3, hp, {});
    const auto transductive = predict_transductive(result.model.label_scores);
    for (Index j = 0; j < ds.size(); ++j) {
      const Index cls =
          predict_inductive_kernel(result.model, ds.features, ds.features.col(j), result.kernel, hp);
      agree += cls == transductive[static_cast<std::size_t>(j)] ? 1 : 0;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(total), 0.95);
}

TEST(PredictInductiveKernel, ZeroScoresFallToFirstClass) {
  const Matrix x = oracle::gaussian(3, 8, 180);
  auto m = random_kernel_model(x, 4, 3, 181);
  m.classifier.setZero();
  EXPECT_EQ(predict_inductive_kernel(m, x, oracle::gaussian(3, 1, 182), {KernelKind::linear, 0.0},
                                     HyperParams{}),
            0);
}

TEST(PredictInductiveKernel, LinearKernelMatchesLinearPrediction) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = oracle::gaussian(5, 16, 190 + seed);
    HyperParams hp;
    hp.normalize = false;
    auto km = random_kernel_model(x, 6, 3, 200 + seed);
    const SsrgrModel lm{x * km.coeffs, km.codes, km.classifier, km.label_scores};
    for (int t = 0; t < 5; ++t) {
      const Vector sample = oracle::gaussian(5, 1, 300 + 10 * seed + static_cast<std::uint64_t>(t));
      EXPECT_EQ(predict_inductive_kernel(km, x, sample, {KernelKind::linear, 0.0}, hp),
                predict_inductive(lm, sample, hp));
    }
  }
}

TEST(KernelSubSteps, LinearKernelMatchesLinearSolvers) {
  const Matrix x = oracle::gaussian(6, 20, 400);
  const KernelGram gram = linear_kernel(x);
  const Matrix s = oracle::gaussian(5, 20, 401) * 0.4;
  const Matrix b0 = oracle::gaussian(20, 5, 402) * 0.05;

  // B step: the image X B attains the linear dictionary update's objective.
  const Matrix b = solvers::kernel_dictionary_update(s, gram, 1.0, b0);
  const Matrix d = solvers::lagrange_dual_dictionary(x, s, 1.0, x * b0);
  const double kernel_value = solvers::kernel_fidelity(gram, b, s);
  const double linear_value = (x - d * s).squaredNorm();
  EXPECT_NEAR(kernel_value, linear_value, 1e-8 * std::max(1.0, linear_value));

  // W step: the same constrained problem with H as data.
  const Matrix h = oracle::gaussian(3, 20, 403);
  const Matrix w = update_classifier(s, h, 0.2, Matrix::Zero(3, 5));
  const Matrix w_linear = solvers::lagrange_dual_dictionary(h, s, 1.0, Matrix::Zero(3, 5));
  EXPECT_NEAR((h - w * s).squaredNorm(), (h - w_linear * s).squaredNorm(), 1e-8);
}

}  // namespace
