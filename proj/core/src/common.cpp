#include "ssrgr/error.hpp"
#include "ssrgr/labels.hpp"
#include "ssrgr/types.hpp"

#include <algorithm>
#include <string>

namespace ssrgr {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::invalid_labels: return "invalid-labels";
    case ErrorKind::invalid_split: return "invalid-split";
    case ErrorKind::degenerate_graph: return "degenerate-graph";
    case ErrorKind::numeric_input: return "numeric-input";
    case ErrorKind::invalid_kernel: return "invalid-kernel";
    case ErrorKind::indefinite_laplacian: return "indefinite-laplacian";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::numeric_input,
                std::string(what) + " contains NaN or infinite entries");
  }
}

std::vector<Index> labeled_class_counts(const Labels& labels, Index num_classes) {
  std::vector<Index> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    const Index y = *labels[i];
    if (y < 0 || y >= num_classes) {
      throw Error(ErrorKind::invalid_labels,
                  "point " + std::to_string(i) + " has class id " + std::to_string(y) +
                      " outside [0, " + std::to_string(num_classes) + ")");
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

Index infer_num_classes(const Labels& labels) {
  Index c = 0;
  for (const auto& y : labels) {
    if (y) {
      if (*y < 0) throw Error(ErrorKind::invalid_labels, "negative class id");
      c = std::max(c, *y + 1);
    }
  }
  return c;
}

LabelConstraint LabelConstraint::from_labels(const Labels& labels, Index num_classes) {
  labeled_class_counts(labels, num_classes);  // validates ids
  const auto n = static_cast<Index>(labels.size());
  LabelConstraint lc;
  lc.targets = Matrix::Zero(num_classes, n);
  lc.indicator = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    if (const auto& y = labels[static_cast<std::size_t>(j)]) {
      lc.targets(*y, j) = 1.0;
      lc.indicator(j) = 1.0;
    }
  }
  return lc;
}

void LabelConstraint::require_every_class() const {
  const Vector per_class = targets.rowwise().sum();
  for (Index c = 0; c < per_class.size(); ++c) {
    if (per_class(c) == 0.0) {
      throw Error(ErrorKind::invalid_labels,
                  "class " + std::to_string(c + 1) + " has no labeled samples");
    }
  }
}

Index argmax_class(const Eigen::Ref<const Vector>& scores) {
  Index best = 0;
  for (Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  return best;
}

std::vector<Index> predict_transductive(const Matrix& label_scores) {
  std::vector<Index> out(static_cast<std::size_t>(label_scores.cols()));
  for (Index j = 0; j < label_scores.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = argmax_class(label_scores.col(j));
  }
  return out;
}

}  // namespace ssrgr
