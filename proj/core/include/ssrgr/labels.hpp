#pragma once

#include "ssrgr/types.hpp"

#include <vector>

namespace ssrgr {

/// Number of labeled points per class. Throws invalid_labels on ids outside
/// [0, num_classes).
std::vector<Index> labeled_class_counts(const Labels& labels, Index num_classes);

/// Largest label id + 1, or 0 when nothing is labeled.
Index infer_num_classes(const Labels& labels);

/// The label-consistency pair (F, U): F holds one-hot columns for labeled
/// points and zeros elsewhere; U is the diagonal labeled-point indicator.
struct LabelConstraint {
  Matrix targets;     // F, c x n
  Vector indicator;   // diag(U), n

  static LabelConstraint from_labels(const Labels& labels, Index num_classes);

  Index num_classes() const { return targets.rows(); }
  Index num_points() const { return targets.cols(); }

  /// Throws invalid_labels naming the first class without a labeled point.
  void require_every_class() const;
};

/// Column-wise argmax; ties go to the lowest class index.
std::vector<Index> predict_transductive(const Matrix& label_scores);

Index argmax_class(const Eigen::Ref<const Vector>& scores);

}  // namespace ssrgr
