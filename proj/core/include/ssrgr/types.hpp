#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace ssrgr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Per-point class id, 0-based. std::nullopt marks an unlabeled point.
using Labels = std::vector<std::optional<Index>>;

/// Throws numeric_input if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

}  // namespace ssrgr
