#pragma once

#include "ssrgr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ssrgr::data {

/// Column-per-sample features with optional per-sample class ids.
struct Dataset {
  Matrix features;      // d x n
  Labels labels;        // n entries, 0-based; nullopt when unknown
  Index class_count = 0;

  Index size() const { return features.cols(); }
  Index dim() const { return features.rows(); }
};

enum class FileFormat { text, binary };

/// Text layout:
///   rows cols has_labels
///   <rows lines of cols values>
///   [<one line of cols class ids, 1-based, 0 = unlabeled>]
///
/// Binary layout (little-endian):
///   bytes 0-3   magic "SRDM"
///   bytes 4-7   uint32 rows
///   bytes 8-11  uint32 cols
///   bytes 12-15 uint32 flags (bit 0: label row present)
///   rows*cols float64, row-major, then cols float64 class ids if flagged.
Dataset load_dataset(const std::filesystem::path& path, FileFormat format);
void save_dataset(const Dataset& ds, const std::filesystem::path& path, FileFormat format);

Dataset read_text(std::istream& in);
void write_text(const Dataset& ds, std::ostream& out);
Dataset read_binary(std::istream& in);
void write_binary(const Dataset& ds, std::ostream& out);

/// Guesses the format from the extension: ".bin" is binary, anything else text.
FileFormat format_for(const std::filesystem::path& path);

/// R X with R (target_dim x d) i.i.d. N(0, 1) / sqrt(target_dim). With
/// `identity_if_same_dim` and target_dim == d the input is returned as is.
Matrix random_projection(const Matrix& features, Index target_dim, std::uint64_t seed,
                         bool identity_if_same_dim = false);

struct SplitSpec {
  Index labeled_per_class = 5;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct Split {
  std::vector<Index> labeled;    // ascending
  std::vector<Index> unlabeled;  // ascending
};

/// Picks labeled_per_class points of every class as the labeled set.
/// Throws invalid_split when a class has too few members.
Split split(const Dataset& ds, const SplitSpec& spec);

/// The dataset's labels with everything outside split.labeled hidden.
Labels training_labels(const Dataset& ds, const Split& split);

/// Mean separation of the blob generator (class means sit at e_c).
inline constexpr double kBlobMeanSeparation = 1.4142135623730951;

/// Spread at 0.15 of the mean separation.
inline constexpr double kDefaultBlobSpread = 0.15 * kBlobMeanSeparation;

/// Isotropic gaussian clusters around the simplex vertices e_1..e_c in R^dim.
/// Samples are ordered class by class. Requires classes >= 2 and dim >= classes.
Dataset synthetic_blobs(Index classes, Index per_class, Index dim, double spread,
                        std::uint64_t seed);

/// Two concentric circles of radius 1 (class 0) and 2 (class 1) in the plane
/// with gaussian coordinate noise. Requires per_class >= 10.
Dataset synthetic_circles(Index per_class, double noise, std::uint64_t seed);

/// Unit l2 norm columns. Throws normalization naming the first zero column.
Matrix normalize_columns(const Matrix& features);

}  // namespace ssrgr::data
