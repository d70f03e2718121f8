#pragma once

#include "run_config.hpp"

#include <ssrgr/kssrgr.hpp>
#include <ssrgr/ssrgr.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace ssrgr::cli {

/// A trained model plus what prediction needs: the training features as
/// fitted (after any projection, before normalization), the training labels
/// and the effective configuration.
struct StoredModel {
  RunConfig config;
  Index class_count = 0;
  Matrix train_features;
  Labels train_labels;
  SsrgrModel linear;               // mode == linear
  kernel::KernelModel kernel;      // mode == kernel
  kernel::KernelConfig resolved;   // sigma filled in

  Mode mode() const { return config.mode; }
  const Matrix& label_scores() const {
    return mode() == Mode::kernel ? kernel.label_scores : linear.label_scores;
  }
};

/// Little-endian layout:
///   "SSRGRMDL", uint32 version, uint32 mode (0 linear, 1 kernel),
///   uint32 kernel kind, float64 sigma,
///   uint64 d, n, k, c,
///   matrices, each uint64 rows, uint64 cols, float64 row-major payload:
///     train features, training labels (1 x n, 1-based, 0 = unlabeled),
///     D or B, S, W, H, and for the kernel mode the Gram matrix,
///   uint64 length + config echo (INI text),
///   uint32 CRC-32 of every preceding byte.
inline constexpr std::uint32_t kModelVersion = 1;

void write_model(const StoredModel& model, std::ostream& out);
StoredModel read_model(std::istream& in);

/// Writes to a sibling temporary file, then renames over `path`.
void save_model(const StoredModel& model, const std::filesystem::path& path);
StoredModel load_model(const std::filesystem::path& path);

/// Atomic text write with the same temporary-then-rename scheme.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace ssrgr::cli
