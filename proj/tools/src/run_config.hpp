#pragma once

#include <ssrgr/data.hpp>
#include <ssrgr/hyperparams.hpp>
#include <ssrgr/kssrgr.hpp>

#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ssrgr::cli {

enum class Mode { linear, kernel };

const char* to_string(Mode mode) noexcept;
Mode mode_from_string(const std::string& name);

/// Everything a train or ablate run needs. Read from an INI file:
///
///   [run]     mode = linear | kernel, seed
///   [data]    path, format = auto | text | binary, projection_dim (0 = off),
///             source_dim (written by training)
///   [split]   labeled_per_class, seed, shuffle
///   [ssrgr]   lambda, alpha, gamma, beta1..3, ridge_mu, dict_size,
///             outer_iters, early_stop_tol, init_rounds, init_admm_iters,
///             normalize
///   [graph]   num_neighbors, beta_w, beta_b, propagation_mixing, delta
///   [admm]    rho, max_iters, tol
///   [kernel]  kind = gaussian | linear | precomputed, sigma (0 = median)
///   [output]  model, report
///
/// Unset [ssrgr] weights fall back to the defaults of the selected mode.
/// With kind = precomputed the dataset's feature matrix is the n x n Gram.
struct RunConfig {
  Mode mode = Mode::linear;
  std::uint64_t seed = 0;

  std::filesystem::path data_path;
  std::optional<data::FileFormat> data_format;
  Index projection_dim = 0;
  /// Feature dimension before projection; recorded by training.
  Index source_dim = 0;

  data::SplitSpec split;
  HyperParams hp;
  kernel::KernelConfig kernel;

  std::filesystem::path model_path;
  std::filesystem::path report_path;

  // Mode-tuned weights given explicitly in the file.
  std::optional<double> explicit_lambda;
  std::optional<double> explicit_alpha;
  std::optional<double> explicit_gamma;

  data::FileFormat resolved_format() const {
    return data_format.value_or(data::format_for(data_path));
  }
};

/// Relative data/output paths are resolved against `base_dir`.
RunConfig parse_config(const boost::property_tree::ptree& tree,
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Re-applies the run seed to the split and hyperparameters.
void apply_seed(RunConfig& cfg, std::uint64_t seed);
/// Switches mode and resets the mode-tuned weights not set explicitly.
void apply_mode(RunConfig& cfg, Mode mode);

/// Every effective setting in the same INI layout. Without outputs the
/// [output] section is left out, so the echo depends only on the run.
boost::property_tree::ptree echo_config(const RunConfig& cfg, bool with_outputs = true);
std::string echo_config_text(const RunConfig& cfg, bool with_outputs = true);

}  // namespace ssrgr::cli
