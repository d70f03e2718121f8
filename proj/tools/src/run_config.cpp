#include "run_config.hpp"

#include <ssrgr/error.hpp>

#include <boost/property_tree/ini_parser.hpp>

#include <map>
#include <set>
#include <sstream>

namespace ssrgr::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"mode", "seed"}},
      {"data", {"path", "format", "projection_dim", "source_dim"}},
      {"split", {"labeled_per_class", "seed", "shuffle"}},
      {"ssrgr",
       {"lambda", "alpha", "gamma", "beta1", "beta2", "beta3", "ridge_mu", "dict_size",
        "outer_iters", "early_stop_tol", "init_rounds", "init_admm_iters", "normalize"}},
      {"graph", {"num_neighbors", "beta_w", "beta_b", "propagation_mixing", "delta"}},
      {"admm", {"rho", "max_iters", "tol"}},
      {"kernel", {"kind", "sigma"}},
      {"output", {"model", "report"}},
  };
  return keys;
}

void check_keys(const pt::ptree& tree) {
  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    const auto it = keys.find(section);
    if (it == keys.end()) throw Error(ErrorKind::invalid_config, "unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw Error(ErrorKind::invalid_config, "unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
}

template <typename T>
void read(const pt::ptree& tree, const std::string& key, T& target) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return;
  const auto value = node->get_value_optional<T>();
  if (!value) {
    throw Error(ErrorKind::invalid_config,
                "cannot parse '" + node->data() + "' for " + key);
  }
  target = *value;
}

template <typename T>
std::optional<T> read_optional(const pt::ptree& tree, const std::string& key) {
  if (!tree.get_child_optional(pt::ptree::path_type(key, '.'))) return std::nullopt;
  T value{};
  read(tree, key, value);
  return value;
}

std::filesystem::path resolve_path(const std::string& raw, const std::filesystem::path& base) {
  if (raw.empty()) return {};
  std::filesystem::path p(raw);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::optional<data::FileFormat> format_from_string(const std::string& name) {
  if (name.empty() || name == "auto") return std::nullopt;
  if (name == "text") return data::FileFormat::text;
  if (name == "binary") return data::FileFormat::binary;
  throw Error(ErrorKind::invalid_config, "unknown data format '" + name + "'");
}

void apply_mode_weights(RunConfig& cfg) {
  const HyperParams defaults =
      cfg.mode == Mode::kernel ? HyperParams::kernel_defaults() : HyperParams::linear_defaults();
  cfg.hp.lambda = cfg.explicit_lambda.value_or(defaults.lambda);
  cfg.hp.alpha = cfg.explicit_alpha.value_or(defaults.alpha);
  cfg.hp.label_consistency_weight = cfg.explicit_gamma.value_or(defaults.label_consistency_weight);
}

}  // namespace

const char* to_string(Mode mode) noexcept {
  return mode == Mode::kernel ? "kernel" : "linear";
}

Mode mode_from_string(const std::string& name) {
  if (name == "linear") return Mode::linear;
  if (name == "kernel") return Mode::kernel;
  throw Error(ErrorKind::invalid_config, "unknown mode '" + name + "' (expected linear or kernel)");
}

RunConfig parse_config(const pt::ptree& tree, const std::filesystem::path& base_dir) {
  check_keys(tree);
  RunConfig cfg;

  std::string mode = "linear";
  read(tree, "run.mode", mode);
  cfg.mode = mode_from_string(mode);
  read(tree, "run.seed", cfg.seed);
  cfg.split.seed = cfg.seed;
  cfg.hp.seed = cfg.seed;

  std::string path;
  read(tree, "data.path", path);
  cfg.data_path = resolve_path(path, base_dir);
  std::string format;
  read(tree, "data.format", format);
  cfg.data_format = format_from_string(format);
  read(tree, "data.projection_dim", cfg.projection_dim);
  read(tree, "data.source_dim", cfg.source_dim);
  if (cfg.projection_dim < 0) {
    throw Error(ErrorKind::invalid_config, "data.projection_dim must be >= 0");
  }

  read(tree, "split.labeled_per_class", cfg.split.labeled_per_class);
  read(tree, "split.seed", cfg.split.seed);
  read(tree, "split.shuffle", cfg.split.shuffle);

  HyperParams& hp = cfg.hp;
  cfg.explicit_lambda = read_optional<double>(tree, "ssrgr.lambda");
  cfg.explicit_alpha = read_optional<double>(tree, "ssrgr.alpha");
  cfg.explicit_gamma = read_optional<double>(tree, "ssrgr.gamma");
  apply_mode_weights(cfg);
  read(tree, "ssrgr.beta1", hp.beta1);
  read(tree, "ssrgr.beta2", hp.beta2);
  read(tree, "ssrgr.beta3", hp.beta3);
  read(tree, "ssrgr.ridge_mu", hp.ridge_mu);
  read(tree, "ssrgr.dict_size", hp.dict_size);
  read(tree, "ssrgr.outer_iters", hp.outer_iters);
  read(tree, "ssrgr.early_stop_tol", hp.early_stop_tol);
  read(tree, "ssrgr.init_rounds", hp.init_rounds);
  read(tree, "ssrgr.init_admm_iters", hp.init_admm_iters);
  read(tree, "ssrgr.normalize", hp.normalize);

  read(tree, "graph.num_neighbors", hp.graph.num_neighbors);
  read(tree, "graph.beta_w", hp.graph.beta_w);
  read(tree, "graph.beta_b", hp.graph.beta_b);
  read(tree, "graph.propagation_mixing", hp.graph.propagation_mixing);
  read(tree, "graph.delta", hp.graph.delta);

  read(tree, "admm.rho", hp.admm.rho);
  read(tree, "admm.max_iters", hp.admm.max_iters);
  read(tree, "admm.tol", hp.admm.tol);

  std::string kind = "gaussian";
  read(tree, "kernel.kind", kind);
  cfg.kernel.kind = kernel::kernel_kind_from_string(kind);
  read(tree, "kernel.sigma", cfg.kernel.sigma);
  if (cfg.kernel.sigma < 0.0) throw Error(ErrorKind::invalid_config, "kernel.sigma must be >= 0");

  std::string model;
  std::string report;
  read(tree, "output.model", model);
  read(tree, "output.report", report);
  cfg.model_path = resolve_path(model, base_dir);
  cfg.report_path = resolve_path(report, base_dir);

  hp.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::parse, e.what());
  }
  return parse_config(tree, path.parent_path());
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.split.seed = seed;
  cfg.hp.seed = seed;
}

void apply_mode(RunConfig& cfg, Mode mode) {
  cfg.mode = mode;
  apply_mode_weights(cfg);
}

pt::ptree echo_config(const RunConfig& cfg, bool with_outputs) {
  pt::ptree t;
  const HyperParams& hp = cfg.hp;
  t.put("run.mode", to_string(cfg.mode));
  t.put("run.seed", cfg.seed);
  t.put("data.path", cfg.data_path.string());
  t.put("data.format", !cfg.data_format                              ? "auto"
                       : *cfg.data_format == data::FileFormat::binary ? "binary"
                                                                      : "text");
  t.put("data.projection_dim", cfg.projection_dim);
  t.put("data.source_dim", cfg.source_dim);
  t.put("split.labeled_per_class", cfg.split.labeled_per_class);
  t.put("split.seed", cfg.split.seed);
  t.put("split.shuffle", cfg.split.shuffle);
  t.put("ssrgr.lambda", hp.lambda);
  t.put("ssrgr.alpha", hp.alpha);
  t.put("ssrgr.gamma", hp.label_consistency_weight);
  t.put("ssrgr.beta1", hp.beta1);
  t.put("ssrgr.beta2", hp.beta2);
  t.put("ssrgr.beta3", hp.beta3);
  t.put("ssrgr.ridge_mu", hp.ridge_mu);
  t.put("ssrgr.dict_size", hp.dict_size);
  t.put("ssrgr.outer_iters", hp.outer_iters);
  t.put("ssrgr.early_stop_tol", hp.early_stop_tol);
  t.put("ssrgr.init_rounds", hp.init_rounds);
  t.put("ssrgr.init_admm_iters", hp.init_admm_iters);
  t.put("ssrgr.normalize", hp.normalize);
  t.put("graph.num_neighbors", hp.graph.num_neighbors);
  t.put("graph.beta_w", hp.graph.beta_w);
  t.put("graph.beta_b", hp.graph.beta_b);
  t.put("graph.propagation_mixing", hp.graph.propagation_mixing);
  t.put("graph.delta", hp.graph.delta);
  t.put("admm.rho", hp.admm.rho);
  t.put("admm.max_iters", hp.admm.max_iters);
  t.put("admm.tol", hp.admm.tol);
  t.put("kernel.kind", kernel::to_string(cfg.kernel.kind));
  t.put("kernel.sigma", cfg.kernel.sigma);
  if (with_outputs) {
    t.put("output.model", cfg.model_path.string());
    t.put("output.report", cfg.report_path.string());
  }
  return t;
}

std::string echo_config_text(const RunConfig& cfg, bool with_outputs) {
  std::ostringstream out;
  pt::write_ini(out, echo_config(cfg, with_outputs));
  return out.str();
}

}  // namespace ssrgr::cli
