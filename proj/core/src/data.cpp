#include "ssrgr/data.hpp"

#include "ssrgr/error.hpp"
#include "ssrgr/labels.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace ssrgr::data {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'R', 'D', 'M'};

template <typename T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
  }
  return value;
}

template <typename T>
void put(std::ostream& out, T value) {
  value = byteswap_if_big(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, std::streamoff offset) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorKind::parse, "unexpected end of binary dataset at byte offset " +
                                      std::to_string(offset));
  }
  return byteswap_if_big(value);
}

/// Whitespace tokenizer that remembers line numbers for error messages.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string& token) {
    while (true) {
      if (line_stream_ >> token) return true;
      std::string line;
      if (!std::getline(in_, line)) return false;
      ++line_no_;
      line_stream_.clear();
      line_stream_.str(line);
    }
  }

  std::string expect(const char* what) {
    std::string token;
    if (!next(token)) {
      throw Error(ErrorKind::parse, std::string("unexpected end of input while reading ") +
                                        what + " (line " + std::to_string(line_no_) + ")");
    }
    return token;
  }

  double expect_double(const char* what) {
    const std::string token = expect(what);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no_) + ": cannot parse '" +
                                        token + "' as " + what);
    }
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::numeric_input, "line " + std::to_string(line_no_) +
                                                ": non-finite value in " + what);
    }
    return value;
  }

  long long expect_integer(const char* what) {
    const std::string token = expect(what);
    std::size_t used = 0;
    long long value = 0;
    try {
      value = std::stoll(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no_) + ": cannot parse '" +
                                        token + "' as " + what);
    }
    return value;
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  std::istringstream line_stream_;
  int line_no_ = 0;
};

std::optional<Index> label_from_file(double raw, Index column) {
  if (raw != std::floor(raw) || raw < 0.0) {
    throw Error(ErrorKind::parse, "label of column " + std::to_string(column) +
                                      " is not a non-negative integer");
  }
  if (raw == 0.0) return std::nullopt;
  return static_cast<Index>(raw) - 1;
}

double label_to_file(const std::optional<Index>& y) {
  return y ? static_cast<double>(*y + 1) : 0.0;
}

void finish_labels(Dataset& ds) { ds.class_count = infer_num_classes(ds.labels); }

}  // namespace

Dataset read_text(std::istream& in) {
  TokenReader reader(in);
  std::string first;
  if (!reader.next(first)) throw Error(ErrorKind::parse, "empty dataset file");

  long long rows = 0;
  try {
    std::size_t used = 0;
    rows = std::stoll(first, &used);
    if (used != first.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorKind::parse, "line " + std::to_string(reader.line()) +
                                      ": header must start with the row count");
  }
  const long long cols = reader.expect_integer("column count");
  const long long has_labels = reader.expect_integer("label flag");
  if (rows < 0 || cols < 0 || (has_labels != 0 && has_labels != 1)) {
    throw Error(ErrorKind::parse, "header must be 'rows cols has_labels' with has_labels 0 or 1");
  }

  Dataset ds;
  ds.features.resize(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    for (long long j = 0; j < cols; ++j) ds.features(i, j) = reader.expect_double("feature value");
  }
  ds.labels.assign(static_cast<std::size_t>(cols), std::nullopt);
  if (has_labels) {
    for (long long j = 0; j < cols; ++j) {
      ds.labels[static_cast<std::size_t>(j)] = label_from_file(reader.expect_double("label"), j);
    }
  }
  std::string extra;
  if (reader.next(extra)) {
    throw Error(ErrorKind::dimension_mismatch,
                "line " + std::to_string(reader.line()) +
                    ": more values than the header's dimensions allow");
  }
  finish_labels(ds);
  return ds;
}

void write_text(const Dataset& ds, std::ostream& out) {
  const bool has_labels =
      std::any_of(ds.labels.begin(), ds.labels.end(), [](const auto& y) { return y.has_value(); });
  out << ds.features.rows() << ' ' << ds.features.cols() << ' ' << (has_labels ? 1 : 0) << '\n';
  out.precision(17);
  for (Index i = 0; i < ds.features.rows(); ++i) {
    for (Index j = 0; j < ds.features.cols(); ++j) {
      if (j) out << ' ';
      out << ds.features(i, j);
    }
    out << '\n';
  }
  if (has_labels) {
    for (std::size_t j = 0; j < ds.labels.size(); ++j) {
      if (j) out << ' ';
      out << static_cast<long long>(label_to_file(ds.labels[j]));
    }
    out << '\n';
  }
}

Dataset read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4)) throw Error(ErrorKind::parse, "empty binary dataset");
  if (magic != kMagic) throw Error(ErrorKind::parse, "bad magic in binary dataset header");
  const auto rows = get<std::uint32_t>(in, 4);
  const auto cols = get<std::uint32_t>(in, 8);
  const auto flags = get<std::uint32_t>(in, 12);
  if (flags > 1) throw Error(ErrorKind::parse, "unknown flags in binary dataset header");

  Dataset ds;
  ds.features.resize(rows, cols);
  std::streamoff offset = 16;
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j, offset += 8) {
      const double v = get<double>(in, offset);
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::numeric_input,
                    "non-finite feature at byte offset " + std::to_string(offset));
      }
      ds.features(i, j) = v;
    }
  }
  ds.labels.assign(cols, std::nullopt);
  if (flags & 1u) {
    for (std::uint32_t j = 0; j < cols; ++j, offset += 8) {
      ds.labels[j] = label_from_file(get<double>(in, offset), j);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::dimension_mismatch, "trailing bytes after binary dataset payload");
  }
  finish_labels(ds);
  return ds;
}

void write_binary(const Dataset& ds, std::ostream& out) {
  const bool has_labels =
      std::any_of(ds.labels.begin(), ds.labels.end(), [](const auto& y) { return y.has_value(); });
  out.write(kMagic.data(), 4);
  put(out, static_cast<std::uint32_t>(ds.features.rows()));
  put(out, static_cast<std::uint32_t>(ds.features.cols()));
  put(out, static_cast<std::uint32_t>(has_labels ? 1 : 0));
  for (Index i = 0; i < ds.features.rows(); ++i) {
    for (Index j = 0; j < ds.features.cols(); ++j) put(out, ds.features(i, j));
  }
  if (has_labels) {
    for (const auto& y : ds.labels) put(out, label_to_file(y));
  }
}

FileFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? FileFormat::binary : FileFormat::text;
}

Dataset load_dataset(const std::filesystem::path& path, FileFormat format) {
  std::ifstream in(path, format == FileFormat::binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorKind::io, "cannot open dataset " + path.string());
  try {
    return format == FileFormat::binary ? read_binary(in) : read_text(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path, FileFormat format) {
  if (static_cast<Index>(ds.labels.size()) != ds.features.cols() && !ds.labels.empty()) {
    throw Error(ErrorKind::dimension_mismatch, "label count differs from sample count");
  }
  std::ofstream out(path, format == FileFormat::binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorKind::io, "cannot write dataset " + path.string());
  if (format == FileFormat::binary) {
    write_binary(ds, out);
  } else {
    write_text(ds, out);
  }
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

Matrix random_projection(const Matrix& features, Index target_dim, std::uint64_t seed,
                         bool identity_if_same_dim) {
  if (target_dim <= 0) {
    throw Error(ErrorKind::invalid_config, "projection target dimension must be positive");
  }
  if (identity_if_same_dim && target_dim == features.rows()) return features;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix r(target_dim, features.rows());
  for (Index i = 0; i < r.rows(); ++i) {
    for (Index j = 0; j < r.cols(); ++j) r(i, j) = normal(rng);
  }
  r /= std::sqrt(static_cast<double>(target_dim));
  return r * features;
}

Split split(const Dataset& ds, const SplitSpec& spec) {
  if (spec.labeled_per_class < 1) {
    throw Error(ErrorKind::invalid_split, "labeled_per_class must be at least 1");
  }
  const Index c = std::max(ds.class_count, infer_num_classes(ds.labels));
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(c));
  for (std::size_t j = 0; j < ds.labels.size(); ++j) {
    if (ds.labels[j]) members[static_cast<std::size_t>(*ds.labels[j])].push_back(static_cast<Index>(j));
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<bool> is_labeled(ds.labels.size(), false);
  for (Index cls = 0; cls < c; ++cls) {
    auto& m = members[static_cast<std::size_t>(cls)];
    if (static_cast<Index>(m.size()) < spec.labeled_per_class) {
      throw Error(ErrorKind::invalid_split,
                  "class " + std::to_string(cls + 1) + " has " + std::to_string(m.size()) +
                      " members, fewer than labeled_per_class = " +
                      std::to_string(spec.labeled_per_class));
    }
    if (spec.shuffle) std::shuffle(m.begin(), m.end(), rng);
    for (Index a = 0; a < spec.labeled_per_class; ++a) {
      is_labeled[static_cast<std::size_t>(m[static_cast<std::size_t>(a)])] = true;
    }
  }
  Split out;
  for (std::size_t j = 0; j < is_labeled.size(); ++j) {
    (is_labeled[j] ? out.labeled : out.unlabeled).push_back(static_cast<Index>(j));
  }
  return out;
}

Labels training_labels(const Dataset& ds, const Split& split) {
  Labels out(ds.labels.size(), std::nullopt);
  for (Index j : split.labeled) out[static_cast<std::size_t>(j)] = ds.labels[static_cast<std::size_t>(j)];
  return out;
}

Dataset synthetic_blobs(Index classes, Index per_class, Index dim, double spread,
                        std::uint64_t seed) {
  if (classes < 2) throw Error(ErrorKind::invalid_config, "blobs need at least 2 classes");
  if (dim < classes) throw Error(ErrorKind::invalid_config, "blobs need dim >= classes");
  if (per_class < 1 || spread < 0.0) {
    throw Error(ErrorKind::invalid_config, "blobs need per_class >= 1 and spread >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.features.resize(dim, classes * per_class);
  ds.labels.reserve(static_cast<std::size_t>(classes * per_class));
  Index col = 0;
  for (Index cls = 0; cls < classes; ++cls) {
    for (Index p = 0; p < per_class; ++p, ++col) {
      for (Index r = 0; r < dim; ++r) {
        const double mean = r == cls ? 1.0 : 0.0;
        ds.features(r, col) = mean + spread * normal(rng);
      }
      ds.labels.emplace_back(cls);
    }
  }
  ds.class_count = classes;
  return ds;
}

Dataset synthetic_circles(Index per_class, double noise, std::uint64_t seed) {
  if (per_class < 10) throw Error(ErrorKind::invalid_config, "circles need per_class >= 10");
  if (noise < 0.0) throw Error(ErrorKind::invalid_config, "noise must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.features.resize(2, 2 * per_class);
  Index col = 0;
  for (Index cls = 0; cls < 2; ++cls) {
    const double radius = cls == 0 ? 1.0 : 2.0;
    for (Index p = 0; p < per_class; ++p, ++col) {
      const double t = angle(rng);
      const double nx = normal(rng);
      const double ny = normal(rng);
      ds.features(0, col) = radius * std::cos(t) + noise * nx;
      ds.features(1, col) = radius * std::sin(t) + noise * ny;
      ds.labels.emplace_back(cls);
    }
  }
  ds.class_count = 2;
  return ds;
}

Matrix normalize_columns(const Matrix& features) {
  Matrix out = features;
  for (Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (!(norm > 0.0)) {
      throw Error(ErrorKind::normalization,
                  "column " + std::to_string(j) + " has zero norm and cannot be normalized");
    }
    out.col(j) /= norm;
  }
  return out;
}

}  // namespace ssrgr::data
