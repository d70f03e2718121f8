#include "model_file.hpp"

#include <ssrgr/error.hpp>

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ssrgr::cli {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'S', 'R', 'G', 'R', 'M', 'D', 'L'};
constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 31;

template <typename T>
T little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
  }
  return value;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    value = little_endian(value);
    append(&value, sizeof(T));
  }

  void put_matrix(const Matrix& m) {
    put(static_cast<std::uint64_t>(m.rows()));
    put(static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) put(m(i, j));
    }
  }

  void put_string(const std::string& s) {
    put(static_cast<std::uint64_t>(s.size()));
    append(s.data(), s.size());
  }

  void append(const void* data, std::size_t size) {
    const auto* p = static_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }

  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    T value;
    take(&value, sizeof(T), what);
    return little_endian(value);
  }

  Matrix get_matrix(const char* what) {
    const auto rows = get<std::uint64_t>(what);
    const auto cols = get<std::uint64_t>(what);
    if (rows > kMaxEntries || cols > kMaxEntries || rows * cols > remaining() / 8) {
      throw Error(ErrorKind::parse, std::string("model file: implausible shape for ") + what);
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>(what);
    }
    return m;
  }

  std::string get_string(const char* what) {
    const auto size = get<std::uint64_t>(what);
    if (size > remaining()) throw Error(ErrorKind::parse, std::string("model file: truncated ") + what);
    std::string s(bytes_.substr(pos_, size));
    pos_ += size;
    return s;
  }

  void take(void* out, std::size_t size, const char* what) {
    if (size > remaining()) {
      throw Error(ErrorKind::parse, std::string("model file: truncated while reading ") + what);
    }
    std::memcpy(out, bytes_.data() + pos_, size);
    pos_ += size;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(const char* data, std::size_t size) {
  boost::crc_32_type crc;
  crc.process_bytes(data, size);
  return crc.checksum();
}

Matrix labels_row(const Labels& labels) {
  Matrix row(1, static_cast<Index>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    row(0, static_cast<Index>(j)) = labels[j] ? static_cast<double>(*labels[j] + 1) : 0.0;
  }
  return row;
}

Labels labels_from_row(const Matrix& row) {
  Labels labels(static_cast<std::size_t>(row.cols()));
  for (Index j = 0; j < row.cols(); ++j) {
    const double v = row(0, j);
    if (v < 0.0 || v != std::floor(v)) throw Error(ErrorKind::parse, "model file: bad label entry");
    if (v > 0.0) labels[static_cast<std::size_t>(j)] = static_cast<Index>(v) - 1;
  }
  return labels;
}

void expect_shape(const Matrix& m, Index rows, Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorKind::parse, std::string("model file: ") + what + " is " +
                                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                      ", expected " + std::to_string(rows) + "x" +
                                      std::to_string(cols));
  }
}

std::filesystem::path temporary_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

}  // namespace

void write_model(const StoredModel& model, std::ostream& out) {
  const bool kern = model.mode() == Mode::kernel;
  const Matrix& atoms = kern ? model.kernel.coeffs : model.linear.dictionary;
  const Matrix& codes = kern ? model.kernel.codes : model.linear.codes;
  const Matrix& classifier = kern ? model.kernel.classifier : model.linear.classifier;

  Writer w;
  w.append(kMagic.data(), kMagic.size());
  w.put(kModelVersion);
  w.put(static_cast<std::uint32_t>(kern ? 1 : 0));
  w.put(static_cast<std::uint32_t>(model.resolved.kind));
  w.put(model.resolved.sigma);
  w.put(static_cast<std::uint64_t>(model.train_features.rows()));
  w.put(static_cast<std::uint64_t>(model.train_features.cols()));
  w.put(static_cast<std::uint64_t>(codes.rows()));
  w.put(static_cast<std::uint64_t>(model.class_count));
  w.put_matrix(model.train_features);
  w.put_matrix(labels_row(model.train_labels));
  w.put_matrix(atoms);
  w.put_matrix(codes);
  w.put_matrix(classifier);
  w.put_matrix(model.label_scores());
  if (kern) w.put_matrix(model.kernel.gram.values());
  w.put_string(echo_config_text(model.config, false));
  const std::uint32_t crc = crc32(w.bytes().data(), w.bytes().size());
  w.put(crc);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error(ErrorKind::io, "failed to write model");
}

StoredModel read_model(std::istream& in) {
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < kMagic.size() + 4) throw Error(ErrorKind::parse, "model file is truncated");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::parse, "not a model file (bad magic)");
  }
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  stored_crc = little_endian(stored_crc);
  if (crc32(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw Error(ErrorKind::parse, "model file checksum mismatch (file is corrupted)");
  }

  const std::string body = bytes.substr(0, bytes.size() - 4);
  Reader r(body);
  std::array<char, 8> magic;
  r.take(magic.data(), magic.size(), "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kModelVersion) {
    throw Error(ErrorKind::parse, "unsupported model version " + std::to_string(version));
  }
  const auto mode = r.get<std::uint32_t>("mode");
  const auto kind = r.get<std::uint32_t>("kernel kind");
  if (mode > 1 || kind > 2) throw Error(ErrorKind::parse, "model file: bad mode or kernel kind");

  StoredModel m;
  m.resolved.kind = static_cast<kernel::KernelKind>(kind);
  m.resolved.sigma = r.get<double>("sigma");
  const auto d = static_cast<Index>(r.get<std::uint64_t>("dimensions"));
  const auto n = static_cast<Index>(r.get<std::uint64_t>("dimensions"));
  const auto k = static_cast<Index>(r.get<std::uint64_t>("dimensions"));
  m.class_count = static_cast<Index>(r.get<std::uint64_t>("dimensions"));

  m.train_features = r.get_matrix("training features");
  expect_shape(m.train_features, d, n, "training features");
  const Matrix labels = r.get_matrix("training labels");
  expect_shape(labels, 1, n, "training labels");
  m.train_labels = labels_from_row(labels);
  Matrix atoms = r.get_matrix("atoms");
  Matrix codes = r.get_matrix("codes");
  Matrix classifier = r.get_matrix("classifier");
  Matrix scores = r.get_matrix("label scores");
  expect_shape(atoms, mode == 1 ? n : d, k, "atoms");
  expect_shape(codes, k, n, "codes");
  expect_shape(classifier, m.class_count, k, "classifier");
  expect_shape(scores, m.class_count, n, "label scores");

  if (mode == 1) {
    Matrix gram = r.get_matrix("gram");
    expect_shape(gram, n, n, "gram");
    m.kernel = {std::move(atoms), std::move(codes), std::move(classifier), std::move(scores),
                kernel::KernelGram::trusted(std::move(gram))};
  } else {
    m.linear = {std::move(atoms), std::move(codes), std::move(classifier), std::move(scores)};
  }

  std::istringstream echo(r.get_string("config echo"));
  if (r.remaining() != 0) throw Error(ErrorKind::parse, "model file: trailing bytes");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(echo, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::parse, std::string("model file: config echo: ") + e.what());
  }
  m.config = parse_config(tree);
  if ((m.config.mode == Mode::kernel) != (mode == 1)) {
    throw Error(ErrorKind::parse, "model file: mode disagrees with config echo");
  }
  return m;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = temporary_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot move " + tmp.string() + " to " + path.string());
  }
}

void save_model(const StoredModel& model, const std::filesystem::path& path) {
  std::ostringstream out;
  write_model(model, out);
  write_file_atomic(path, out.str());
}

StoredModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open model " + path.string());
  try {
    return read_model(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace ssrgr::cli
