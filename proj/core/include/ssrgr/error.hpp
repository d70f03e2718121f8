#pragma once

#include <stdexcept>
#include <string>

namespace ssrgr {

enum class ErrorKind {
  invalid_config,
  invalid_labels,
  invalid_split,
  degenerate_graph,
  numeric_input,
  invalid_kernel,
  indefinite_laplacian,
  normalization,
  dimension_mismatch,
  parse,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ssrgr
