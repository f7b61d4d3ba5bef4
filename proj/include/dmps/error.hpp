#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmps {

enum class ErrorKind {
  invalid_range,
  dimension_mismatch,
  non_finite,
  index_out_of_range,
  duplicate_index,
  divisibility,
  channel_count,
  kernel_normalization,
  kernel_length,
  not_row_orthogonal,
  solver_failure,
  unsupported_prior,
  dimension_too_large,
  empty_set,
  malformed_header,
  truncated_payload,
  unsupported_maxval,
  bad_magic,
  non_finite_value,
  size_mismatch,
  width_mismatch,
  config_parse,
  file_not_found,
  io_failure,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_range: return "invalid-range";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::non_finite: return "non-finite-state";
    case ErrorKind::index_out_of_range: return "index-out-of-range";
    case ErrorKind::duplicate_index: return "duplicate-index";
    case ErrorKind::divisibility: return "divisibility";
    case ErrorKind::channel_count: return "channel-count";
    case ErrorKind::kernel_normalization: return "kernel-normalization";
    case ErrorKind::kernel_length: return "kernel-length";
    case ErrorKind::not_row_orthogonal: return "not-row-orthogonal";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::unsupported_prior: return "unsupported-prior";
    case ErrorKind::dimension_too_large: return "dimension-too-large";
    case ErrorKind::empty_set: return "empty-set";
    case ErrorKind::malformed_header: return "malformed-header";
    case ErrorKind::truncated_payload: return "truncated-payload";
    case ErrorKind::unsupported_maxval: return "unsupported-maxval";
    case ErrorKind::bad_magic: return "bad-magic";
    case ErrorKind::non_finite_value: return "non-finite-value";
    case ErrorKind::size_mismatch: return "size-mismatch";
    case ErrorKind::width_mismatch: return "width-mismatch";
    case ErrorKind::config_parse: return "config-parse";
    case ErrorKind::file_not_found: return "file-not-found";
    case ErrorKind::io_failure: return "io-failure";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` discriminates the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace dmps
