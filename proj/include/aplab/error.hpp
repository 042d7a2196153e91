#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aplab {

enum class ErrorCode {
  invalid_argument,
  unreachable_tolerance,
  tag_mismatch,
  dimension_mismatch,
  empty_word,
  not_power_bounded,
  decomposition_failure,
  peripheral_spectrum,
  not_contraction,
  unsupported_symbol,
  invalid_family,
  parse_error,
  io_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::unreachable_tolerance: return "unreachable-tolerance";
    case ErrorCode::tag_mismatch: return "tag-mismatch";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::empty_word: return "empty-word";
    case ErrorCode::not_power_bounded: return "not-power-bounded";
    case ErrorCode::decomposition_failure: return "decomposition-failure";
    case ErrorCode::peripheral_spectrum: return "peripheral-spectrum";
    case ErrorCode::not_contraction: return "not-contraction";
    case ErrorCode::unsupported_symbol: return "unsupported-symbol";
    case ErrorCode::invalid_family: return "invalid-family";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aplab
