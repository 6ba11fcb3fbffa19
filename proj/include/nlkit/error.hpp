#pragma once

#include <stdexcept>
#include <string>

namespace nlkit {

enum class ErrorKind {
  InvalidArgument,
  OutOfRange,
  NonFinite,
  Singular,
  RankDeficient,
  NotPositiveDefinite,
  Breakdown,
  ZeroPivot,
  DecompressionConflict,
  IncompatibleSpec,
  InvalidBracket,
  NotDifferentiable,
  Timeout,
  Io,
};

constexpr const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::Breakdown: return "Breakdown";
    case ErrorKind::ZeroPivot: return "ZeroPivot";
    case ErrorKind::DecompressionConflict: return "DecompressionConflict";
    case ErrorKind::IncompatibleSpec: return "IncompatibleSpec";
    case ErrorKind::InvalidBracket: return "InvalidBracket";
    case ErrorKind::NotDifferentiable: return "NotDifferentiable";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers can map it
/// onto a return code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  [[nodiscard]] bool is_linear_solve_failure() const noexcept {
    return kind_ == ErrorKind::Singular || kind_ == ErrorKind::RankDeficient ||
           kind_ == ErrorKind::NotPositiveDefinite || kind_ == ErrorKind::Breakdown ||
           kind_ == ErrorKind::ZeroPivot;
  }

 private:
  ErrorKind kind_;
};

}  // namespace nlkit
