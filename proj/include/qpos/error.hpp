#pragma once

#include <stdexcept>
#include <string>

namespace qpos {

enum class Errc {
  invalid_argument,
  geometry_mismatch,
  non_finite,
  mean_not_zero,
  not_positive_definite,
  q_out_of_range,
  not_q_positive,
  non_constant_metric,
  unsupported_dimension,
  invariant_violation,
  parse_error,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::geometry_mismatch: return "GeometryMismatch";
    case Errc::non_finite: return "NonFiniteValue";
    case Errc::mean_not_zero: return "MeanNotZero";
    case Errc::not_positive_definite: return "NotPositiveDefinite";
    case Errc::q_out_of_range: return "QOutOfRange";
    case Errc::not_q_positive: return "NotQPositive";
    case Errc::non_constant_metric: return "NonConstantMetric";
    case Errc::unsupported_dimension: return "UnsupportedDimension";
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qpos
