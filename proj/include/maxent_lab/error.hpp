#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maxent_lab {

enum class ErrorCode {
  invalid_input,
  empty_space,
  all_zero_weights,
  degenerate_coordinate,
  target_outside_hull,
  boundary_target,
  singular_covariance,
  no_convergence,
  lattice_blowup,
  enumeration_infeasible,
  infeasible_size,
  no_feasible_sizes,
  config,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid input";
    case ErrorCode::empty_space: return "empty outcome list";
    case ErrorCode::all_zero_weights: return "all weights zero";
    case ErrorCode::degenerate_coordinate: return "degenerate constraint coordinate";
    case ErrorCode::target_outside_hull: return "target outside convex hull";
    case ErrorCode::boundary_target: return "boundary target";
    case ErrorCode::singular_covariance: return "singular covariance";
    case ErrorCode::no_convergence: return "no convergence";
    case ErrorCode::lattice_blowup: return "lattice blow-up";
    case ErrorCode::enumeration_infeasible: return "enumeration infeasible";
    case ErrorCode::infeasible_size: return "infeasible sample size";
    case ErrorCode::no_feasible_sizes: return "no feasible sizes";
    case ErrorCode::config: return "config error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Resource guards (table size, enumeration caps) as opposed to bad input.
  bool is_guard() const noexcept {
    return code_ == ErrorCode::lattice_blowup || code_ == ErrorCode::enumeration_infeasible;
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace maxent_lab
