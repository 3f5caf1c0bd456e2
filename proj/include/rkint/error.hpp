#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rkint {

enum class Errc {
  asymmetric,
  not_psd,
  solve_failed,
  inconclusive,
  not_in_rkhs,
  not_in_rc,
  horizon_exceeded,
  monotonicity_violation,
  missing_decomposition,
  structural_fail,
  negative_wealth,
  no_deflator,
  incomplete,
  lp_fail,
  not_supermartingale,
  invalid_argument,
  config_invalid,
  io_error,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::asymmetric: return "ASYMMETRIC";
    case Errc::not_psd: return "NOT_PSD";
    case Errc::solve_failed: return "SOLVE_FAILED";
    case Errc::inconclusive: return "INCONCLUSIVE";
    case Errc::not_in_rkhs: return "NOT_IN_RKHS";
    case Errc::not_in_rc: return "NOT_IN_RC";
    case Errc::horizon_exceeded: return "HORIZON_EXCEEDED";
    case Errc::monotonicity_violation: return "MONOTONICITY_VIOLATION";
    case Errc::missing_decomposition: return "MISSING_DECOMPOSITION";
    case Errc::structural_fail: return "STRUCTURAL_FAIL";
    case Errc::negative_wealth: return "NEGATIVE_WEALTH";
    case Errc::no_deflator: return "NO_DEFLATOR";
    case Errc::incomplete: return "INCOMPLETE";
    case Errc::lp_fail: return "LP_FAIL";
    case Errc::not_supermartingale: return "NOT_SUPERMARTINGALE";
    case Errc::invalid_argument: return "INVALID_ARGUMENT";
    case Errc::config_invalid: return "CONFIG_INVALID";
    case Errc::io_error: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Exception carrying one of the library error codes. The message is
/// prefixed with the code name so it reads well when surfaced by the CLI.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rkint
