#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sleepwake {

enum class ErrorKind {
  domain,                 // argument outside the mathematical domain
  unsupported_order,      // LST derivative or moment order above the supported maximum
  division_by_zero,       // e.g. cv of a zero-mean distribution
  config,                 // malformed or invalid configuration
  degenerate_wakeup,      // multiple-sleep with a vacation that never ends
  instability,            // LCFS load >= 1
  insufficient_horizon,   // simulation horizon ends before warmup completes
  infeasible,             // optimization problem without a feasible point
  no_equilibrium,         // stage-II scalar equation has no root in range
  infeasible_parameters,  // stage-II solution with a nonpositive rate
  no_feasible_n,          // no admissible sleep length for the game
  undefined_shape,        // AoI shape requested with theta = 0
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::unsupported_order: return "unsupported-order";
    case ErrorKind::division_by_zero: return "division-by-zero";
    case ErrorKind::config: return "config";
    case ErrorKind::degenerate_wakeup: return "degenerate-wakeup";
    case ErrorKind::instability: return "instability";
    case ErrorKind::insufficient_horizon: return "insufficient-horizon";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::no_equilibrium: return "no-equilibrium";
    case ErrorKind::infeasible_parameters: return "infeasible-parameters";
    case ErrorKind::no_feasible_n: return "no-feasible-n";
    case ErrorKind::undefined_shape: return "undefined-shape";
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

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace sleepwake
