#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "sleepwake/distribution.hpp"
#include "sleepwake/error.hpp"

namespace sleepwake {

/// One Poisson data source: sampling rate and service-time distribution.
struct SourceSpec {
  double rate = 1.0;
  Distribution service = Distribution::exponential(1.0);
};

/// Hysteresis time: after a class-i service, idle for D_i, then sleep if nobody arrived.
struct HysteresisIdling {
  std::vector<Distribution> hysteresis;
};

/// Bernoulli sleep: after a class-i service, sleep with probability theta_i.
struct BernoulliIdling {
  std::vector<double> theta;
};

/// Conditional sleep: sleep iff the realized service time is below B_i ~ Exp(b_i).
/// b = 0 always sleeps, b = +inf never sleeps.
struct ConditionalIdling {
  std::vector<double> b;
};

using IdlingScheme = std::variant<HysteresisIdling, BernoulliIdling, ConditionalIdling>;

/// Wake at the N-th arrival since falling asleep.
struct NPolicy {
  long n = 1;
};

/// Sleep exactly one period W, then set up.
struct SingleSleep {
  Distribution w;
};

/// Sleep W-length periods until the buffer is nonempty at a wake check.
struct MultipleSleep {
  Distribution w;
};

using WakeupScheme = std::variant<NPolicy, SingleSleep, MultipleSleep>;

enum class IdlingKind { ht, bs, cs };
enum class WakeupKind { n_policy, single_sleep, multiple_sleep };

inline IdlingKind kind_of(const IdlingScheme& s) { return static_cast<IdlingKind>(s.index()); }
inline WakeupKind kind_of(const WakeupScheme& s) { return static_cast<WakeupKind>(s.index()); }

inline std::string to_string(IdlingKind k) {
  switch (k) {
    case IdlingKind::ht: return "ht";
    case IdlingKind::bs: return "bs";
    case IdlingKind::cs: return "cs";
  }
  return "?";
}

inline std::string to_string(WakeupKind k) {
  switch (k) {
    case WakeupKind::n_policy: return "n-policy";
    case WakeupKind::single_sleep: return "single-sleep";
    case WakeupKind::multiple_sleep: return "multiple-sleep";
  }
  return "?";
}

/// Power draw per server state. `detect` is the energy charged per wake check
/// under multiple-sleep and is ignored by the other wakeup schemes.
struct PowerProfile {
  double busy = 0.0;
  double idle = 0.0;
  double sleep = 0.0;
  double setup = 0.0;
  double detect = 0.0;

  /// Ordering assumptions that make sleeping worthwhile. Violations are
  /// reported, not rejected, so sweeps may cross them.
  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (!(sleep < std::min({busy, idle, setup})))
      out.emplace_back("sleep power is not below min(busy, idle, setup)");
    if (!(idle <= busy)) out.emplace_back("idle power exceeds busy power");
    return out;
  }

  void validate() const {
    for (double p : {busy, idle, sleep, setup, detect})
      if (!(p >= 0.0) || !std::isfinite(p)) fail(ErrorKind::config, "power values must be finite and >= 0");
  }
};

struct SystemConfig {
  std::vector<SourceSpec> sources;
  IdlingScheme idling = BernoulliIdling{};
  WakeupScheme wakeup = NPolicy{1};
  Distribution setup = Distribution::zero();
  PowerProfile power;

  std::size_t size() const noexcept { return sources.size(); }

  double total_rate() const noexcept {
    double sum = 0.0;
    for (const auto& s : sources) sum += s.rate;
    return sum;
  }

  /// Throws Error(config) on invalid input; Error(degenerate_wakeup) when a
  /// multiple-sleep vacation can never observe an arrival.
  void validate() const {
    if (sources.empty()) fail(ErrorKind::config, "at least one source is required");
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const double r = sources[i].rate;
      if (!(r > 0.0) || !std::isfinite(r))
        fail(ErrorKind::config, "sources[" + std::to_string(i) + "].rate must be finite and > 0");
      if (!std::isfinite(sources[i].service.mean()))
        fail(ErrorKind::config, "sources[" + std::to_string(i) + "].service must have a finite mean");
    }
    const std::size_t k = sources.size();
    std::visit(
        [k](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, HysteresisIdling>) {
            if (s.hysteresis.size() != k) fail(ErrorKind::config, "idling.hysteresis length must equal the number of sources");
          } else if constexpr (std::is_same_v<T, BernoulliIdling>) {
            if (s.theta.size() != k) fail(ErrorKind::config, "idling.theta length must equal the number of sources");
            for (double t : s.theta)
              if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::config, "idling.theta values must lie in [0, 1]");
          } else {
            if (s.b.size() != k) fail(ErrorKind::config, "idling.b length must equal the number of sources");
            for (double b : s.b)
              if (!(b >= 0.0)) fail(ErrorKind::config, "idling.b values must be >= 0");
          }
        },
        idling);
    if (!std::isfinite(setup.mean())) fail(ErrorKind::config, "setup must have a finite mean");
    const double lambda = total_rate();
    std::visit(
        [lambda](const auto& w) {
          using T = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<T, NPolicy>) {
            if (w.n < 1) fail(ErrorKind::config, "wakeup.n must be >= 1");
          } else {
            if (!std::isfinite(w.w.mean())) fail(ErrorKind::config, "wakeup.w must have a finite mean");
            if constexpr (std::is_same_v<T, MultipleSleep>) {
              if (!(w.w.lst(lambda) < 1.0))
                fail(ErrorKind::degenerate_wakeup, "multiple-sleep vacation W has no mass away from zero");
            }
          }
        },
        wakeup);
    power.validate();
  }

  std::vector<std::string> warnings() const { return power.warnings(); }
};

enum class Method { analytic, simulated };

inline std::string to_string(Method m) { return m == Method::analytic ? "analytic" : "simulated"; }

/// Per-source freshness, sleep probability and system energy rate.
/// For simulated reports the *_ci fields hold 95% half-widths and the *_se
/// fields the batch-means standard errors; both are empty for analytic reports.
struct MetricsReport {
  Method method = Method::analytic;
  std::vector<double> aoi;
  std::vector<double> paoi;
  std::vector<double> theta;
  double energy_rate = 0.0;

  std::vector<double> aoi_ci, paoi_ci, theta_ci;
  double energy_ci = 0.0;
  std::vector<double> aoi_se, paoi_se, theta_se;
  double energy_se = 0.0;
};

}  // namespace sleepwake
