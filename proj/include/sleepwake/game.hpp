#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sleepwake/analytic.hpp"
#include "sleepwake/distribution.hpp"
#include "sleepwake/error.hpp"
#include "sleepwake/model.hpp"
#include "sleepwake/parallel.hpp"

namespace sleepwake {

/// Sampling cost a * lambda^p. Reported only; it does not move the equilibrium.
struct SamplingCost {
  double a = 0.0;
  double p = 1.0;

  double operator()(double lambda) const { return a * std::pow(lambda, p); }
};

struct GameSpec {
  std::vector<Distribution> services;
  Distribution setup = Distribution::zero();
  std::vector<double> tau;
  double lambda_max = 1.0;
  PowerProfile power;
  std::vector<SamplingCost> costs;  // empty means zero cost for every source
  std::vector<double> theta;        // empty means all ones

  std::size_t size() const { return services.size(); }

  void validate() const {
    if (services.empty()) fail(ErrorKind::config, "game needs at least one source");
    if (tau.size() != services.size()) fail(ErrorKind::config, "tau length must equal the number of sources");
    if (!costs.empty() && costs.size() != services.size())
      fail(ErrorKind::config, "costs length must equal the number of sources");
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) fail(ErrorKind::config, "lambda_max must be positive");
    for (double t : theta)
      if (t != 1.0)
        fail(ErrorKind::config,
             "only theta = (1,...,1) is supported; other sleep probabilities are outside the analysed regime");
    if (!theta.empty() && theta.size() != services.size())
      fail(ErrorKind::config, "theta length must equal the number of sources");
    for (std::size_t i = 0; i < services.size(); ++i) {
      if (!(tau[i] > services[i].mean()))
        fail(ErrorKind::config, "tau[" + std::to_string(i) + "] must exceed the mean service time");
    }
    for (const auto& c : costs)
      if (!(c.a >= 0.0) || !(c.p >= 1.0)) fail(ErrorKind::config, "sampling cost needs a >= 0 and p >= 1");
    power.validate();
  }

  /// System at the given rates with theta = 1 and an N-policy wakeup.
  SystemConfig system(const std::vector<double>& rates, long n) const {
    SystemConfig cfg;
    for (std::size_t i = 0; i < size(); ++i) cfg.sources.push_back({rates[i], services[i]});
    cfg.idling = BernoulliIdling{std::vector<double>(size(), 1.0)};
    cfg.wakeup = NPolicy{n};
    cfg.setup = setup;
    cfg.power = power;
    return cfg;
  }
};

struct Equilibrium {
  long n = 0;
  std::vector<double> rates;
  std::vector<double> residuals;  // g_i at the solution
  std::vector<double> costs;
  double energy = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;  // max rate <= lambda_max
  bool solved = false;    // false when no root exists in (0, k * lambda_max]
};

namespace detail {

// For a trial total T the stage-II system is diagonal plus rank one:
// lambda_i a_i = N + sum_l kappa_l lambda_l with a_i = tau_i - E[H_i] - c(T).
struct RankOneSolve {
  bool valid = false;
  std::vector<double> rates;
  double total = 0.0;
};

inline double setup_wait(const Distribution& u, double t) { return (1.0 - u.lst(t)) / t; }

inline RankOneSolve rank_one_solve(const GameSpec& spec, long n, double t) {
  const std::size_t k = spec.size();
  const double c = setup_wait(spec.setup, t);
  const double eu = spec.setup.mean();
  std::vector<double> a(k);
  double r = 0.0, inv = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    a[i] = spec.tau[i] - spec.services[i].mean() - c;
    if (!(a[i] > 0.0)) return {};
    r += (spec.services[i].mean() + eu) / a[i];
    inv += 1.0 / a[i];
  }
  if (!(r < 1.0)) return {};
  RankOneSolve out;
  out.valid = true;
  out.rates.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.rates[i] = n / ((1.0 - r) * a[i]);
  out.total = n * inv / (1.0 - r);
  return out;
}

inline std::vector<double> stage2_residuals(const GameSpec& spec, long n, const std::vector<double>& rates) {
  double total = 0.0, shared = 0.0;
  for (std::size_t l = 0; l < rates.size(); ++l) {
    total += rates[l];
    shared += rates[l] * (spec.services[l].mean() + spec.setup.mean());
  }
  const double c = setup_wait(spec.setup, total);
  std::vector<double> g(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i)
    g[i] = c * rates[i] + rates[i] * (spec.services[i].mean() - spec.tau[i]) + shared + n;
  return g;
}

}  // namespace detail

/// Stage-II equilibrium for theta = 1 by bisection on the total rate.
/// `bracket` seeds the search; it is widened to (0, k * lambda_max] when it
/// does not straddle the root.
inline Equilibrium stage2_equilibrium(const GameSpec& spec, long n,
                                      std::optional<std::pair<double, double>> bracket = std::nullopt) {
  spec.validate();
  if (n < 1) fail(ErrorKind::config, "N must be >= 1");
  const double upper = static_cast<double>(spec.size()) * spec.lambda_max;

  // f(T) = F(T) - T is decreasing; invalid T lies below the root.
  auto positive = [&](double t) {
    const auto s = detail::rank_one_solve(spec, n, t);
    return !s.valid || s.total > t;
  };
  double lo = 0.0, hi = upper;
  if (bracket) {
    lo = std::clamp(bracket->first, 0.0, upper);
    hi = std::clamp(bracket->second, lo, upper);
    if (lo > 0.0 && !positive(lo)) lo = 0.0;
    if (hi <= lo || positive(hi)) hi = upper;
  }
  if (positive(upper))
    fail(ErrorKind::no_equilibrium, "no stage-II root with total rate in (0, " + std::to_string(upper) + "]");

  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (positive(mid) ? lo : hi) = mid;
  }
  // hi is the smallest representable point on the nonpositive side.
  auto sol = detail::rank_one_solve(spec, n, hi);
  if (!sol.valid) fail(ErrorKind::no_equilibrium, "stage-II bisection ended at an invalid point");
  // one fixed-point step lands on the root to rounding error
  const auto refined = detail::rank_one_solve(spec, n, sol.total);
  if (refined.valid) sol = refined;
  for (double r : sol.rates)
    if (!(r > 0.0)) fail(ErrorKind::infeasible_parameters, "stage-II solution has a nonpositive rate");

  Equilibrium eq;
  eq.n = n;
  eq.rates = sol.rates;
  eq.residuals = detail::stage2_residuals(spec, n, eq.rates);
  for (std::size_t i = 0; i < spec.size(); ++i)
    eq.costs.push_back(spec.costs.empty() ? 0.0 : spec.costs[i](eq.rates[i]));
  eq.solved = true;
  eq.feasible = *std::max_element(eq.rates.begin(), eq.rates.end()) <= spec.lambda_max;
  eq.energy = energy_rate(spec.system(eq.rates, n));
  return eq;
}

/// floor(lambda_max [min_i(tau_i - E[H_i]) - E[H_j] - E[U]]) with j the argmin, at least 1.
inline long n_max(const GameSpec& spec) {
  spec.validate();
  std::size_t j = 0;
  for (std::size_t i = 1; i < spec.size(); ++i)
    if (spec.tau[i] - spec.services[i].mean() < spec.tau[j] - spec.services[j].mean()) j = i;
  const double slack = spec.tau[j] - spec.services[j].mean();
  const double value = spec.lambda_max * (slack - spec.services[j].mean() - spec.setup.mean());
  if (!(value > 0.0)) fail(ErrorKind::no_feasible_n, "N_max expression is not positive");
  return std::max(1L, static_cast<long>(std::floor(value)));
}

struct GameResult {
  long n = 0;
  std::vector<double> rates;
  double energy = 0.0;
  std::vector<Equilibrium> table;  // one row per N = 1..n_max
};

/// Stage I: enumerates N = 1..n_max and keeps the lowest-energy feasible equilibrium.
inline GameResult algorithm1(const GameSpec& spec, int jobs = 1) {
  const long top = n_max(spec);
  GameResult res;
  res.table = parallel_map(static_cast<std::size_t>(top), jobs, [&spec](std::size_t j) {
    const long n = static_cast<long>(j) + 1;
    try {
      return stage2_equilibrium(spec, n);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::no_equilibrium) throw;
      Equilibrium eq;
      eq.n = n;
      return eq;
    }
  });
  const Equilibrium* best = nullptr;
  for (const auto& eq : res.table)
    if (eq.feasible && (!best || eq.energy < best->energy)) best = &eq;
  if (!best) fail(ErrorKind::no_feasible_n, "every N up to N_max violates lambda_max");
  res.n = best->n;
  res.rates = best->rates;
  res.energy = best->energy;
  return res;
}

}  // namespace sleepwake
