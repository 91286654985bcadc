#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sleepwake/distribution.hpp"
#include "sleepwake/error.hpp"
#include "sleepwake/jet.hpp"
#include "sleepwake/model.hpp"

namespace sleepwake {

/// First two moments of a nonnegative random variable.
struct Moments {
  double m1 = 0.0;
  double m2 = 0.0;
};

namespace detail {

inline void check_index(const SystemConfig& cfg, std::size_t i) {
  if (i >= cfg.size()) fail(ErrorKind::config, "source index " + std::to_string(i) + " out of range");
}

// lambda / (lambda + s) with its derivatives in s.
inline Jet arrival_jet(double lambda, double s) {
  const double x = lambda + s;
  return {lambda / x, -lambda / (x * x), 2.0 * lambda / (x * x * x)};
}

inline Jet shifted(const Distribution& d, double s, double shift) {
  return d.lst_jet(s + shift);
}

// Transform of the span from "server falls asleep" to "next service starts".
inline Jet sleep_segment_jet(const SystemConfig& cfg, double s) {
  const double lambda = cfg.total_rate();
  const Jet u = cfg.setup.lst_jet(s);
  switch (kind_of(cfg.wakeup)) {
    case WakeupKind::n_policy: {
      const long n = std::get<NPolicy>(cfg.wakeup).n;
      return pow(arrival_jet(lambda, s), n) * u;
    }
    case WakeupKind::single_sleep: {
      const Distribution& w = std::get<SingleSleep>(cfg.wakeup).w;
      const Jet tail = (1.0 - arrival_jet(lambda, s)) * shifted(w, s, lambda) * shifted(cfg.setup, s, lambda);
      return w.lst_jet(s) * u - tail;
    }
    case WakeupKind::multiple_sleep: {
      const Distribution& w = std::get<MultipleSleep>(cfg.wakeup).w;
      const Jet wl = shifted(w, s, lambda);
      if (!(wl.v < 1.0)) fail(ErrorKind::degenerate_wakeup, "multiple-sleep vacation W has no mass away from zero");
      return (w.lst_jet(s) - wl) / (1.0 - wl) * u;
    }
  }
  return Jet::constant(1.0);
}

// Expected length and energy of the sleep segment (sleep, setup and, for
// single-sleep, the idle tail when nobody arrived).
struct SleepSegment {
  double length = 0.0;
  double energy = 0.0;
};

inline SleepSegment sleep_segment(const SystemConfig& cfg) {
  const double lambda = cfg.total_rate();
  const double eu = cfg.setup.mean();
  const PowerProfile& p = cfg.power;
  switch (kind_of(cfg.wakeup)) {
    case WakeupKind::n_policy: {
      const double n = static_cast<double>(std::get<NPolicy>(cfg.wakeup).n);
      return {n / lambda + eu, n / lambda * p.sleep + eu * p.setup};
    }
    case WakeupKind::single_sleep: {
      const Distribution& w = std::get<SingleSleep>(cfg.wakeup).w;
      const double ew = w.mean();
      const double z = w.lst(lambda) * cfg.setup.lst(lambda);
      return {ew + eu + z / lambda, ew * p.sleep + eu * p.setup + z / lambda * p.idle};
    }
    case WakeupKind::multiple_sleep: {
      const Distribution& w = std::get<MultipleSleep>(cfg.wakeup).w;
      const double q = 1.0 - w.lst(lambda);
      if (!(q > 0.0)) fail(ErrorKind::degenerate_wakeup, "multiple-sleep vacation W has no mass away from zero");
      const double ew = w.mean();
      return {ew / q + eu, (ew * p.sleep + p.detect) / q + eu * p.setup};
    }
  }
  return {};
}

// Expected wait of a packet that is served right after a sleep segment.
inline double post_sleep_wait(const SystemConfig& cfg) {
  const double lambda = cfg.total_rate();
  const Distribution& u = cfg.setup;
  switch (kind_of(cfg.wakeup)) {
    case WakeupKind::n_policy:
      return (1.0 - u.lst(lambda)) / lambda;
    case WakeupKind::single_sleep: {
      const Distribution& w = std::get<SingleSleep>(cfg.wakeup).w;
      const double z = w.lst(lambda) * u.lst(lambda);
      return (1.0 - z) / lambda + w.lst_deriv(lambda, 1) * u.lst(lambda) + w.lst(lambda) * u.lst_deriv(lambda, 1);
    }
    case WakeupKind::multiple_sleep: {
      const Distribution& w = std::get<MultipleSleep>(cfg.wakeup).w;
      const double q = 1.0 - w.lst(lambda);
      if (!(q > 0.0)) fail(ErrorKind::degenerate_wakeup, "multiple-sleep vacation W has no mass away from zero");
      return 1.0 / lambda + u.lst(lambda) * w.lst_deriv(lambda, 1) / q;
    }
  }
  return 0.0;
}

inline double theta_unchecked(const SystemConfig& cfg, std::size_t i) {
  const double lambda = cfg.total_rate();
  switch (kind_of(cfg.idling)) {
    case IdlingKind::ht: return std::get<HysteresisIdling>(cfg.idling).hysteresis[i].lst(lambda);
    case IdlingKind::bs: return std::get<BernoulliIdling>(cfg.idling).theta[i];
    case IdlingKind::cs: return cfg.sources[i].service.lst(std::get<ConditionalIdling>(cfg.idling).b[i]);
  }
  return 0.0;
}

inline Jet cycle_jet_unchecked(const SystemConfig& cfg, std::size_t i, double s, const Jet& sleep) {
  const double lambda = cfg.total_rate();
  const Distribution& h = cfg.sources[i].service;
  const Jet e = arrival_jet(lambda, s);
  switch (kind_of(cfg.idling)) {
    case IdlingKind::ht: {
      const Jet d = shifted(std::get<HysteresisIdling>(cfg.idling).hysteresis[i], s, lambda);
      return h.lst_jet(s) * (e * (1.0 - d) + d * sleep);
    }
    case IdlingKind::bs: {
      const double th = std::get<BernoulliIdling>(cfg.idling).theta[i];
      return h.lst_jet(s) * (e * (1.0 - th) + th * sleep);
    }
    case IdlingKind::cs: {
      const double b = std::get<ConditionalIdling>(cfg.idling).b[i];
      const Jet hb = shifted(h, s, b);
      return (h.lst_jet(s) - hb) * e + hb * sleep;
    }
  }
  return Jet::constant(1.0);
}

}  // namespace detail

/// Probability that the server sleeps right after serving a class-i packet.
inline double sleep_probability(const SystemConfig& cfg, std::size_t i) {
  cfg.validate();
  detail::check_index(cfg, i);
  return detail::theta_unchecked(cfg, i);
}

inline std::vector<double> sleep_probabilities(const SystemConfig& cfg) {
  cfg.validate();
  std::vector<double> out(cfg.size());
  for (std::size_t i = 0; i < cfg.size(); ++i) out[i] = detail::theta_unchecked(cfg, i);
  return out;
}

/// Long-run energy per unit time, by renewal-reward over regenerative cycles.
inline double energy_rate(const SystemConfig& cfg) {
  cfg.validate();
  const double lambda = cfg.total_rate();
  const detail::SleepSegment seg = detail::sleep_segment(cfg);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t l = 0; l < cfg.size(); ++l) {
    const double p = cfg.sources[l].rate / lambda;
    const double th = detail::theta_unchecked(cfg, l);
    const double eh = cfg.sources[l].service.mean();
    num += p * (cfg.power.busy * eh + (1.0 - th) / lambda * cfg.power.idle + th * seg.energy);
    den += p * (eh + (1.0 - th) / lambda + th * seg.length);
  }
  return num / den;
}

/// E[G_i]: mean time an informative packet waits before its service starts.
inline double expected_wait(const SystemConfig& cfg, std::size_t i) {
  cfg.validate();
  detail::check_index(cfg, i);
  const double lambda = cfg.total_rate();
  double weight = 0.0;
  for (std::size_t l = 0; l < cfg.size(); ++l) weight += detail::theta_unchecked(cfg, l) * cfg.sources[l].rate / lambda;
  if (weight == 0.0) return 0.0;
  return weight * detail::post_sleep_wait(cfg);
}

/// Transform of the class-i regenerative cycle V_i with two derivatives at s.
inline Jet cycle_jet(const SystemConfig& cfg, std::size_t i, double s) {
  cfg.validate();
  detail::check_index(cfg, i);
  if (!(s >= 0.0)) fail(ErrorKind::domain, "LST argument must be >= 0");
  return detail::cycle_jet_unchecked(cfg, i, s, detail::sleep_segment_jet(cfg, s));
}

inline double cycle_lst(const SystemConfig& cfg, std::size_t i, double s) { return cycle_jet(cfg, i, s).v; }

/// (E[V_i], E[V_i^2]).
inline Moments cycle_moments(const SystemConfig& cfg, std::size_t i) {
  const Jet j = cycle_jet(cfg, i, 0.0);
  return {-j.d1, j.d2};
}

/// Moments of I_ii, the span between consecutive class-i service starts,
/// from exact derivatives of its transform at 0.
inline Moments inter_service_moments(const SystemConfig& cfg, std::size_t i) {
  cfg.validate();
  detail::check_index(cfg, i);
  const double lambda = cfg.total_rate();
  const Jet sleep = detail::sleep_segment_jet(cfg, 0.0);
  Jet others = Jet::constant(0.0);
  Jet own;
  for (std::size_t l = 0; l < cfg.size(); ++l) {
    const Jet v = detail::cycle_jet_unchecked(cfg, l, 0.0, sleep) * (cfg.sources[l].rate / lambda);
    if (l == i) own = v;
    else others = others + v;
  }
  const Jet inter = own / (1.0 - others);
  return {-inter.d1, inter.d2};
}

/// Single-source (I_11) moments from the explicit N-policy expressions.
/// Used for k = 1 and cross-checked against the transform route.
inline Moments single_source_inter_service_moments(const SystemConfig& cfg) {
  cfg.validate();
  if (cfg.size() != 1) fail(ErrorKind::config, "explicit single-source moments need exactly one source");
  if (kind_of(cfg.wakeup) != WakeupKind::n_policy)
    fail(ErrorKind::config, "explicit single-source moments are defined for the N-policy only");
  const double lam = cfg.sources[0].rate;
  const double n = static_cast<double>(std::get<NPolicy>(cfg.wakeup).n);
  const Distribution& h = cfg.sources[0].service;
  const double th = detail::theta_unchecked(cfg, 0);
  const double eh = h.mean();
  const double eh2 = h.moment(2);
  const double u1 = cfg.setup.lst_deriv(0.0, 1);
  const double eu = -u1;
  const double eu2 = cfg.setup.moment(2);
  const double m1 = eh + (1.0 - th) / lam + th * (n / lam + eu);
  const double common = 2.0 * (1.0 - th) / (lam * lam) + th * n * (n + 1.0) / (lam * lam) - 2.0 * th * n / lam * u1 + th * eu2;
  double m2 = 0.0;
  switch (kind_of(cfg.idling)) {
    case IdlingKind::ht: {
      const double d1 = std::get<HysteresisIdling>(cfg.idling).hysteresis[0].lst_deriv(lam, 1);
      m2 = common + 2.0 * d1 / lam - 2.0 * n * d1 / lam + 2.0 * d1 * u1 + eh2 +
           2.0 * eh * ((1.0 - th) / lam + th * (n / lam + eu));
      break;
    }
    case IdlingKind::bs:
      m2 = common + 2.0 * eh * ((1.0 - th + n * th) / lam - th * u1) + eh2;
      break;
    case IdlingKind::cs: {
      const double hb = h.lst_deriv(std::get<ConditionalIdling>(cfg.idling).b[0], 1);
      m2 = common + 2.0 * (eh + hb) / lam - 2.0 * hb * n / lam + 2.0 * hb * u1 + eh2;
      break;
    }
  }
  return {m1, m2};
}

/// Expected peak age of information at receiver i.
inline double paoi(const SystemConfig& cfg, std::size_t i) {
  const Moments inter = inter_service_moments(cfg, i);
  return expected_wait(cfg, i) + inter.m1 + cfg.sources[i].service.mean();
}

/// Time-average age of information at receiver i.
inline double aoi(const SystemConfig& cfg, std::size_t i) {
  cfg.validate();
  detail::check_index(cfg, i);
  const Moments inter = (cfg.size() == 1 && kind_of(cfg.wakeup) == WakeupKind::n_policy)
                            ? single_source_inter_service_moments(cfg)
                            : inter_service_moments(cfg, i);
  return inter.m2 / (2.0 * inter.m1) + expected_wait(cfg, i) + cfg.sources[i].service.mean();
}

/// All per-source metrics plus the energy rate.
inline MetricsReport evaluate(const SystemConfig& cfg) {
  cfg.validate();
  MetricsReport r;
  r.method = Method::analytic;
  r.energy_rate = energy_rate(cfg);
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    r.theta.push_back(detail::theta_unchecked(cfg, i));
    r.paoi.push_back(paoi(cfg, i));
    r.aoi.push_back(aoi(cfg, i));
  }
  return r;
}

/// Threshold rate b with lst(service, b) = theta, for conditional sleep.
/// theta = 1 gives 0; theta = 0 gives +inf when the service has no atom at 0.
inline double cs_rate_for_theta(const Distribution& service, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) fail(ErrorKind::domain, "theta must lie in [0, 1]");
  if (theta == 1.0) return 0.0;
  const double floor = service.atom_at_zero();
  if (theta <= floor) {
    if (theta == 0.0) return std::numeric_limits<double>::infinity();
    fail(ErrorKind::domain, "sleep probability at or below the service time's mass at zero");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (service.lst(hi) > theta) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return hi;
  }
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (service.lst(mid) > theta) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Peak age of a single-source LCFS queue with conditional sleep and N-policy.
inline double lcfs_paoi(double lambda, const Distribution& h, const Distribution& u, double theta, double n) {
  if (!(lambda > 0.0)) fail(ErrorKind::domain, "lambda must be > 0");
  if (!(theta >= 0.0 && theta <= 1.0)) fail(ErrorKind::domain, "theta must lie in [0, 1]");
  if (!(n >= 1.0)) fail(ErrorKind::domain, "N must be >= 1");
  const double rho = lambda * h.mean();
  if (!(rho < 1.0)) fail(ErrorKind::instability, "LCFS load lambda*E[H] must be < 1");
  const double q = (1.0 - rho) / (1.0 + theta * (n - 1.0 + lambda * u.mean()));
  const double hl = h.lst(lambda);
  const double num = theta * (1.0 - u.lst(lambda)) * q + 2.0 - hl + lambda * h.lst_deriv(lambda, 1);
  return h.mean() + num / (lambda * (1.0 - hl + q));
}

/// Energy rate of the same LCFS queue; every arrival is served.
inline double lcfs_energy(double lambda, const Distribution& h, const Distribution& u, double theta, double n,
                          const PowerProfile& power) {
  if (!(lambda > 0.0)) fail(ErrorKind::domain, "lambda must be > 0");
  if (!(theta >= 0.0 && theta <= 1.0)) fail(ErrorKind::domain, "theta must lie in [0, 1]");
  if (!(n >= 1.0)) fail(ErrorKind::domain, "N must be >= 1");
  const double rho = lambda * h.mean();
  if (!(rho < 1.0)) fail(ErrorKind::instability, "LCFS load lambda*E[H] must be < 1");
  const double eu = u.mean();
  const double vac_energy = (1.0 - theta) * power.idle / lambda + theta * n / lambda * power.sleep + theta * eu * power.setup;
  const double vac_length = (1.0 - theta) / lambda + theta * (n / lambda + eu);
  return rho * power.busy + (1.0 - rho) * vac_energy / vac_length;
}

}  // namespace sleepwake
