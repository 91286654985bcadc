#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sleepwake/analytic.hpp"
#include "sleepwake/distribution.hpp"
#include "sleepwake/error.hpp"
#include "sleepwake/model.hpp"
#include "sleepwake/parallel.hpp"

namespace sleepwake {

// ---------------------------------------------------------------------------
// Single-source PAoI-constrained design (N real, theta in [0, 1])

/// One data source served under conditional sleep and the N-policy.
struct SingleSource {
  double lambda = 1.0;
  Distribution service = Distribution::exponential(1.0);
  Distribution setup = Distribution::zero();
  PowerProfile power;
};

/// Energy rate at real-valued N.
inline double relaxed_energy(const SingleSource& s, double n, double theta) {
  const double eh = s.service.mean();
  const double eu = s.setup.mean();
  const PowerProfile& p = s.power;
  const double num = p.busy * eh + (1.0 - theta) / s.lambda * p.idle + theta * (n / s.lambda * p.sleep + eu * p.setup);
  const double den = eh + (1.0 - theta) / s.lambda + theta * (n / s.lambda + eu);
  return num / den;
}

/// Peak age at real-valued N.
inline double relaxed_paoi(const SingleSource& s, double n, double theta) {
  const double c = s.setup.mean() - s.setup.lst(s.lambda) / s.lambda;
  return 2.0 * s.service.mean() + 1.0 / s.lambda + theta * (n / s.lambda + c);
}

enum class P3Type { type1, type2, type3, infeasible };

inline std::string to_string(P3Type t) {
  switch (t) {
    case P3Type::type1: return "Type1";
    case P3Type::type2: return "Type2";
    case P3Type::type3: return "Type3";
    case P3Type::infeasible: return "Infeasible";
  }
  return "?";
}

/// Minimal-energy (N, theta) under a peak-age cap. Type1 is the N -> inf,
/// theta -> 0 limit: `n` is +inf, `theta` is 0 and `asymptotic` is set.
struct P3Solution {
  P3Type type = P3Type::infeasible;
  double theta = 0.0;
  double n = 0.0;
  double energy = std::numeric_limits<double>::quiet_NaN();
  bool asymptotic = false;
};

inline P3Solution solve_p3(const SingleSource& s, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::domain, "tau must be > 0");
  if (!(s.lambda > 0.0) || !std::isfinite(s.lambda)) fail(ErrorKind::domain, "lambda must be finite and > 0");
  const double lam = s.lambda;
  const double eh = s.service.mean();
  const double slack = tau - 1.0 / lam - 2.0 * eh;
  if (slack < 0.0) return {};
  const double c = s.setup.mean() - s.setup.lst(lam) / lam;
  const double per_theta = 1.0 / lam + c;  // PAoI growth per unit theta at N = 1

  std::optional<P3Solution> best;
  auto offer = [&best](const P3Solution& cand) {
    if (!best || cand.energy < best->energy) best = cand;
  };

  // Type 3 first so that exact ties keep the smaller N
  if (per_theta > 0.0) {
    const double th = slack / per_theta;
    if (th <= 1.0) offer({P3Type::type3, th, 1.0, relaxed_energy(s, 1.0, th), false});
  } else {
    // zero setup: theta does not move PAoI at N = 1, take the cheaper vertex
    const double e0 = relaxed_energy(s, 1.0, 0.0), e1 = relaxed_energy(s, 1.0, 1.0);
    offer({P3Type::type3, e1 <= e0 ? 1.0 : 0.0, 1.0, std::min(e0, e1), false});
  }
  const double n2 = lam * (slack - c);
  if (n2 >= 1.0) offer({P3Type::type2, 1.0, n2, relaxed_energy(s, n2, 1.0), false});

  const PowerProfile& p = s.power;
  const double e1 = (p.busy * eh + p.idle / lam + slack * p.sleep) / (tau - eh);
  if (!best || e1 < best->energy) best = P3Solution{P3Type::type1, 0.0, std::numeric_limits<double>::infinity(), e1, true};
  return *best;
}

// ---------------------------------------------------------------------------
// Single-source AoI shape in N

struct AoiShape {
  std::optional<double> n_star;
  bool monotone_increasing = true;
  double eta = 0.0, beta = 0.0, gamma = 0.0;
};

namespace detail {

struct ShapeInputs {
  double lam, theta, eh, eh2, m_b, eu, eu2;
};

inline ShapeInputs shape_inputs(double lambda, const Distribution& h, const Distribution& u, double b) {
  if (!(lambda > 0.0)) fail(ErrorKind::domain, "lambda must be > 0");
  if (!(b >= 0.0)) fail(ErrorKind::domain, "b must be >= 0");
  const double theta = h.lst(b);
  if (theta == 0.0) fail(ErrorKind::undefined_shape, "sleep probability is 0, N has no effect");
  return {lambda, theta, h.mean(), h.moment(2), -h.lst_deriv(b, 1), u.mean(), u.moment(2)};
}

}  // namespace detail

/// AoI written as (eta + beta N + theta N^2 / lambda^2) / (2 (gamma + theta N / lambda)) + const,
/// and the stationary point of that ratio.
inline AoiShape aoi_shape(double lambda, const Distribution& h, const Distribution& u, double b) {
  const auto in = detail::shape_inputs(lambda, h, u, b);
  const double lam = in.lam, th = in.theta;
  AoiShape r;
  r.eta = in.eh2 + 2.0 * (in.eh - in.m_b) / lam + (1.0 - th) * 2.0 / (lam * lam) + 2.0 * in.m_b * in.eu + th * in.eu2;
  r.beta = 2.0 * in.m_b / lam + 2.0 * th / lam * in.eu + th / (lam * lam);
  r.gamma = in.eh + (1.0 - th) / lam + th * in.eu;
  const double c0 = r.beta * r.gamma - r.eta * th / lam;
  const double disc = 1.0 - lam / (r.gamma * r.gamma) * c0;
  if (disc >= 0.0) r.n_star = lam * r.gamma / th * (std::sqrt(disc) - 1.0);
  r.monotone_increasing = !r.n_star || *r.n_star <= 0.0;
  return r;
}

/// Both sides of the sufficient condition for AoI to be non-monotone in N.
struct NonmonotoneCheck {
  double lhs = 0.0, rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

inline NonmonotoneCheck nonmonotone_sides(double lambda, const Distribution& h, const Distribution& u, double b) {
  const auto in = detail::shape_inputs(lambda, h, u, b);
  const double lam = in.lam, th = in.theta;
  NonmonotoneCheck c;
  c.lhs = 2.0 * in.m_b * (in.eh + 1.0 / lam) + 2.0 * th * in.eu * in.eh + (2.0 - th) * th / lam * in.eu + 2.0 * th * th * in.eu * in.eu;
  c.rhs = th * in.eh2 + th * in.eh / lam + th * (1.0 - th) / (lam * lam) + th * th * in.eu2;
  return c;
}

/// The always-sleep (b = 0) specialization, in moments only.
inline NonmonotoneCheck nonmonotone_sides_always_sleep(double lambda, const Distribution& h, const Distribution& u) {
  const double eh = h.mean(), eu = u.mean();
  return {2.0 * eh * eh + eh / lambda + 2.0 * eu * eh + eu / lambda + 2.0 * eu * eu, h.moment(2) + u.moment(2)};
}

inline bool check_nonmonotone(double lambda, const Distribution& h, const Distribution& u, double b) {
  if (b == 0.0) {
    detail::shape_inputs(lambda, h, u, b);
    return nonmonotone_sides_always_sleep(lambda, h, u).holds();
  }
  return nonmonotone_sides(lambda, h, u, b).holds();
}

// ---------------------------------------------------------------------------
// Multi-source design by enumeration over N

enum class P1Mode { paoi, aoi };

struct P1Problem {
  SystemConfig base;  // sources, setup and power are used; idling and wakeup are overwritten
  std::vector<double> tau;
  P1Mode mode = P1Mode::paoi;
  long n_cap = 200;
  int jobs = 1;
};

struct P1Row {
  long n = 0;
  bool feasible = false;
  double energy = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> theta;
  std::size_t tightest = 0;   // source with the largest constraint excess
  double excess = 0.0;        // metric - tau for that source (<= 0 when feasible)
};

struct P1Result {
  bool feasible = false;
  long n = 0;
  std::vector<double> theta;
  std::vector<double> b;
  double energy = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> metric;  // constrained metric per source, re-evaluated
  bool at_cap = false;
  std::size_t tightest = 0;
  double excess = 0.0;
  std::vector<P1Row> table;
};

namespace detail {

struct P1Point {
  std::vector<double> theta;
  double energy = std::numeric_limits<double>::infinity();
  double excess = std::numeric_limits<double>::infinity();
  std::size_t tightest = 0;
  bool valid = false;

  bool feasible() const { return valid && excess <= 0.0; }
  bool better_than(const P1Point& o) const {
    if (!valid) return false;
    if (!o.valid) return true;
    if (feasible() != o.feasible()) return feasible();
    if (feasible()) return energy < o.energy;
    return excess < o.excess;
  }
};

inline SystemConfig p1_config(const P1Problem& prob, long n, const std::vector<double>& theta) {
  SystemConfig cfg = prob.base;
  cfg.wakeup = NPolicy{n};
  ConditionalIdling cs;
  for (std::size_t i = 0; i < cfg.size(); ++i) cs.b.push_back(cs_rate_for_theta(cfg.sources[i].service, theta[i]));
  cfg.idling = cs;
  return cfg;
}

inline P1Point p1_eval(const P1Problem& prob, long n, const std::vector<double>& theta) {
  P1Point pt;
  pt.theta = theta;
  SystemConfig cfg;
  try {
    cfg = p1_config(prob, n, theta);
  } catch (const Error&) {
    return pt;  // theta outside what the service distribution allows
  }
  pt.valid = true;
  pt.energy = energy_rate(cfg);
  pt.excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const double m = prob.mode == P1Mode::paoi ? paoi(cfg, i) : aoi(cfg, i);
    const double e = m - prob.tau[i];
    if (e > pt.excess) {
      pt.excess = e;
      pt.tightest = i;
    }
  }
  return pt;
}

inline P1Row p1_solve_n(const P1Problem& prob, long n) {
  const std::size_t k = prob.base.size();
  const int grid = k == 1 ? 41 : k == 2 ? 21 : k == 3 ? 9 : 5;

  P1Point best;
  std::vector<int> idx(k, 0);
  std::vector<double> th(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) th[i] = idx[i] / double(grid - 1);
    const P1Point pt = p1_eval(prob, n, th);
    if (pt.better_than(best)) best = pt;
    std::size_t c = 0;
    while (c < k && ++idx[c] == grid) idx[c++] = 0;
    if (c == k) break;
  }

  // pattern search over all 3^k - 1 directions with step halving
  std::vector<std::vector<int>> dirs;
  {
    std::vector<int> d(k, -1);
    while (true) {
      if (std::any_of(d.begin(), d.end(), [](int v) { return v != 0; })) dirs.push_back(d);
      std::size_t c = 0;
      while (c < k && ++d[c] == 2) d[c++] = -1;
      if (c == k) break;
    }
  }
  // Infeasible trial points are pulled back along the ray to theta = 0
  // (never sleep) so the search can slide along a curved constraint boundary.
  const bool origin_feasible = p1_eval(prob, n, std::vector<double>(k, 0.0)).feasible();
  auto project = [&](const std::vector<double>& cand) {
    P1Point pt = p1_eval(prob, n, cand);
    if (pt.feasible() || !origin_feasible || !best.feasible()) return pt;
    double lo = 0.0, hi = 1.0;
    std::vector<double> scaled(k);
    for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
      const double mid = 0.5 * (lo + hi);
      for (std::size_t i = 0; i < k; ++i) scaled[i] = mid * cand[i];
      (p1_eval(prob, n, scaled).feasible() ? lo : hi) = mid;
    }
    for (std::size_t i = 0; i < k; ++i) scaled[i] = lo * cand[i];
    return p1_eval(prob, n, scaled);
  };

  double step = 0.5 / (grid - 1);
  while (step > 1e-10) {
    bool moved = false;
    for (const auto& d : dirs) {
      std::vector<double> cand = best.theta;
      for (std::size_t i = 0; i < k; ++i) cand[i] = std::clamp(cand[i] + step * d[i], 0.0, 1.0);
      if (cand == best.theta) continue;
      const P1Point pt = project(cand);
      if (pt.better_than(best)) {
        best = pt;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }

  P1Row row;
  row.n = n;
  row.feasible = best.feasible();
  row.theta = best.theta;
  row.tightest = best.tightest;
  row.excess = best.excess;
  if (row.feasible) row.energy = best.energy;
  return row;
}

}  // namespace detail

/// Enumerates N = 1..n_cap and minimizes energy over theta for each N.
/// The winner is re-evaluated through the analytic module before returning.
inline P1Result solve_p1(const P1Problem& prob) {
  if (prob.tau.size() != prob.base.size()) fail(ErrorKind::config, "tau length must equal the number of sources");
  detail::p1_config(prob, 1, std::vector<double>(prob.base.size(), 1.0)).validate();
  if (prob.n_cap < 1) fail(ErrorKind::config, "n_cap must be >= 1");

  P1Result res;
  res.table = parallel_map(static_cast<std::size_t>(prob.n_cap), prob.jobs,
                           [&prob](std::size_t j) { return detail::p1_solve_n(prob, static_cast<long>(j) + 1); });

  const P1Row* best = nullptr;
  const P1Row* closest = nullptr;
  for (const auto& row : res.table) {
    if (row.feasible && (!best || row.energy < best->energy)) best = &row;
    if (!closest || row.excess < closest->excess) closest = &row;
  }
  if (!best) {
    res.tightest = closest->tightest;
    res.excess = closest->excess;
    return res;
  }

  const SystemConfig cfg = detail::p1_config(prob, best->n, best->theta);
  res.n = best->n;
  res.theta = best->theta;
  res.b = std::get<ConditionalIdling>(cfg.idling).b;
  res.energy = energy_rate(cfg);
  res.excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    res.metric.push_back(prob.mode == P1Mode::paoi ? paoi(cfg, i) : aoi(cfg, i));
    const double e = res.metric.back() - prob.tau[i];
    if (e > res.excess) {
      res.excess = e;
      res.tightest = i;
    }
  }
  res.feasible = res.excess <= 0.0;
  res.at_cap = res.n == prob.n_cap;
  return res;
}

}  // namespace sleepwake
