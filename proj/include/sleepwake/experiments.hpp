#pragma once

// Table-producing experiment drivers shared by the CLI and the tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "sleepwake/analytic.hpp"
#include "sleepwake/config_io.hpp"
#include "sleepwake/game.hpp"
#include "sleepwake/model.hpp"
#include "sleepwake/optimizer.hpp"
#include "sleepwake/parallel.hpp"
#include "sleepwake/simulator.hpp"

namespace sleepwake {

using Cell = std::variant<double, long, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) fail(ErrorKind::domain, "no column named " + name);
    return static_cast<std::size_t>(it - columns.begin());
  }
};

inline std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return io::format_number(*d);
  if (const auto* l = std::get_if<long>(&c)) return std::to_string(*l);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  return std::get<std::string>(c);
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << '\n';
  }
}

inline io::Json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return io::number_to_json(*d);
  if (const auto* l = std::get_if<long>(&c)) return *l;
  if (const auto* b = std::get_if<bool>(&c)) return *b;
  return std::get<std::string>(c);
}

/// Array of row objects keyed by column name.
inline io::Json table_json(const Table& t) {
  io::Json rows = io::Json::array();
  for (const auto& row : t.rows) {
    io::Json obj = io::Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(obj));
  }
  return rows;
}

// --- evaluation ------------------------------------------------------------

inline const std::vector<std::string> eval_columns = {"source_index", "lambda", "theta", "paoi",
                                                      "aoi",          "energy_rate", "method"};

inline Table report_table(const SystemConfig& cfg, const MetricsReport& m) {
  Table t;
  t.columns = eval_columns;
  const bool sim = m.method == Method::simulated;
  if (sim) t.columns.insert(t.columns.end(), {"theta_se", "paoi_se", "aoi_se", "energy_se"});
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    std::vector<Cell> row{static_cast<long>(i), cfg.sources[i].rate, m.theta[i], m.paoi[i],
                          m.aoi[i],             m.energy_rate,       to_string(m.method)};
    if (sim) row.insert(row.end(), {m.theta_se[i], m.paoi_se[i], m.aoi_se[i], m.energy_se});
    t.add(std::move(row));
  }
  return t;
}

struct VerifyOutcome {
  Table table;
  bool passed = true;
};

/// Analytic vs simulated metrics, each judged at three standard errors.
/// The energy row carries source_index -1.
inline VerifyOutcome verify(const SimParams& params) {
  const MetricsReport a = evaluate(params.config);
  const SimResult s = simulate(params);
  const MetricsReport& m = s.report;
  VerifyOutcome out;
  out.table.columns = {"source_index", "metric", "analytic", "simulated", "se", "z", "pass"};
  auto judge = [&out](long idx, const std::string& name, double av, double sv, double se) {
    const double diff = std::abs(av - sv);
    const bool ok = diff <= 3.0 * se + 1e-9 * std::max(1.0, std::abs(av));
    const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    out.passed = out.passed && ok;
    out.table.add({idx, name, av, sv, se, z, ok});
  };
  for (std::size_t i = 0; i < params.config.size(); ++i) {
    const long idx = static_cast<long>(i);
    judge(idx, "theta", a.theta[i], m.theta[i], m.theta_se[i]);
    judge(idx, "paoi", a.paoi[i], m.paoi[i], m.paoi_se[i]);
    judge(idx, "aoi", a.aoi[i], m.aoi[i], m.aoi_se[i]);
  }
  judge(-1, "energy_rate", a.energy_rate, m.energy_rate, m.energy_se);
  return out;
}

// --- idling-scheme comparison ----------------------------------------------

/// Copy of `cfg` whose idling scheme sleeps with probability `theta` after
/// every class: HT with D = -ln(theta)/lambda, BS with theta, CS with the
/// threshold rate that inverts H_i^*(b) = theta.
inline SystemConfig matched_config(const SystemConfig& cfg, IdlingKind kind, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) fail(ErrorKind::domain, "theta must lie in [0, 1]");
  SystemConfig out = cfg;
  const std::size_t k = cfg.size();
  switch (kind) {
    case IdlingKind::ht: {
      HysteresisIdling h;
      const double d = theta == 0.0 ? std::numeric_limits<double>::infinity() : -std::log(theta) / cfg.total_rate();
      h.hysteresis.assign(k, Distribution::deterministic(d == 0.0 ? 0.0 : d));
      out.idling = h;
      break;
    }
    case IdlingKind::bs: out.idling = BernoulliIdling{std::vector<double>(k, theta)}; break;
    case IdlingKind::cs: {
      ConditionalIdling c;
      for (const auto& s : cfg.sources) c.b.push_back(cs_rate_for_theta(s.service, theta));
      out.idling = c;
      break;
    }
  }
  return out;
}

inline Table compare_schemes(const SystemConfig& cfg, const std::vector<double>& thetas, int jobs = 1) {
  const IdlingKind kinds[] = {IdlingKind::ht, IdlingKind::bs, IdlingKind::cs};
  auto blocks = parallel_map(thetas.size(), jobs, [&](std::size_t j) {
    std::vector<std::vector<Cell>> rows;
    for (IdlingKind kind : kinds) {
      const SystemConfig c = matched_config(cfg, kind, thetas[j]);
      const MetricsReport m = evaluate(c);
      for (std::size_t i = 0; i < c.size(); ++i)
        rows.push_back({thetas[j], to_string(kind), static_cast<long>(i), m.theta[i], m.paoi[i], m.aoi[i],
                        m.energy_rate});
    }
    return rows;
  });
  Table t;
  t.columns = {"theta", "scheme", "source_index", "sleep_probability", "paoi", "aoi", "energy_rate"};
  for (auto& b : blocks)
    for (auto& r : b) t.add(std::move(r));
  return t;
}

// --- tradeoff surfaces -----------------------------------------------------

/// Copy of `cfg` with the N-policy threshold `n` and every source's idling
/// parameter (D for HT, theta for BS, b for CS) set to `param`.
inline SystemConfig tradeoff_config(const SystemConfig& cfg, long n, double param) {
  if (!std::holds_alternative<NPolicy>(cfg.wakeup)) fail(ErrorKind::config, "tradeoff requires the n_policy wakeup");
  SystemConfig out = cfg;
  out.wakeup = NPolicy{n};
  const std::size_t k = cfg.size();
  switch (kind_of(cfg.idling)) {
    case IdlingKind::ht: out.idling = HysteresisIdling{std::vector<Distribution>(k, Distribution::deterministic(param))}; break;
    case IdlingKind::bs: out.idling = BernoulliIdling{std::vector<double>(k, param)}; break;
    case IdlingKind::cs: out.idling = ConditionalIdling{std::vector<double>(k, param)}; break;
  }
  out.validate();
  return out;
}

inline Table tradeoff(const SystemConfig& cfg, const std::vector<long>& ns, const std::vector<double>& params,
                      int jobs = 1) {
  auto blocks = parallel_map(ns.size() * params.size(), jobs, [&](std::size_t j) {
    const long n = ns[j / params.size()];
    const double p = params[j % params.size()];
    const SystemConfig c = tradeoff_config(cfg, n, p);
    const MetricsReport m = evaluate(c);
    std::vector<std::vector<Cell>> rows;
    for (std::size_t i = 0; i < c.size(); ++i)
      rows.push_back({n, p, static_cast<long>(i), m.theta[i], m.paoi[i], m.aoi[i], m.energy_rate});
    return rows;
  });
  Table t;
  t.columns = {"n", "param", "source_index", "theta", "paoi", "aoi", "energy_rate"};
  for (auto& b : blocks)
    for (auto& r : b) t.add(std::move(r));
  return t;
}

// --- optimization tables ---------------------------------------------------

inline Table p1_table(const P1Result& r, std::size_t k) {
  Table t;
  t.columns = {"n", "feasible", "energy_rate"};
  for (std::size_t i = 0; i < k; ++i) t.columns.push_back("theta_" + std::to_string(i));
  t.columns.insert(t.columns.end(), {"tightest_source", "excess"});
  for (const auto& row : r.table) {
    std::vector<Cell> cells{row.n, row.feasible, row.energy};
    for (double th : row.theta) cells.emplace_back(th);
    cells.emplace_back(static_cast<long>(row.tightest));
    cells.emplace_back(row.excess);
    t.add(std::move(cells));
  }
  return t;
}

inline Table p3_table(const SingleSource& s, double tau) {
  const P3Solution sol = solve_p3(s, tau);
  Table t;
  t.columns = {"type", "n", "theta", "energy_rate", "asymptotic"};
  t.add({to_string(sol.type), sol.n, sol.theta, sol.energy, sol.asymptotic});
  return t;
}

/// Solution type over a grid of exponential setup means and setup powers.
inline Table p3_regions(const SingleSource& base, double tau, const std::vector<double>& setup_means,
                        const std::vector<double>& setup_powers, int jobs = 1) {
  auto rows = parallel_map(setup_means.size() * setup_powers.size(), jobs, [&](std::size_t j) {
    SingleSource s = base;
    const double eu = setup_means[j / setup_powers.size()];
    const double pst = setup_powers[j % setup_powers.size()];
    s.setup = eu > 0.0 ? Distribution::exponential(1.0 / eu) : Distribution::zero();
    s.power.setup = pst;
    const P3Solution sol = solve_p3(s, tau);
    return std::vector<Cell>{eu, pst, to_string(sol.type), sol.n, sol.theta, sol.energy};
  });
  Table t;
  t.columns = {"setup_mean", "p_setup", "type", "n", "theta", "energy_rate"};
  for (auto& r : rows) t.add(std::move(r));
  return t;
}

// --- LCFS vs single buffer -------------------------------------------------

struct LcfsOptimum {
  bool feasible = false;
  double n = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
};

/// Minimal LCFS energy under a peak-age cap over theta in [0, 1] and real
/// N in [1, n_hi]. Grid search with boundary refinement in theta.
inline LcfsOptimum lcfs_min_energy(double lambda, const Distribution& h, const Distribution& u,
                                   const PowerProfile& power, double tau, double n_hi = 1e6) {
  LcfsOptimum best;
  auto offer = [&](double n, double th) {
    if (!(lcfs_paoi(lambda, h, u, th, n) <= tau)) return;
    const double e = lcfs_energy(lambda, h, u, th, n, power);
    if (!best.feasible || e < best.energy) best = {true, n, th, e};
  };
  const int per_decade = 20;
  const int n_points = static_cast<int>(std::ceil(std::log10(n_hi) * per_decade)) + 1;
  const int theta_points = 200;
  for (int a = 0; a < n_points; ++a) {
    const double n = std::min(n_hi, std::pow(10.0, double(a) / per_decade));
    bool prev_ok = false;
    double prev_th = 0.0;
    for (int b = 0; b <= theta_points; ++b) {
      const double th = double(b) / theta_points;
      const bool ok = lcfs_paoi(lambda, h, u, th, n) <= tau;
      if (ok) offer(n, th);
      if (b > 0 && ok != prev_ok) {
        // refine the feasibility boundary between neighbouring grid points
        double lo = prev_ok ? prev_th : th, hi = prev_ok ? th : prev_th;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (lcfs_paoi(lambda, h, u, mid, n) <= tau ? lo : hi) = mid;
        }
        offer(n, lo);
      }
      prev_ok = ok;
      prev_th = th;
    }
  }
  return best;
}

inline Table lcfs_compare(const Distribution& h, const Distribution& u, const PowerProfile& power, double tau,
                          const std::vector<double>& lambdas, int jobs = 1) {
  auto rows = parallel_map(lambdas.size(), jobs, [&](std::size_t j) {
    const double lam = lambdas[j];
    LcfsOptimum l;
    if (lam * h.mean() < 1.0) l = lcfs_min_energy(lam, h, u, power, tau);
    const P3Solution s = solve_p3(SingleSource{lam, h, u, power}, tau);
    return std::vector<Cell>{lam, l.feasible, l.energy, l.n, l.theta, to_string(s.type), s.energy, s.n, s.theta};
  });
  Table t;
  t.columns = {"lambda",      "lcfs_feasible", "lcfs_energy",  "lcfs_n",      "lcfs_theta",
               "single_type", "single_energy", "single_n", "single_theta"};
  for (auto& r : rows) t.add(std::move(r));
  return t;
}

// --- game ------------------------------------------------------------------

inline Table game_table(const GameSpec& spec, const GameResult& r) {
  const std::size_t k = spec.size();
  Table t;
  t.columns = {"n", "solved", "feasible", "energy_rate"};
  for (std::size_t i = 0; i < k; ++i) t.columns.push_back("rate_" + std::to_string(i));
  for (std::size_t i = 0; i < k; ++i) t.columns.push_back("cost_" + std::to_string(i));
  t.columns.push_back("max_residual");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& eq : r.table) {
    std::vector<Cell> cells{eq.n, eq.solved, eq.feasible, eq.energy};
    for (std::size_t i = 0; i < k; ++i) cells.emplace_back(eq.solved ? eq.rates[i] : nan);
    for (std::size_t i = 0; i < k; ++i) cells.emplace_back(eq.solved ? eq.costs[i] : nan);
    double res = eq.solved ? 0.0 : nan;
    for (double g : eq.residuals) res = std::max(res, std::abs(g));
    cells.emplace_back(res);
    t.add(std::move(cells));
  }
  return t;
}

}  // namespace sleepwake
