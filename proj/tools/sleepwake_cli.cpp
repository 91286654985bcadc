#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sleepwake/sleepwake.hpp"

namespace sw = sleepwake;
using sw::io::Json;
using sw::io::Reader;

namespace {

enum Exit { ok = 0, runtime_error = 1, config_error = 2, infeasible = 3, verify_failed = 4 };

struct Options {
  std::string config;
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed, cycles, warmup;
  int jobs = 1;
  std::vector<std::string> sweeps;
};

struct Outcome {
  sw::Table table;
  Json summary = Json::object();
  int status = ok;
};

// "values" sections accept a list or {"start", "stop", "step"}.
std::vector<double> read_values(const Reader& r) {
  if (r.json().is_array()) return r.numbers();
  r.allow_keys({"start", "stop", "step"});
  sw::io::SweepAxis axis{"", r["start"].number(), r["stop"].number(), r["step"].number()};
  if (!(axis.step > 0.0) || !(axis.stop >= axis.start)) r.error("range is empty or step is not positive");
  return axis.values();
}

sw::SimParams sim_params(const Reader& doc, const Options& opt) {
  sw::SimParams p;
  p.config = sw::io::read_system(doc);
  if (doc.has("simulation")) {
    const Reader s = doc["simulation"];
    s.allow_keys({"seed", "cycles", "warmup", "batches"});
    if (s.has("seed")) p.seed = static_cast<std::uint64_t>(s["seed"].integer());
    if (s.has("cycles")) p.horizon = sw::Horizon::of_cycles(static_cast<std::uint64_t>(s["cycles"].integer()));
    if (s.has("warmup")) p.warmup_cycles = static_cast<std::uint64_t>(s["warmup"].integer());
    if (s.has("batches")) p.batches = static_cast<int>(s["batches"].integer());
  }
  if (opt.seed) p.seed = *opt.seed;
  if (opt.cycles) p.horizon = sw::Horizon::of_cycles(*opt.cycles);
  if (opt.warmup) p.warmup_cycles = *opt.warmup;
  return p;
}

sw::SingleSource single_source(const Reader& doc) {
  const sw::SystemConfig cfg = sw::io::read_system(doc);
  if (cfg.size() != 1) doc["sources"].error("this command needs exactly one source");
  return {cfg.sources[0].rate, cfg.sources[0].service, cfg.setup, cfg.power};
}

Outcome run_eval(const Reader& doc) {
  const sw::SystemConfig cfg = sw::io::read_system(doc);
  for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << '\n';
  const sw::MetricsReport m = sw::evaluate(cfg);
  return {sw::report_table(cfg, m), sw::io::to_json(m)};
}

Outcome run_simulate(const Reader& doc, const Options& opt) {
  const sw::SimParams p = sim_params(doc, opt);
  const sw::SimResult r = sw::simulate(p);
  Json summary = sw::io::to_json(r.report);
  summary["cycles"] = r.cycles;
  summary["total_time"] = r.total_time;
  return {sw::report_table(p.config, r.report), summary};
}

Outcome run_verify(const Reader& doc, const Options& opt) {
  const sw::VerifyOutcome v = sw::verify(sim_params(doc, opt));
  return {v.table, Json{{"passed", v.passed}}, v.passed ? ok : verify_failed};
}

Outcome run_compare(const Reader& doc, const Options& opt) {
  const sw::SystemConfig cfg = sw::io::read_system(doc);
  std::vector<double> thetas;
  if (doc.has("compare")) {
    doc["compare"].allow_keys({"theta"});
    thetas = read_values(doc["compare"]["theta"]);
  } else {
    for (int i = 0; i <= 10; ++i) thetas.push_back(i / 10.0);
  }
  return {sw::compare_schemes(cfg, thetas, opt.jobs)};
}

Outcome run_tradeoff(const Reader& doc, const Options& opt) {
  const sw::SystemConfig cfg = sw::io::read_system(doc);
  const Reader t = doc["tradeoff"];
  t.allow_keys({"n", "param"});
  std::vector<long> ns;
  for (double v : read_values(t["n"])) ns.push_back(static_cast<long>(std::llround(v)));
  return {sw::tradeoff(cfg, ns, read_values(t["param"]), opt.jobs)};
}

Outcome run_p1(const Reader& doc, const Options& opt, sw::P1Mode mode) {
  sw::P1Problem prob;
  prob.base = sw::io::read_system(doc);
  const Reader o = doc["optimize"];
  o.allow_keys({"tau", "n_cap", "regions"});
  prob.tau = o["tau"].numbers();
  if (o.has("n_cap")) prob.n_cap = o["n_cap"].integer();
  prob.mode = mode;
  prob.jobs = opt.jobs;
  const sw::P1Result r = o.guard([&] { return sw::solve_p1(prob); });
  Outcome out{sw::p1_table(r, prob.base.size())};
  out.summary["feasible"] = r.feasible;
  if (r.feasible) {
    out.summary["n"] = r.n;
    out.summary["theta"] = r.theta;
    Json b = Json::array();
    for (double x : r.b) b.push_back(sw::io::number_to_json(x));
    out.summary["b"] = b;
    out.summary["energy_rate"] = r.energy;
    out.summary["metric"] = r.metric;
    out.summary["at_cap"] = r.at_cap;
    if (r.at_cap) std::cerr << "note: the optimum sits at n_cap; a larger N may do better\n";
  } else {
    out.summary["tightest_source"] = r.tightest;
    out.summary["excess"] = r.excess;
    out.status = infeasible;
  }
  return out;
}

Outcome run_p3(const Reader& doc, const Options& opt) {
  const sw::SingleSource s = single_source(doc);
  const Reader o = doc["optimize"];
  o.allow_keys({"tau", "n_cap", "regions"});
  const double tau = o["tau"].json().is_array() ? o["tau"][0].number() : o["tau"].number();
  if (o.has("regions")) {
    const Reader g = o["regions"];
    g.allow_keys({"setup_mean", "p_setup"});
    return {sw::p3_regions(s, tau, read_values(g["setup_mean"]), read_values(g["p_setup"]), opt.jobs)};
  }
  const sw::P3Solution sol = sw::solve_p3(s, tau);
  if (sol.type == sw::P3Type::type1)
    std::cerr << "note: Type1 is the limit N -> inf, theta -> 0; it can only be approached, not implemented\n";
  Outcome out{sw::p3_table(s, tau)};
  out.summary["type"] = sw::to_string(sol.type);
  if (sol.type == sw::P3Type::infeasible) out.status = infeasible;
  return out;
}

Outcome run_lcfs(const Reader& doc, const Options& opt) {
  const sw::SingleSource s = single_source(doc);
  const Reader l = doc["lcfs"];
  l.allow_keys({"tau", "lambda"});
  return {sw::lcfs_compare(s.service, s.setup, s.power, l["tau"].number(), read_values(l["lambda"]), opt.jobs)};
}

Outcome run_game(const Reader& doc, const Options& opt) {
  const sw::GameSpec spec = sw::io::read_game(doc["game"]);
  try {
    const sw::GameResult r = sw::algorithm1(spec, opt.jobs);
    Outcome out{sw::game_table(spec, r)};
    out.summary = Json{{"n", r.n}, {"rates", r.rates}, {"energy_rate", r.energy}, {"n_max", sw::n_max(spec)}};
    return out;
  } catch (const sw::Error& e) {
    if (e.kind() != sw::ErrorKind::no_feasible_n) throw;
    std::cerr << "infeasible: " << e.what() << '\n';
    Outcome out;
    out.summary = Json{{"feasible", false}, {"reason", e.what()}};
    out.status = infeasible;
    return out;
  }
}

Outcome dispatch(const std::string& command, const Json& doc, const Options& opt) {
  const Reader r(doc, "");
  if (command == "eval") return run_eval(r);
  if (command == "simulate") return run_simulate(r, opt);
  if (command == "verify") return run_verify(r, opt);
  if (command == "compare-schemes") return run_compare(r, opt);
  if (command == "tradeoff") return run_tradeoff(r, opt);
  if (command == "optimize p1-paoi") return run_p1(r, opt, sw::P1Mode::paoi);
  if (command == "optimize p1-aoi") return run_p1(r, opt, sw::P1Mode::aoi);
  if (command == "optimize p3") return run_p3(r, opt);
  if (command == "lcfs-compare") return run_lcfs(r, opt);
  if (command == "game") return run_game(r, opt);
  throw sw::Error(sw::ErrorKind::config, "unknown command " + command);
}

int execute(const std::string& command, const Options& opt) {
  const Json base = sw::io::load_document(opt.config);
  std::vector<sw::io::SweepAxis> axes;
  for (const auto& s : opt.sweeps) axes.push_back(sw::io::parse_sweep(s));

  sw::Table merged;
  Json points = Json::array();
  int status = ok;
  for (const auto& point : sw::io::sweep_points(axes)) {
    Json doc = base;
    Json sweep = Json::object();
    for (std::size_t a = 0; a < axes.size(); ++a) {
      sw::io::set_field(doc, axes[a].field, point[a]);
      sweep[axes[a].field] = point[a];
    }
    Outcome o = dispatch(command, doc, opt);
    status = std::max(status, o.status);
    if (merged.columns.empty()) {
      for (const auto& a : axes) merged.columns.push_back(a.field);
      merged.columns.insert(merged.columns.end(), o.table.columns.begin(), o.table.columns.end());
    }
    for (const auto& row : o.table.rows) {
      std::vector<sw::Cell> cells(point.begin(), point.end());
      cells.insert(cells.end(), row.begin(), row.end());
      merged.add(std::move(cells));
    }
    points.push_back(Json{{"sweep", sweep}, {"summary", o.summary}, {"rows", sw::table_json(o.table)}});
  }

  std::ofstream file;
  if (!opt.out.empty()) {
    file.open(opt.out);
    if (!file) throw sw::Error(sw::ErrorKind::config, opt.out + ": cannot open for writing");
  }
  std::ostream& os = opt.out.empty() ? std::cout : file;
  if (opt.format == "json")
    os << Json{{"command", command}, {"points", points}}.dump(2) << '\n';
  else
    sw::write_csv(os, merged);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-energy analysis of sleep-wake servers with single-packet buffers"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&opt](CLI::App* sub, bool sim) {
    sub->add_option("--config", opt.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output file (default: stdout)");
    sub->add_option("--format", opt.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--sweep", opt.sweeps, "FIELD=START:STOP:STEP, repeatable");
    if (sim) {
      sub->add_option("--seed", opt.seed, "random seed");
      sub->add_option("--cycles", opt.cycles, "regenerative cycles including warmup");
      sub->add_option("--warmup", opt.warmup, "warmup cycles");
    }
  };

  std::string command;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, const std::string& full,
                  bool sim) {
    CLI::App* sub = parent->add_subcommand(name, help);
    common(sub, sim);
    sub->callback([&command, full] { command = full; });
  };
  leaf(&app, "eval", "analytic metrics", "eval", false);
  leaf(&app, "simulate", "discrete-event simulation", "simulate", true);
  leaf(&app, "verify", "analytic vs simulation at 3 standard errors", "verify", true);
  leaf(&app, "compare-schemes", "matched-theta HT/BS/CS comparison", "compare-schemes", false);
  leaf(&app, "tradeoff", "metrics over N and the idling parameter", "tradeoff", false);
  leaf(&app, "lcfs-compare", "LCFS vs single buffer minimal energy", "lcfs-compare", false);
  leaf(&app, "game", "stage-II equilibria and the best N", "game", false);
  CLI::App* optimize = app.add_subcommand("optimize", "energy minimization under freshness caps");
  optimize->require_subcommand(1);
  leaf(optimize, "p1-paoi", "multi-source, peak-age caps", "optimize p1-paoi", false);
  leaf(optimize, "p1-aoi", "multi-source, average-age caps", "optimize p1-aoi", false);
  leaf(optimize, "p3", "single source, relaxed N", "optimize p3", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    return execute(command, opt);
  } catch (const sw::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case sw::ErrorKind::infeasible:
      case sw::ErrorKind::no_feasible_n:
      case sw::ErrorKind::no_equilibrium:
      case sw::ErrorKind::infeasible_parameters: return infeasible;
      default: return config_error;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return runtime_error;
  }
}
