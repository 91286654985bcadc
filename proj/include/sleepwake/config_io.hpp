#pragma once

// JSON reading and writing for configs, game specs and reports. Requires
// nlohmann/json as "json.hpp" on the include path.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleepwake/distribution.hpp"
#include "sleepwake/error.hpp"
#include "sleepwake/game.hpp"
#include "sleepwake/model.hpp"

namespace sleepwake::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// JSON cannot hold non-finite numbers; they travel as "inf", "-inf", "nan".
inline Json number_to_json(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

/// Tracks the field path of the value being read so errors can name it.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const Json& json() const { return j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::config, (path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  void expect_object() const {
    if (!j_.is_object()) error("expected an object");
  }

  void allow_keys(std::initializer_list<const char*> keys) const {
    expect_object();
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) at_key(it.key()).error("unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Reader operator[](const std::string& key) const {
    expect_object();
    if (!j_.contains(key)) fail(ErrorKind::config, child_path(key) + ": missing required field");
    return at_key(key);
  }

  Reader operator[](std::size_t i) const {
    if (i >= size()) error("missing element " + std::to_string(i));
    return Reader(j_.at(i), path_ + "[" + std::to_string(i) + "]");
  }

  std::size_t size() const {
    if (!j_.is_array()) error("expected an array");
    return j_.size();
  }

  double number(bool allow_inf = false) const {
    if (j_.is_number()) return j_.get<double>();
    if (allow_inf && j_.is_string() && j_.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    error(allow_inf ? "expected a number or \"inf\"" : "expected a number");
  }

  long integer() const {
    if (j_.is_number_integer()) return j_.get<long>();
    if (j_.is_number_float()) {
      const double v = j_.get<double>();
      if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<long>(v);
    }
    error("expected an integer");
  }

  std::string string() const {
    if (!j_.is_string()) error("expected a string");
    return j_.get<std::string>();
  }

  std::vector<double> numbers(bool allow_inf = false) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].number(allow_inf));
    return out;
  }

  template <class F>
  auto guard(F&& f) const -> decltype(f()) {
    try {
      return f();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::config) throw;
      const std::string msg = e.what();
      const std::string prefix = "config: ";
      error(msg.rfind(prefix, 0) == 0 ? msg.substr(prefix.size()) : msg);
    }
  }

 private:
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  Reader at_key(const std::string& key) const { return Reader(j_.at(key), child_path(key)); }

  const Json& j_;
  std::string path_;
};

// --- distributions ---------------------------------------------------------

inline Distribution read_distribution(const Reader& r) {
  r.expect_object();
  const std::string type = r["type"].string();
  return r.guard([&] {
    if (type == "zero") {
      r.allow_keys({"type"});
      return Distribution::zero();
    }
    if (type == "deterministic") {
      r.allow_keys({"type", "value"});
      return Distribution::deterministic(r["value"].number(true));
    }
    if (type == "exponential") {
      r.allow_keys({"type", "rate"});
      return Distribution::exponential(r["rate"].number());
    }
    if (type == "gamma") {
      r.allow_keys({"type", "shape", "scale"});
      return Distribution::gamma(r["shape"].number(), r["scale"].number());
    }
    if (type == "uniform") {
      r.allow_keys({"type", "low", "high"});
      return Distribution::uniform(r["low"].number(), r["high"].number());
    }
    r["type"].error("unknown distribution type '" + type + "'");
  });
}

inline Json to_json(const Distribution& d) {
  Json j;
  switch (d.kind()) {
    case Distribution::Kind::zero: j["type"] = "zero"; break;
    case Distribution::Kind::deterministic:
      j["type"] = "deterministic";
      j["value"] = number_to_json(d.param(0));
      break;
    case Distribution::Kind::exponential:
      j["type"] = "exponential";
      j["rate"] = d.param(0);
      break;
    case Distribution::Kind::gamma:
      j["type"] = "gamma";
      j["shape"] = d.param(0);
      j["scale"] = d.param(1);
      break;
    case Distribution::Kind::uniform:
      j["type"] = "uniform";
      j["low"] = d.param(0);
      j["high"] = d.param(1);
      break;
  }
  return j;
}

// --- system configuration --------------------------------------------------

inline PowerProfile read_power(const Reader& r) {
  r.allow_keys({"busy", "idle", "sleep", "setup", "detect"});
  PowerProfile p;
  p.busy = r["busy"].number();
  p.idle = r["idle"].number();
  p.sleep = r["sleep"].number();
  p.setup = r["setup"].number();
  if (r.has("detect")) p.detect = r["detect"].number();
  r.guard([&] { p.validate(); });
  return p;
}

inline Json to_json(const PowerProfile& p) {
  return Json{{"busy", p.busy}, {"idle", p.idle}, {"sleep", p.sleep}, {"setup", p.setup}, {"detect", p.detect}};
}

inline IdlingScheme read_idling(const Reader& r) {
  const std::string scheme = r["scheme"].string();
  if (scheme == "ht") {
    r.allow_keys({"scheme", "hysteresis"});
    const Reader list = r["hysteresis"];
    HysteresisIdling h;
    for (std::size_t i = 0; i < list.size(); ++i) h.hysteresis.push_back(read_distribution(list[i]));
    return h;
  }
  if (scheme == "bs") {
    r.allow_keys({"scheme", "theta"});
    return BernoulliIdling{r["theta"].numbers()};
  }
  if (scheme == "cs") {
    r.allow_keys({"scheme", "b"});
    return ConditionalIdling{r["b"].numbers(true)};
  }
  r["scheme"].error("unknown idling scheme '" + scheme + "' (expected ht, bs or cs)");
}

inline Json to_json(const IdlingScheme& s) {
  Json j;
  if (const auto* h = std::get_if<HysteresisIdling>(&s)) {
    j["scheme"] = "ht";
    j["hysteresis"] = Json::array();
    for (const auto& d : h->hysteresis) j["hysteresis"].push_back(to_json(d));
  } else if (const auto* b = std::get_if<BernoulliIdling>(&s)) {
    j["scheme"] = "bs";
    j["theta"] = b->theta;
  } else {
    j["scheme"] = "cs";
    j["b"] = Json::array();
    for (double v : std::get<ConditionalIdling>(s).b) j["b"].push_back(number_to_json(v));
  }
  return j;
}

inline WakeupScheme read_wakeup(const Reader& r) {
  const std::string policy = r["policy"].string();
  if (policy == "n_policy") {
    r.allow_keys({"policy", "n"});
    return NPolicy{r["n"].integer()};
  }
  if (policy == "single_sleep") {
    r.allow_keys({"policy", "w"});
    return SingleSleep{read_distribution(r["w"])};
  }
  if (policy == "multiple_sleep") {
    r.allow_keys({"policy", "w"});
    return MultipleSleep{read_distribution(r["w"])};
  }
  r["policy"].error("unknown wakeup policy '" + policy + "' (expected n_policy, single_sleep or multiple_sleep)");
}

inline Json to_json(const WakeupScheme& w) {
  Json j;
  if (const auto* n = std::get_if<NPolicy>(&w)) {
    j["policy"] = "n_policy";
    j["n"] = n->n;
  } else if (const auto* s = std::get_if<SingleSleep>(&w)) {
    j["policy"] = "single_sleep";
    j["w"] = to_json(s->w);
  } else {
    j["policy"] = "multiple_sleep";
    j["w"] = to_json(std::get<MultipleSleep>(w).w);
  }
  return j;
}

/// Keys of a system configuration; other top-level sections are left to the caller.
inline constexpr std::initializer_list<const char*> system_keys = {"sources", "idling", "wakeup", "setup", "power"};

/// Reads the system fields of `r`, ignoring keys outside `system_keys`.
inline SystemConfig read_system(const Reader& r) {
  r.expect_object();
  SystemConfig cfg;
  const Reader sources = r["sources"];
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const Reader s = sources[i];
    s.allow_keys({"rate", "service"});
    cfg.sources.push_back({s["rate"].number(), read_distribution(s["service"])});
  }
  cfg.idling = read_idling(r["idling"]);
  cfg.wakeup = read_wakeup(r["wakeup"]);
  cfg.setup = r.has("setup") ? read_distribution(r["setup"]) : Distribution::zero();
  cfg.power = read_power(r["power"]);
  r.guard([&] { cfg.validate(); });
  return cfg;
}

inline Json to_json(const SystemConfig& cfg) {
  Json j;
  j["sources"] = Json::array();
  for (const auto& s : cfg.sources) j["sources"].push_back(Json{{"rate", s.rate}, {"service", to_json(s.service)}});
  j["idling"] = to_json(cfg.idling);
  j["wakeup"] = to_json(cfg.wakeup);
  j["setup"] = to_json(cfg.setup);
  j["power"] = to_json(cfg.power);
  return j;
}

// --- game ------------------------------------------------------------------

inline GameSpec read_game(const Reader& r) {
  r.allow_keys({"services", "setup", "tau", "lambda_max", "power", "costs", "theta"});
  GameSpec g;
  const Reader services = r["services"];
  for (std::size_t i = 0; i < services.size(); ++i) g.services.push_back(read_distribution(services[i]));
  g.setup = r.has("setup") ? read_distribution(r["setup"]) : Distribution::zero();
  g.tau = r["tau"].numbers();
  g.lambda_max = r["lambda_max"].number();
  g.power = read_power(r["power"]);
  if (r.has("costs")) {
    const Reader costs = r["costs"];
    for (std::size_t i = 0; i < costs.size(); ++i) {
      costs[i].allow_keys({"a", "p"});
      g.costs.push_back({costs[i]["a"].number(), costs[i]["p"].number()});
    }
  }
  if (r.has("theta")) g.theta = r["theta"].numbers();
  r.guard([&] { g.validate(); });
  return g;
}

inline Json to_json(const GameSpec& g) {
  Json j;
  j["services"] = Json::array();
  for (const auto& d : g.services) j["services"].push_back(to_json(d));
  j["setup"] = to_json(g.setup);
  j["tau"] = g.tau;
  j["lambda_max"] = g.lambda_max;
  j["power"] = to_json(g.power);
  if (!g.costs.empty()) {
    j["costs"] = Json::array();
    for (const auto& c : g.costs) j["costs"].push_back(Json{{"a", c.a}, {"p", c.p}});
  }
  if (!g.theta.empty()) j["theta"] = g.theta;
  return j;
}

// --- reports ---------------------------------------------------------------

inline Json to_json(const MetricsReport& m) {
  auto vec = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number_to_json(x));
    return a;
  };
  Json j;
  j["method"] = to_string(m.method);
  j["theta"] = vec(m.theta);
  j["paoi"] = vec(m.paoi);
  j["aoi"] = vec(m.aoi);
  j["energy_rate"] = number_to_json(m.energy_rate);
  if (m.method == Method::simulated) {
    j["theta_se"] = vec(m.theta_se);
    j["paoi_se"] = vec(m.paoi_se);
    j["aoi_se"] = vec(m.aoi_se);
    j["energy_se"] = number_to_json(m.energy_se);
    j["theta_ci"] = vec(m.theta_ci);
    j["paoi_ci"] = vec(m.paoi_ci);
    j["aoi_ci"] = vec(m.aoi_ci);
    j["energy_ci"] = number_to_json(m.energy_ci);
  }
  return j;
}

inline double read_number_or_special(const Reader& r) {
  if (r.json().is_string()) {
    const std::string s = r.string();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  return r.number();
}

inline MetricsReport read_report(const Reader& r) {
  auto vec = [](const Reader& a) {
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(read_number_or_special(a[i]));
    return out;
  };
  MetricsReport m;
  const std::string method = r["method"].string();
  if (method != "analytic" && method != "simulated") r["method"].error("expected analytic or simulated");
  m.method = method == "analytic" ? Method::analytic : Method::simulated;
  m.theta = vec(r["theta"]);
  m.paoi = vec(r["paoi"]);
  m.aoi = vec(r["aoi"]);
  m.energy_rate = read_number_or_special(r["energy_rate"]);
  if (m.method == Method::simulated) {
    m.theta_se = vec(r["theta_se"]);
    m.paoi_se = vec(r["paoi_se"]);
    m.aoi_se = vec(r["aoi_se"]);
    m.energy_se = read_number_or_special(r["energy_se"]);
    m.theta_ci = vec(r["theta_ci"]);
    m.paoi_ci = vec(r["paoi_ci"]);
    m.aoi_ci = vec(r["aoi_ci"]);
    m.energy_ci = read_number_or_special(r["energy_ci"]);
  }
  return m;
}

// --- documents and sweeps --------------------------------------------------

inline Json parse_document(const std::string& text, const std::string& origin = "config") {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::config, origin + ": invalid JSON: " + e.what());
  }
}

inline Json load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str(), path);
}

/// One `--sweep FIELD=START:STOP:STEP` axis. FIELD is a dotted path whose
/// numeric components index arrays, e.g. "sources.0.rate".
struct SweepAxis {
  std::string field;
  double start = 0.0, stop = 0.0, step = 0.0;

  std::vector<double> values() const {
    std::vector<double> out;
    const double span = stop - start;
    const long count = static_cast<long>(std::floor(span / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
};

inline SweepAxis parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorKind::config, "sweep '" + text + "': expected FIELD=START:STOP:STEP");
  SweepAxis axis;
  axis.field = text.substr(0, eq);
  std::vector<double> parts;
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ':')) {
    double v = 0.0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      fail(ErrorKind::config, "sweep '" + text + "': '" + item + "' is not a number");
    parts.push_back(v);
  }
  if (parts.size() != 3) fail(ErrorKind::config, "sweep '" + text + "': expected FIELD=START:STOP:STEP");
  axis.start = parts[0];
  axis.stop = parts[1];
  axis.step = parts[2];
  if (!(axis.step > 0.0) || !(axis.stop >= axis.start) || !std::isfinite(axis.stop))
    fail(ErrorKind::config, "sweep '" + text + "': range is empty or step is not positive");
  return axis;
}

/// Writes `value` into the existing numeric field named by a dotted path.
inline void set_field(Json& doc, const std::string& field, double value) {
  Json* node = &doc;
  std::string walked;
  std::stringstream ss(field);
  std::string part;
  while (std::getline(ss, part, '.')) {
    walked += (walked.empty() ? "" : ".") + part;
    if (node->is_object()) {
      if (!node->contains(part)) fail(ErrorKind::config, "sweep field '" + walked + "' does not exist");
      node = &(*node)[part];
    } else if (node->is_array()) {
      std::size_t idx = 0;
      auto res = std::from_chars(part.data(), part.data() + part.size(), idx);
      if (res.ec != std::errc() || res.ptr != part.data() + part.size() || idx >= node->size())
        fail(ErrorKind::config, "sweep field '" + walked + "' is not a valid array index");
      node = &(*node)[idx];
    } else {
      fail(ErrorKind::config, "sweep field '" + walked + "' does not exist");
    }
  }
  if (!node->is_number() && !(node->is_string() && node->get<std::string>() == "inf"))
    fail(ErrorKind::config, "sweep field '" + field + "' is not numeric");
  if (node->is_number_integer() && std::floor(value) == value)
    *node = static_cast<long>(value);
  else
    *node = value;
}

/// Cartesian product of the axes, first axis slowest.
inline std::vector<std::vector<double>> sweep_points(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<double>> out{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out)
      for (double v : axis.values()) {
        next.push_back(prefix);
        next.back().push_back(v);
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace sleepwake::io
