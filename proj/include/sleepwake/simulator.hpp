#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "sleepwake/distribution.hpp"
#include "sleepwake/error.hpp"
#include "sleepwake/model.hpp"

namespace sleepwake {

/// Simulation budget. `cycles` and `time` include the warmup; exactly one is used.
struct Horizon {
  enum class Kind { cycles, time };
  Kind kind = Kind::cycles;
  std::uint64_t cycles = 1'000'000;
  double time = 0.0;

  static Horizon of_cycles(std::uint64_t n) { return {Kind::cycles, n, 0.0}; }
  static Horizon of_time(double t) { return {Kind::time, 0, t}; }
};

struct SimParams {
  SystemConfig config;
  Horizon horizon;
  std::uint64_t seed = 1;
  std::uint64_t warmup_cycles = 1000;
  int batches = 32;
};

enum class ServerState { busy = 0, idle = 1, sleep = 2, setup = 3 };

/// Point estimate with its batch-means standard error.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

struct SimResult {
  MetricsReport report;
  std::vector<std::uint64_t> informative;  // deliveries per source
  std::vector<std::uint64_t> services;     // service starts per class
  std::vector<Estimate> cycle_length;      // class-i regenerative cycle
  std::vector<Estimate> wait;              // informative-packet wait
  std::array<double, 4> state_fraction{};  // indexed by ServerState
  std::uint64_t wake_checks = 0;
  std::uint64_t cycles = 0;
  double total_time = 0.0;

  /// Energy rebuilt from the state fractions; equals report.energy_rate.
  double energy_from_fractions(const PowerProfile& p) const {
    return state_fraction[0] * p.busy + state_fraction[1] * p.idle + state_fraction[2] * p.sleep +
           state_fraction[3] * p.setup + static_cast<double>(wake_checks) / total_time * p.detect;
  }
};

namespace detail {

// Two-sided Student t quantile at 0.975 for the given degrees of freedom.
inline double t975(int dof) {
  static constexpr double table[] = {0,     12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                     2.201, 2.179,  2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080,
                                     2.074, 2.069,  2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042, 2.040};
  if (dof < 1) return std::numeric_limits<double>::infinity();
  if (dof < static_cast<int>(std::size(table))) return table[dof];
  if (dof <= 40) return 2.021;
  if (dof <= 60) return 2.000;
  if (dof <= 120) return 1.980;
  return 1.960;
}

struct Batch {
  double time = 0.0;
  std::array<double, 4> state_time{};
  double energy = 0.0;
  std::uint64_t wake_checks = 0;
  std::vector<double> age_area, peak_sum, wait_sum, cycle_sum;
  std::vector<std::uint64_t> peaks, services, sleeps, cycles;

  explicit Batch(std::size_t k)
      : age_area(k), peak_sum(k), wait_sum(k), cycle_sum(k), peaks(k), services(k), sleeps(k), cycles(k) {}
};

// Mean of the pooled ratio and the standard error of per-batch ratios.
template <class Num, class Den>
Estimate ratio_estimate(const std::vector<Batch>& batches, Num num, Den den) {
  double n_total = 0.0, d_total = 0.0;
  std::vector<double> values;
  for (const auto& b : batches) {
    const double n = num(b), d = den(b);
    n_total += n;
    d_total += d;
    if (d > 0.0) values.push_back(n / d);
  }
  Estimate e;
  e.mean = d_total > 0.0 ? n_total / d_total : std::numeric_limits<double>::quiet_NaN();
  if (values.size() >= 2) {
    const double m = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    e.se = std::sqrt(ss / (values.size() - 1) / values.size());
  } else {
    e.se = std::numeric_limits<double>::infinity();
  }
  return e;
}

class Engine {
 public:
  explicit Engine(const SimParams& p)
      : p_(p),
        cfg_(p.config),
        k_(cfg_.size()),
        lambda_(cfg_.total_rate()),
        gen_(p.seed),
        interarrival_(lambda_),
        last_gen_(k_, 0.0),
        integrated_to_(k_, 0.0) {
    std::vector<double> w;
    for (const auto& s : cfg_.sources) w.push_back(s.rate);
    pick_class_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }

  SimResult run() {
    const bool by_cycles = p_.horizon.kind == Horizon::Kind::cycles;
    if (by_cycles) {
      if (p_.horizon.cycles < p_.warmup_cycles + static_cast<std::uint64_t>(p_.batches))
        fail(ErrorKind::insufficient_horizon, "cycle horizon does not exceed warmup by at least one cycle per batch");
      per_batch_cycles_ = (p_.horizon.cycles - p_.warmup_cycles) / p_.batches;
    } else if (!(p_.horizon.time > 0.0)) {
      fail(ErrorKind::insufficient_horizon, "time horizon must be > 0");
    }

    next_arrival_ = interarrival_(gen_);
    state_ = ServerState::idle;
    timer_ = kNever;

    while (true) {
      const double t_next = std::min(next_arrival_, timer_);
      if (!by_cycles && measuring_ && t_next >= end_time_) {
        advance(end_time_);
        break;
      }
      if (!by_cycles && !measuring_ && t_next >= p_.horizon.time)
        fail(ErrorKind::insufficient_horizon, "time horizon ends before warmup completes");
      if (!by_cycles && measuring_) {
        while (batch_index_ + 1 < p_.batches && t_next >= batch_end_time(batch_index_)) {
          advance(batch_end_time(batch_index_));
          close_batch();
        }
      }
      advance(t_next);
      // arrivals win exact ties with the timer
      if (next_arrival_ <= timer_) {
        on_arrival();
        next_arrival_ = now_ + interarrival_(gen_);
      } else {
        const TimerKind kind = timer_kind_;
        timer_ = kNever;
        on_timer(kind);
      }
      if (by_cycles && done_) break;
    }
    return finish();
  }

 private:
  enum class TimerKind { none, service_end, hysteresis_end, vacation_end, setup_end };
  static constexpr double kNever = std::numeric_limits<double>::infinity();

  Batch& batch() { return batches_.back(); }

  double batch_end_time(int index) const {
    return start_time_ + (end_time_ - start_time_) * (index + 1) / p_.batches;
  }

  void advance(double t) {
    const double dt = t - now_;
    if (measuring_ && dt > 0.0) {
      auto& b = batch();
      b.time += dt;
      b.state_time[static_cast<int>(state_)] += dt;
    }
    now_ = t;
  }

  void integrate_age(std::size_t c) {
    if (measuring_) {
      const double a = integrated_to_[c] - last_gen_[c];
      const double z = now_ - last_gen_[c];
      batch().age_area[c] += 0.5 * (z * z - a * a);
    }
    integrated_to_[c] = now_;
  }

  void close_batch() {
    for (std::size_t c = 0; c < k_; ++c) integrate_age(c);
    auto& b = batch();
    b.energy = b.state_time[0] * cfg_.power.busy + b.state_time[1] * cfg_.power.idle + b.state_time[2] * cfg_.power.sleep +
               b.state_time[3] * cfg_.power.setup + static_cast<double>(b.wake_checks) * cfg_.power.detect;
    ++batch_index_;
    if (batch_index_ < p_.batches) batches_.emplace_back(k_);
  }

  void start_measuring() {
    measuring_ = true;
    start_time_ = now_;
    end_time_ = p_.horizon.time;
    std::fill(integrated_to_.begin(), integrated_to_.end(), now_);
    batches_.emplace_back(k_);
  }

  void start_service(std::size_t c, double generated) {
    // a service start closes the previous cycle and opens a class-c cycle
    if (!measuring_ && cycle_count_ == p_.warmup_cycles) start_measuring();
    if (measuring_ && have_prev_cycle_) {
      batch().cycle_sum[prev_class_] += now_ - prev_cycle_start_;
      ++batch().cycles[prev_class_];
    }
    if (measuring_ && p_.horizon.kind == Horizon::Kind::cycles && measured_cycles_ > 0 &&
        measured_cycles_ % per_batch_cycles_ == 0) {
      close_batch();
      if (batch_index_ == p_.batches) {
        done_ = true;
        return;
      }
    }
    have_prev_cycle_ = measuring_;
    prev_class_ = c;
    prev_cycle_start_ = now_;
    ++cycle_count_;
    if (measuring_) {
      ++measured_cycles_;
      ++batch().services[c];
      batch().wait_sum[c] += now_ - generated;
    }
    serving_class_ = c;
    serving_generated_ = generated;
    current_service_ = cfg_.sources[c].service.sample(gen_);
    state_ = ServerState::busy;
    set_timer(now_ + current_service_, TimerKind::service_end);
  }

  void set_timer(double at, TimerKind kind) {
    timer_ = at;
    timer_kind_ = kind;
  }

  void fall_asleep() {
    state_ = ServerState::sleep;
    has_buffer_ = false;
    sleep_arrivals_ = 0;
    if (measuring_) ++batch().sleeps[last_served_];
    switch (kind_of(cfg_.wakeup)) {
      case WakeupKind::n_policy: break;
      case WakeupKind::single_sleep:
        set_timer(now_ + std::get<SingleSleep>(cfg_.wakeup).w.sample(gen_), TimerKind::vacation_end);
        break;
      case WakeupKind::multiple_sleep:
        set_timer(now_ + std::get<MultipleSleep>(cfg_.wakeup).w.sample(gen_), TimerKind::vacation_end);
        break;
    }
  }

  void begin_setup() {
    state_ = ServerState::setup;
    set_timer(now_ + cfg_.setup.sample(gen_), TimerKind::setup_end);
  }

  void buffer(std::size_t c) {
    has_buffer_ = true;
    buffered_class_ = c;
    buffered_generated_ = now_;
  }

  void on_arrival() {
    switch (state_) {
      case ServerState::busy: return;  // discarded, no class needed
      case ServerState::idle: {
        timer_ = kNever;
        start_service(pick_class_(gen_), now_);
        return;
      }
      case ServerState::sleep: {
        buffer(pick_class_(gen_));
        if (kind_of(cfg_.wakeup) == WakeupKind::n_policy && ++sleep_arrivals_ == std::get<NPolicy>(cfg_.wakeup).n)
          begin_setup();
        return;
      }
      case ServerState::setup: buffer(pick_class_(gen_)); return;
    }
  }

  void after_service() {
    const std::size_t c = serving_class_;
    last_served_ = c;
    bool sleep = false;
    switch (kind_of(cfg_.idling)) {
      case IdlingKind::ht: {
        const double d = std::get<HysteresisIdling>(cfg_.idling).hysteresis[c].sample(gen_);
        state_ = ServerState::idle;
        if (std::isfinite(d)) set_timer(now_ + d, TimerKind::hysteresis_end);
        return;
      }
      case IdlingKind::bs: {
        const double th = std::get<BernoulliIdling>(cfg_.idling).theta[c];
        sleep = std::uniform_real_distribution<double>(0.0, 1.0)(gen_) < th;
        break;
      }
      case IdlingKind::cs: {
        const double b = std::get<ConditionalIdling>(cfg_.idling).b[c];
        if (b == 0.0) sleep = true;
        else if (std::isinf(b)) sleep = false;
        else sleep = current_service_ < std::exponential_distribution<double>(b)(gen_);
        break;
      }
    }
    if (sleep) fall_asleep();
    else state_ = ServerState::idle;
  }

  void on_timer(TimerKind kind) {
    switch (kind) {
      case TimerKind::service_end: {
        const std::size_t c = serving_class_;
        integrate_age(c);
        if (measuring_) {
          batch().peak_sum[c] += now_ - last_gen_[c];
          ++batch().peaks[c];
        }
        last_gen_[c] = serving_generated_;
        after_service();
        return;
      }
      case TimerKind::hysteresis_end: fall_asleep(); return;
      case TimerKind::vacation_end: {
        if (kind_of(cfg_.wakeup) == WakeupKind::multiple_sleep) {
          if (measuring_) ++batch().wake_checks;
          if (!has_buffer_) {
            set_timer(now_ + std::get<MultipleSleep>(cfg_.wakeup).w.sample(gen_), TimerKind::vacation_end);
            return;
          }
        }
        begin_setup();
        return;
      }
      case TimerKind::setup_end: {
        if (has_buffer_) {
          has_buffer_ = false;
          start_service(buffered_class_, buffered_generated_);
        } else {
          state_ = ServerState::idle;
        }
        return;
      }
      case TimerKind::none: return;
    }
  }

  SimResult finish() {
    if (p_.horizon.kind == Horizon::Kind::time) close_batch();
    SimResult r;
    r.report.method = Method::simulated;
    const double tq = t975(p_.batches - 1);

    double total = 0.0;
    std::array<double, 4> st{};
    for (const auto& b : batches_) {
      total += b.time;
      for (int s = 0; s < 4; ++s) st[s] += b.state_time[s];
      r.wake_checks += b.wake_checks;
    }
    r.total_time = total;
    for (int s = 0; s < 4; ++s) r.state_fraction[s] = st[s] / total;

    const auto energy = ratio_estimate(batches_, [](const Batch& b) { return b.energy; }, [](const Batch& b) { return b.time; });
    r.report.energy_rate = energy.mean;
    r.report.energy_se = energy.se;
    r.report.energy_ci = tq * energy.se;

    for (std::size_t c = 0; c < k_; ++c) {
      const auto aoi = ratio_estimate(batches_, [c](const Batch& b) { return b.age_area[c]; }, [](const Batch& b) { return b.time; });
      const auto paoi = ratio_estimate(batches_, [c](const Batch& b) { return b.peak_sum[c]; },
                                       [c](const Batch& b) { return static_cast<double>(b.peaks[c]); });
      const auto theta = ratio_estimate(batches_, [c](const Batch& b) { return static_cast<double>(b.sleeps[c]); },
                                        [c](const Batch& b) { return static_cast<double>(b.services[c]); });
      r.report.aoi.push_back(aoi.mean);
      r.report.aoi_se.push_back(aoi.se);
      r.report.aoi_ci.push_back(tq * aoi.se);
      r.report.paoi.push_back(paoi.mean);
      r.report.paoi_se.push_back(paoi.se);
      r.report.paoi_ci.push_back(tq * paoi.se);
      r.report.theta.push_back(theta.mean);
      r.report.theta_se.push_back(theta.se);
      r.report.theta_ci.push_back(tq * theta.se);
      r.cycle_length.push_back(ratio_estimate(batches_, [c](const Batch& b) { return b.cycle_sum[c]; },
                                              [c](const Batch& b) { return static_cast<double>(b.cycles[c]); }));
      r.wait.push_back(ratio_estimate(batches_, [c](const Batch& b) { return b.wait_sum[c]; },
                                      [c](const Batch& b) { return static_cast<double>(b.services[c]); }));
      std::uint64_t peaks = 0, services = 0;
      for (const auto& b : batches_) {
        peaks += b.peaks[c];
        services += b.services[c];
      }
      r.informative.push_back(peaks);
      r.services.push_back(services);
    }
    r.cycles = measured_cycles_;
    return r;
  }

  const SimParams& p_;
  const SystemConfig& cfg_;
  std::size_t k_;
  double lambda_;
  std::mt19937_64 gen_;
  std::exponential_distribution<double> interarrival_;
  std::discrete_distribution<std::size_t> pick_class_;

  double now_ = 0.0;
  double next_arrival_ = 0.0;
  double timer_ = kNever;
  TimerKind timer_kind_ = TimerKind::none;
  ServerState state_ = ServerState::idle;

  std::size_t serving_class_ = 0;
  double serving_generated_ = 0.0;
  double current_service_ = 0.0;
  std::size_t last_served_ = 0;

  bool has_buffer_ = false;
  std::size_t buffered_class_ = 0;
  double buffered_generated_ = 0.0;
  long sleep_arrivals_ = 0;

  std::vector<double> last_gen_;
  std::vector<double> integrated_to_;

  bool measuring_ = false;
  bool done_ = false;
  double start_time_ = 0.0;
  double end_time_ = 0.0;
  std::uint64_t cycle_count_ = 0;
  std::uint64_t measured_cycles_ = 0;
  std::uint64_t per_batch_cycles_ = 0;
  int batch_index_ = 0;
  std::vector<Batch> batches_;

  bool have_prev_cycle_ = false;
  std::size_t prev_class_ = 0;
  double prev_cycle_start_ = 0.0;
};

}  // namespace detail

/// Event-driven run of the sleep-wake server. Deterministic in `params`.
inline SimResult simulate(const SimParams& params) {
  params.config.validate();
  if (params.batches < 2) fail(ErrorKind::config, "at least two batches are required");
  detail::Engine engine(params);
  return engine.run();
}

}  // namespace sleepwake
