#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>

#include <boost/math/special_functions/gamma.hpp>

#include "sleepwake/error.hpp"
#include "sleepwake/jet.hpp"

namespace sleepwake {

/// Nonnegative random variable with a closed-form Laplace-Stieltjes transform.
///
/// All transform values and derivatives are evaluated from per-variant closed
/// forms. Supported variants:
///   - zero                       X = 0
///   - deterministic(c)           X = c, c >= 0; c = +inf is accepted and means "never"
///   - exponential(rate)          mean 1/rate
///   - gamma(shape, scale)        mean shape*scale
///   - uniform(low, high)         0 <= low < high
///
/// Values are immutable; every member function is const and thread safe.
class Distribution {
 public:
  enum class Kind { zero, deterministic, exponential, gamma, uniform };

  /// Highest derivative/moment order served by `lst_deriv` and `moment`.
  static constexpr int max_order = 4;

  Distribution() = default;

  static Distribution zero() { return Distribution(ZeroT{}); }

  static Distribution deterministic(double value) {
    if (!(value >= 0.0)) fail(ErrorKind::config, "deterministic value must be >= 0");
    return Distribution(DeterministicT{value});
  }

  static Distribution exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) fail(ErrorKind::config, "exponential rate must be finite and > 0");
    return Distribution(ExponentialT{rate});
  }

  static Distribution gamma(double shape, double scale) {
    if (!(shape > 0.0) || !std::isfinite(shape)) fail(ErrorKind::config, "gamma shape must be finite and > 0");
    if (!(scale > 0.0) || !std::isfinite(scale)) fail(ErrorKind::config, "gamma scale must be finite and > 0");
    return Distribution(GammaT{shape, scale});
  }

  static Distribution uniform(double low, double high) {
    if (!(low >= 0.0) || !std::isfinite(high) || !(high > low))
      fail(ErrorKind::config, "uniform bounds must satisfy 0 <= low < high < inf");
    return Distribution(UniformT{low, high});
  }

  Kind kind() const noexcept { return static_cast<Kind>(rep_.index()); }

  /// Parameters in declaration order (value | rate | shape,scale | low,high).
  double param(int index) const {
    return std::visit(
        [index](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, DeterministicT>) return d.value;
          else if constexpr (std::is_same_v<T, ExponentialT>) return d.rate;
          else if constexpr (std::is_same_v<T, GammaT>) return index == 0 ? d.shape : d.scale;
          else if constexpr (std::is_same_v<T, UniformT>) return index == 0 ? d.low : d.high;
          else return 0.0;
        },
        rep_);
  }

  /// P(X = 0); the transform's limit as s -> infinity.
  double atom_at_zero() const noexcept {
    switch (kind()) {
      case Kind::zero: return 1.0;
      case Kind::deterministic: return param(0) == 0.0 ? 1.0 : 0.0;
      default: return 0.0;
    }
  }

  /// E[exp(-sX)].
  double lst(double s) const { return lst_deriv(s, 0); }

  /// k-th derivative in s of E[exp(-sX)], i.e. E[(-X)^k exp(-sX)].
  double lst_deriv(double s, int k) const {
    if (!(s >= 0.0)) fail(ErrorKind::domain, "LST argument must be >= 0");
    if (k < 0 || k > max_order) fail(ErrorKind::unsupported_order, "LST derivative order " + std::to_string(k));
    if (std::isinf(s)) return k == 0 ? atom_at_zero() : 0.0;
    return std::visit([s, k](const auto& d) { return deriv_impl(d, s, k); }, rep_);
  }

  /// Value, first and second derivative of the transform at s.
  Jet lst_jet(double s) const { return {lst_deriv(s, 0), lst_deriv(s, 1), lst_deriv(s, 2)}; }

  /// E[X^k], 1 <= k <= max_order.
  double moment(int k) const {
    if (k < 1) fail(ErrorKind::domain, "moment order must be >= 1");
    if (k > max_order) fail(ErrorKind::unsupported_order, "moment order " + std::to_string(k));
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * lst_deriv(0.0, k);
  }

  double mean() const { return moment(1); }

  double variance() const {
    const double m = mean();
    return std::max(0.0, moment(2) - m * m);
  }

  /// Coefficient of variation; defined as 0 for the zero variant.
  double cv() const {
    if (kind() == Kind::zero) return 0.0;
    const double m = mean();
    if (m == 0.0) fail(ErrorKind::division_by_zero, "cv of a zero-mean distribution");
    return std::sqrt(variance()) / m;
  }

  double cdf(double x) const {
    if (x < 0.0) return 0.0;
    return std::visit(
        [x](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, ZeroT>) return 1.0;
          else if constexpr (std::is_same_v<T, DeterministicT>) return x >= d.value ? 1.0 : 0.0;
          else if constexpr (std::is_same_v<T, ExponentialT>) return -std::expm1(-d.rate * x);
          else if constexpr (std::is_same_v<T, GammaT>) return boost::math::gamma_p(d.shape, x / d.scale);
          else return std::clamp((x - d.low) / (d.high - d.low), 0.0, 1.0);
        },
        rep_);
  }

  /// One draw using `gen`. Same generator state gives the same draw.
  template <class URBG>
  double sample(URBG& gen) const {
    return std::visit(
        [&gen](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, ZeroT>) return 0.0;
          else if constexpr (std::is_same_v<T, DeterministicT>) return d.value;
          else if constexpr (std::is_same_v<T, ExponentialT>) return std::exponential_distribution<double>(d.rate)(gen);
          else if constexpr (std::is_same_v<T, GammaT>) return std::gamma_distribution<double>(d.shape, d.scale)(gen);
          else return std::uniform_real_distribution<double>(d.low, d.high)(gen);
        },
        rep_);
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind()) {
      case Kind::zero: os << "zero"; break;
      case Kind::deterministic: os << "deterministic(" << param(0) << ")"; break;
      case Kind::exponential: os << "exponential(rate=" << param(0) << ")"; break;
      case Kind::gamma: os << "gamma(shape=" << param(0) << ", scale=" << param(1) << ")"; break;
      case Kind::uniform: os << "uniform(" << param(0) << ", " << param(1) << ")"; break;
    }
    return os.str();
  }

  friend bool operator==(const Distribution& a, const Distribution& b) { return a.rep_ == b.rep_; }

 private:
  struct ZeroT {
    friend bool operator==(const ZeroT&, const ZeroT&) = default;
  };
  struct DeterministicT {
    double value;
    friend bool operator==(const DeterministicT&, const DeterministicT&) = default;
  };
  struct ExponentialT {
    double rate;
    friend bool operator==(const ExponentialT&, const ExponentialT&) = default;
  };
  struct GammaT {
    double shape, scale;
    friend bool operator==(const GammaT&, const GammaT&) = default;
  };
  struct UniformT {
    double low, high;
    friend bool operator==(const UniformT&, const UniformT&) = default;
  };
  using Rep = std::variant<ZeroT, DeterministicT, ExponentialT, GammaT, UniformT>;

  explicit Distribution(Rep rep) : rep_(rep) {}

  static double deriv_impl(const ZeroT&, double, int k) { return k == 0 ? 1.0 : 0.0; }

  static double deriv_impl(const DeterministicT& d, double s, int k) {
    const double c = d.value;
    if (std::isinf(c)) {
      if (s > 0.0) return 0.0;
      if (k == 0) return 1.0;
      return (k % 2 == 0) ? c : -c;
    }
    return std::pow(-c, k) * std::exp(-c * s);
  }

  static double deriv_impl(const ExponentialT& d, double s, int k) {
    double fact = 1.0;
    for (int j = 2; j <= k; ++j) fact *= j;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * fact * d.rate / std::pow(d.rate + s, k + 1);
  }

  static double deriv_impl(const GammaT& d, double s, int k) {
    double rising = 1.0;
    for (int j = 0; j < k; ++j) rising *= d.shape + j;
    return std::pow(-d.scale, k) * rising * std::pow(1.0 + d.scale * s, -d.shape - k);
  }

  // int_0^w t^j e^{-st} dt
  static double truncated_gamma_integral(int j, double s, double w) {
    const double x = s * w;
    if (x <= 2.0) {
      // alternating power series in s; converges fast for x <= 2
      double sum = 0.0;
      double coef = std::pow(w, j + 1);  // (-s)^n w^{n+j+1} / n!
      for (int n = 0; n < 80; ++n) {
        const double term = coef / (n + j + 1);
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
        coef *= -x / (n + 1);
      }
      return sum;
    }
    double partial = 0.0;
    double pw = 1.0;
    double jfact = 1.0;
    for (int m = 0; m <= j; ++m) {
      if (m > 0) {
        pw *= x / m;
        jfact *= m;
      }
      partial += pw;
    }
    return jfact / std::pow(s, j + 1) * (1.0 - std::exp(-x) * partial);
  }

  static double deriv_impl(const UniformT& d, double s, int k) {
    // E[(-X)^k e^{-sX}] = (-1)^k / w * e^{-s a} sum_j C(k,j) a^{k-j} int_0^w t^j e^{-st} dt
    const double w = d.high - d.low;
    double total = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      if (j > 0) binom = binom * (k - j + 1) / j;
      total += binom * std::pow(d.low, k - j) * truncated_gamma_integral(j, s, w);
    }
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * std::exp(-s * d.low) * total / w;
  }

  Rep rep_{ZeroT{}};
};

}  // namespace sleepwake
