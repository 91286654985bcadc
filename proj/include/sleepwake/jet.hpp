#pragma once

namespace sleepwake {

/// Second-order Taylor jet: a function value with its first and second
/// derivatives at one point. Arithmetic propagates the derivatives exactly
/// (product and quotient rules), which is how cycle moments are obtained
/// from transforms without finite differences.
struct Jet {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  static constexpr Jet constant(double c) { return {c, 0.0, 0.0}; }
  /// The identity function s -> s evaluated at s.
  static constexpr Jet variable(double s) { return {s, 1.0, 0.0}; }
};

constexpr Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
constexpr Jet operator-(Jet a, Jet b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
constexpr Jet operator-(Jet a) { return {-a.v, -a.d1, -a.d2}; }
constexpr Jet operator+(Jet a, double c) { return {a.v + c, a.d1, a.d2}; }
constexpr Jet operator+(double c, Jet a) { return a + c; }
constexpr Jet operator-(double c, Jet a) { return {c - a.v, -a.d1, -a.d2}; }
constexpr Jet operator-(Jet a, double c) { return {a.v - c, a.d1, a.d2}; }
constexpr Jet operator*(Jet a, double c) { return {a.v * c, a.d1 * c, a.d2 * c}; }
constexpr Jet operator*(double c, Jet a) { return a * c; }

constexpr Jet operator*(Jet a, Jet b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}

constexpr Jet operator/(Jet a, Jet b) {
  const double q = a.v / b.v;
  const double q1 = (a.d1 - q * b.d1) / b.v;
  const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.v;
  return {q, q1, q2};
}

constexpr Jet operator/(Jet a, double c) { return {a.v / c, a.d1 / c, a.d2 / c}; }

/// a^n for integer n >= 0 by repeated squaring.
constexpr Jet pow(Jet a, long n) {
  Jet result = Jet::constant(1.0);
  while (n > 0) {
    if (n & 1) result = result * a;
    a = a * a;
    n >>= 1;
  }
  return result;
}

}  // namespace sleepwake
