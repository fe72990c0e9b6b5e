#pragma once

// Forward-mode dual numbers. Running the hand-written reverse pass on Dual
// scalars gives exact Hessian-vector products (forward-over-reverse) and
// Jacobian-vector products without a second hand derivation.

namespace taskimp {

struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // tangent

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(double value, double tangent) : v(value), d(tangent) {}

  constexpr Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
};

constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
constexpr Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }

constexpr double value_of(double x) { return x; }
constexpr double value_of(const Dual& x) { return x.v; }
constexpr double tangent_of(double) { return 0.0; }
constexpr double tangent_of(const Dual& x) { return x.d; }

}  // namespace taskimp
