#pragma once

// Forward-mode dual numbers with a fixed number of partials.
//
// Dual<T, W> carries a value and W directional derivatives. T may itself be a
// Dual, which gives exact second directional derivatives through nesting.

#include <array>
#include <cmath>
#include <ostream>
#include <type_traits>

namespace nlkit {

template <typename T, int W>
struct Dual {
  static_assert(W >= 1, "Dual needs at least one partial");

  T val{};
  std::array<T, W> d{};

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v) {}  // NOLINT(google-explicit-constructor)
  template <typename U = T, typename = std::enable_if_t<!std::is_same_v<U, double>>>
  constexpr Dual(const T& v) : val(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(const T& v, const std::array<T, W>& partials) : val(v), d(partials) {}

  static constexpr int width = W;
};

template <typename>
struct is_dual : std::false_type {};
template <typename T, int W>
struct is_dual<Dual<T, W>> : std::true_type {};
template <typename T>
inline constexpr bool is_dual_v = is_dual<T>::value;

/// Innermost real value of a (possibly nested) dual.
constexpr double value_of(double x) { return x; }
template <typename T, int W>
constexpr double value_of(const Dual<T, W>& x) {
  return value_of(x.val);
}

namespace detail {

// Builds a dual from a value and a scaling of the input partials:
// result.d[k] = scale * x.d[k]. This is the chain rule for unary functions.
template <typename T, int W>
constexpr Dual<T, W> chain(const T& value, const T& scale, const Dual<T, W>& x) {
  Dual<T, W> r;
  r.val = value;
  for (int k = 0; k < W; ++k) r.d[k] = scale * x.d[k];
  return r;
}

}  // namespace detail

// ---- arithmetic -------------------------------------------------------------

template <typename T, int W>
constexpr Dual<T, W> operator+(const Dual<T, W>& a) {
  return a;
}

template <typename T, int W>
constexpr Dual<T, W> operator-(const Dual<T, W>& a) {
  Dual<T, W> r;
  r.val = -a.val;
  for (int k = 0; k < W; ++k) r.d[k] = -a.d[k];
  return r;
}

template <typename T, int W>
constexpr Dual<T, W> operator+(const Dual<T, W>& a, const Dual<T, W>& b) {
  Dual<T, W> r;
  r.val = a.val + b.val;
  for (int k = 0; k < W; ++k) r.d[k] = a.d[k] + b.d[k];
  return r;
}

template <typename T, int W>
constexpr Dual<T, W> operator-(const Dual<T, W>& a, const Dual<T, W>& b) {
  Dual<T, W> r;
  r.val = a.val - b.val;
  for (int k = 0; k < W; ++k) r.d[k] = a.d[k] - b.d[k];
  return r;
}

template <typename T, int W>
constexpr Dual<T, W> operator*(const Dual<T, W>& a, const Dual<T, W>& b) {
  Dual<T, W> r;
  r.val = a.val * b.val;
  for (int k = 0; k < W; ++k) r.d[k] = a.val * b.d[k] + b.val * a.d[k];
  return r;
}

template <typename T, int W>
constexpr Dual<T, W> operator/(const Dual<T, W>& a, const Dual<T, W>& b) {
  Dual<T, W> r;
  r.val = a.val / b.val;
  const T inv = T(1.0) / b.val;
  for (int k = 0; k < W; ++k) r.d[k] = (a.d[k] - r.val * b.d[k]) * inv;
  return r;
}

template <typename T, int W>
constexpr Dual<T, W> operator+(const Dual<T, W>& a, double b) {
  Dual<T, W> r = a;
  r.val = a.val + b;
  return r;
}
template <typename T, int W>
constexpr Dual<T, W> operator+(double a, const Dual<T, W>& b) {
  return b + a;
}
template <typename T, int W>
constexpr Dual<T, W> operator-(const Dual<T, W>& a, double b) {
  Dual<T, W> r = a;
  r.val = a.val - b;
  return r;
}
template <typename T, int W>
constexpr Dual<T, W> operator-(double a, const Dual<T, W>& b) {
  Dual<T, W> r = -b;
  r.val = a - b.val;
  return r;
}
template <typename T, int W>
constexpr Dual<T, W> operator*(const Dual<T, W>& a, double b) {
  Dual<T, W> r;
  r.val = a.val * b;
  for (int k = 0; k < W; ++k) r.d[k] = a.d[k] * b;
  return r;
}
template <typename T, int W>
constexpr Dual<T, W> operator*(double a, const Dual<T, W>& b) {
  return b * a;
}
template <typename T, int W>
constexpr Dual<T, W> operator/(const Dual<T, W>& a, double b) {
  return a * (1.0 / b);
}
template <typename T, int W>
constexpr Dual<T, W> operator/(double a, const Dual<T, W>& b) {
  const T v = T(a) / b.val;
  return detail::chain(v, -v / b.val, b);
}

template <typename T, int W, typename U>
constexpr Dual<T, W>& operator+=(Dual<T, W>& a, const U& b) {
  return a = a + b;
}
template <typename T, int W, typename U>
constexpr Dual<T, W>& operator-=(Dual<T, W>& a, const U& b) {
  return a = a - b;
}
template <typename T, int W, typename U>
constexpr Dual<T, W>& operator*=(Dual<T, W>& a, const U& b) {
  return a = a * b;
}
template <typename T, int W, typename U>
constexpr Dual<T, W>& operator/=(Dual<T, W>& a, const U& b) {
  return a = a / b;
}

// ---- comparisons act on the value only ---------------------------------------

#define NLKIT_DUAL_COMPARE(op)                                                        \
  template <typename T, int W>                                                        \
  constexpr bool operator op(const Dual<T, W>& a, const Dual<T, W>& b) {              \
    return value_of(a) op value_of(b);                                                \
  }                                                                                   \
  template <typename T, int W>                                                        \
  constexpr bool operator op(const Dual<T, W>& a, double b) {                         \
    return value_of(a) op b;                                                          \
  }                                                                                   \
  template <typename T, int W>                                                        \
  constexpr bool operator op(double a, const Dual<T, W>& b) {                         \
    return a op value_of(b);                                                          \
  }
NLKIT_DUAL_COMPARE(<)
NLKIT_DUAL_COMPARE(<=)
NLKIT_DUAL_COMPARE(>)
NLKIT_DUAL_COMPARE(>=)
NLKIT_DUAL_COMPARE(==)
NLKIT_DUAL_COMPARE(!=)
#undef NLKIT_DUAL_COMPARE

// ---- elementary functions ----------------------------------------------------

template <typename T, int W>
Dual<T, W> exp(const Dual<T, W>& x) {
  using std::exp;
  const T e = exp(x.val);
  return detail::chain(e, e, x);
}

template <typename T, int W>
Dual<T, W> log(const Dual<T, W>& x) {
  using std::log;
  return detail::chain(T(log(x.val)), T(1.0) / x.val, x);
}

template <typename T, int W>
Dual<T, W> sqrt(const Dual<T, W>& x) {
  using std::sqrt;
  const T s = sqrt(x.val);
  return detail::chain(s, T(0.5) / s, x);
}

template <typename T, int W>
Dual<T, W> sin(const Dual<T, W>& x) {
  using std::cos;
  using std::sin;
  return detail::chain(T(sin(x.val)), T(cos(x.val)), x);
}

template <typename T, int W>
Dual<T, W> cos(const Dual<T, W>& x) {
  using std::cos;
  using std::sin;
  return detail::chain(T(cos(x.val)), T(-sin(x.val)), x);
}

template <typename T, int W>
Dual<T, W> tanh(const Dual<T, W>& x) {
  using std::tanh;
  const T t = tanh(x.val);
  return detail::chain(t, T(1.0) - t * t, x);
}

template <typename T, int W>
Dual<T, W> atan(const Dual<T, W>& x) {
  using std::atan;
  return detail::chain(T(atan(x.val)), T(1.0) / (T(1.0) + x.val * x.val), x);
}

// Subgradient convention at zero: sign(0) = +1.
template <typename T, int W>
Dual<T, W> abs(const Dual<T, W>& x) {
  return value_of(x) < 0.0 ? -x : x;
}

template <typename T, int W>
Dual<T, W> pow(const Dual<T, W>& x, double p) {
  using std::pow;
  if (p == 0.0) return Dual<T, W>(T(1.0));
  const T xp = pow(x.val, p);
  return detail::chain(xp, T(p) * T(pow(x.val, p - 1.0)), x);
}

template <typename T, int W>
Dual<T, W> pow(const Dual<T, W>& x, int p) {
  return pow(x, static_cast<double>(p));
}

template <typename T, int W>
Dual<T, W> pow(const Dual<T, W>& x, const Dual<T, W>& y) {
  return exp(y * log(x));
}

template <typename T, int W>
Dual<T, W> pow(double x, const Dual<T, W>& y) {
  using std::log;
  return exp(y * log(x));
}

template <typename T, int W>
std::ostream& operator<<(std::ostream& os, const Dual<T, W>& x) {
  os << x.val << " + [";
  for (int k = 0; k < W; ++k) os << (k ? ", " : "") << x.d[k];
  return os << "]ε";
}

/// Chunk width used for dense and compressed Jacobian sweeps.
inline constexpr int kChunkWidth = 8;

using Dual1 = Dual<double, 1>;
using DualChunk = Dual<double, kChunkWidth>;
/// Nested dual for second directional derivatives d²/dε² f(u + εa).
using HyperDual = Dual<Dual<double, 1>, 1>;

}  // namespace nlkit
