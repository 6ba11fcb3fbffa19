#pragma once

// Built-in benchmark problems: the classical 23-problem small-scale suite,
// generalized Rosenbrock, the elementwise quadratic and the steady 2-D
// Brusselator. Residuals are generic over the scalar type so every problem
// supports dual-number differentiation.

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlkit/core.hpp"
#include "nlkit/sparsity_pattern.hpp"

namespace nlkit {

struct ProblemDescriptor {
  std::string id;
  std::string name;
  int n = 0;
  Problem problem;
  std::optional<Vector> reference_solution;
  std::set<std::string> tags;
};

namespace problems {

template <typename S>
using In = std::span<const S>;
template <typename S>
using Out = std::span<S>;

// ---- the 23-problem suite -------------------------------------------------------------

struct GeneralizedRosenbrock {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    f[0] = 1.0 - x[0];
    for (std::size_t k = 1; k < x.size(); ++k) f[k] = 10.0 * (x[k] - x[k - 1] * x[k - 1]);
  }
};

struct PowellSingular {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    f[0] = x[0] + 10.0 * x[1];
    f[1] = std::sqrt(5.0) * (x[2] - x[3]);
    const S a = x[1] - 2.0 * x[2];
    f[2] = a * a;
    const S b = x[0] - x[3];
    f[3] = std::sqrt(10.0) * b * b;
  }
};

struct PowellBadlyScaled {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    using std::exp;
    f[0] = 10000.0 * x[0] * x[1] - 1.0;
    f[1] = exp(-x[0]) + exp(-x[1]) - 1.0001;
  }
};

struct Wood {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const S t1 = x[1] - x[0] * x[0];
    const S t2 = x[3] - x[2] * x[2];
    f[0] = -200.0 * x[0] * t1 - (1.0 - x[0]);
    f[1] = 200.0 * t1 + 20.2 * (x[1] - 1.0) + 19.8 * (x[3] - 1.0);
    f[2] = -180.0 * x[2] * t2 - (1.0 - x[2]);
    f[3] = 180.0 * t2 + 20.2 * (x[3] - 1.0) + 19.8 * (x[1] - 1.0);
  }
};

struct HelicalValley {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    using std::atan;
    using std::sqrt;
    const double tpi = 2.0 * std::numbers::pi;
    S t1 = S(value_of(x[1]) >= 0.0 ? 0.25 : -0.25);
    if (x[0] > 0.0) t1 = atan(x[1] / x[0]) / tpi;
    if (x[0] < 0.0) t1 = atan(x[1] / x[0]) / tpi + 0.5;
    const S t2 = sqrt(x[0] * x[0] + x[1] * x[1]);
    f[0] = 10.0 * (x[2] - 10.0 * t1);
    f[1] = 10.0 * (t2 - 1.0);
    f[2] = x[2];
  }
};

struct Watson {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const std::size_t n = x.size();
    for (std::size_t k = 0; k < n; ++k) f[k] = S(0.0);
    for (int i = 1; i <= 29; ++i) {
      const double ti = i / 29.0;
      S sum1(0.0);
      double tp = 1.0;
      for (std::size_t j = 1; j < n; ++j) {
        sum1 += static_cast<double>(j) * tp * x[j];
        tp *= ti;
      }
      S sum2(0.0);
      tp = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        sum2 += tp * x[j];
        tp *= ti;
      }
      const S t1 = sum1 - sum2 * sum2 - 1.0;
      const S t2 = 2.0 * ti * sum2;
      tp = 1.0 / ti;
      for (std::size_t k = 0; k < n; ++k) {
        f[k] += tp * (static_cast<double>(k) - t2) * t1;
        tp *= ti;
      }
    }
    const S t = x[1] - x[0] * x[0] - 1.0;
    f[0] += x[0] * (1.0 - 2.0 * t);
    f[1] += t;
  }
};

struct Chebyquad {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const std::size_t n = x.size();
    for (std::size_t k = 0; k < n; ++k) f[k] = S(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      S t1(1.0);
      S t2 = 2.0 * x[j] - 1.0;
      const S t = 2.0 * t2;
      for (std::size_t i = 0; i < n; ++i) {
        f[i] += t2;
        const S ti = t * t2 - t1;
        t1 = t2;
        t2 = ti;
      }
    }
    const double tk = 1.0 / static_cast<double>(n);
    int iev = -1;
    for (std::size_t k = 0; k < n; ++k) {
      f[k] = tk * f[k];
      const double kk = static_cast<double>(k + 1);
      if (iev > 0) f[k] += 1.0 / (kk * kk - 1.0);
      iev = -iev;
    }
  }
};

struct BrownAlmostLinear {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const std::size_t n = x.size();
    S sum(-(static_cast<double>(n) + 1.0));
    S prod(1.0);
    for (std::size_t j = 0; j < n; ++j) {
      sum += x[j];
      prod *= x[j];
    }
    for (std::size_t k = 0; k + 1 < n; ++k) f[k] = x[k] + sum;
    f[n - 1] = prod - 1.0;
  }
};

struct DiscreteBoundaryValue {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const std::size_t n = x.size();
    const double h = 1.0 / (static_cast<double>(n) + 1.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double tk = static_cast<double>(k + 1) * h;
      const S prev = k > 0 ? x[k - 1] : S(0.0);
      const S next = k + 1 < n ? x[k + 1] : S(0.0);
      const S c = x[k] + tk + 1.0;
      f[k] = 2.0 * x[k] - prev - next + 0.5 * h * h * c * c * c;
    }
  }
};

struct DiscreteIntegral {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const std::size_t n = x.size();
    const double h = 1.0 / (static_cast<double>(n) + 1.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double tk = static_cast<double>(k + 1) * h;
      S sum1(0.0);
      for (std::size_t j = 0; j <= k; ++j) {
        const double tj = static_cast<double>(j + 1) * h;
        const S c = x[j] + tj + 1.0;
        sum1 += tj * c * c * c;
      }
      S sum2(0.0);
      for (std::size_t j = k + 1; j < n; ++j) {
        const double tj = static_cast<double>(j + 1) * h;
        const S c = x[j] + tj + 1.0;
        sum2 += (1.0 - tj) * c * c * c;
      }
      f[k] = x[k] + 0.5 * h * ((1.0 - tk) * sum1 + tk * sum2);
    }
  }
};

struct Trigonometric {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    using std::cos;
    using std::sin;
    const std::size_t n = x.size();
    S sum(0.0);
    for (std::size_t j = 0; j < n; ++j) sum += cos(x[j]);
    for (std::size_t k = 0; k < n; ++k)
      f[k] = static_cast<double>(n) - sum + static_cast<double>(k + 1) * (1.0 - cos(x[k])) - sin(x[k]);
  }
};

struct VariablyDimensioned {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const std::size_t n = x.size();
    S sum(0.0);
    for (std::size_t j = 0; j < n; ++j) sum += static_cast<double>(j + 1) * (x[j] - 1.0);
    const S t = sum * (1.0 + 2.0 * sum * sum);
    for (std::size_t k = 0; k < n; ++k) f[k] = x[k] - 1.0 + static_cast<double>(k + 1) * t;
  }
};

struct BroydenTridiagonal {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const std::size_t n = x.size();
    for (std::size_t k = 0; k < n; ++k) {
      const S prev = k > 0 ? x[k - 1] : S(0.0);
      const S next = k + 1 < n ? x[k + 1] : S(0.0);
      f[k] = (3.0 - 2.0 * x[k]) * x[k] - prev - 2.0 * next + 1.0;
    }
  }
};

struct BroydenBanded {
  int ml = 5;
  int mu = 1;
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const int n = static_cast<int>(x.size());
    for (int k = 0; k < n; ++k) {
      S s(0.0);
      for (int j = std::max(0, k - ml); j <= std::min(n - 1, k + mu); ++j)
        if (j != k) s += x[static_cast<std::size_t>(j)] * (1.0 + x[static_cast<std::size_t>(j)]);
      const S xk = x[static_cast<std::size_t>(k)];
      f[static_cast<std::size_t>(k)] = xk * (2.0 + 5.0 * xk * xk) + 1.0 - s;
    }
  }
};

/// X² − A for a 2×2 or 3×3 upper bidiagonal A with 1e-4 on the diagonal;
/// X is stored row-major.
struct HammarlingSquareRoot {
  int m = 2;
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        S s(0.0);
        for (int k = 0; k < m; ++k)
          s += x[static_cast<std::size_t>(i * m + k)] * x[static_cast<std::size_t>(k * m + j)];
        const double a = i == j ? 1e-4 : (i == 0 && j == 1 ? 1.0 : 0.0);
        f[static_cast<std::size_t>(i * m + j)] = s - a;
      }
  }
};

struct DennisSchnabel {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    f[0] = x[0] + x[1] - 3.0;
    f[1] = x[0] * x[0] + x[1] * x[1] - 9.0;
  }
};

struct Sample18 {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    using std::exp;
    f[0] = x[0] != 0.0 ? x[1] * x[1] * (1.0 - exp(-x[0] * x[0])) / x[0] : S(0.0);
    f[1] = x[1] != 0.0 ? x[0] * (1.0 - exp(-x[1] * x[1])) / x[1] : S(0.0);
  }
};

struct Sample19 {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const S r = x[0] * x[0] + x[1] * x[1];
    f[0] = x[0] * r;
    f[1] = x[1] * r;
  }
};

struct ScalarCubic {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const S d = x[0] - 5.0;
    f[0] = x[0] * d * d;
  }
};

struct FreudensteinRoth {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const S y = x[1];
    f[0] = x[0] - 13.0 + ((5.0 - y) * y - 2.0) * y;
    f[1] = x[0] - 29.0 + ((y + 1.0) * y - 14.0) * y;
  }
};

struct Boggs {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    using std::cos;
    f[0] = x[0] * x[0] - x[1] + 1.0;
    f[1] = x[0] - cos(0.5 * std::numbers::pi * x[1]);
  }
};

struct Chandrasekhar {
  double c = 0.9;
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    const std::size_t n = x.size();
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double mui = (static_cast<double>(i) + 0.5) / nn;
      S s(0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double muj = (static_cast<double>(j) + 0.5) / nn;
        s += mui * x[j] / (mui + muj);
      }
      f[i] = x[i] - 1.0 / (1.0 - c / (2.0 * nn) * s);
    }
  }
};

struct Quadratic {
  template <typename S>
  void operator()(In<S> u, In<S> p, Out<S> f) const {
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = u[i] * u[i] - p[i];
  }
};

// ---- Brusselator ---------------------------------------------------------------------------

/// Steady 2-D Brusselator on an N×N periodic grid. State layout: all u
/// values (row-major over (i, j)) followed by all v values. params[0] is the
/// forcing amplitude inside the disc.
struct Brusselator2D {
  int N = 8;

  [[nodiscard]] double coord(int i) const { return static_cast<double>(i) / (N - 1); }
  [[nodiscard]] bool in_disc(int i, int j) const {
    const double x = coord(i) - 0.3;
    const double y = coord(j) - 0.6;
    return x * x + y * y <= 0.01;
  }

  template <typename S>
  void operator()(In<S> s, In<S> p, Out<S> f) const {
    const double alpha = 10.0 * (N - 1) * (N - 1);
    const std::size_t M = static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
    auto idx = [&](int i, int j) { return static_cast<std::size_t>(((i + N) % N) * N + ((j + N) % N)); };
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const std::size_t c = idx(i, j);
        const S& u = s[c];
        const S& v = s[M + c];
        const S lap_u = s[idx(i + 1, j)] + s[idx(i - 1, j)] + s[idx(i, j + 1)] + s[idx(i, j - 1)] - 4.0 * u;
        const S lap_v = s[M + idx(i + 1, j)] + s[M + idx(i - 1, j)] + s[M + idx(i, j + 1)] + s[M + idx(i, j - 1)] - 4.0 * v;
        const S uuv = u * u * v;
        f[c] = 1.0 + uuv - 4.4 * u + alpha * lap_u;
        if (in_disc(i, j)) f[c] += p[0];
        f[M + c] = 3.4 * u - uuv + alpha * lap_v;
      }
  }

  [[nodiscard]] Vector initial_state() const {
    const int M = N * N;
    Vector s(2 * M);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const double x = coord(i);
        const double y = coord(j);
        s[i * N + j] = 22.0 * std::pow(y * (1.0 - y), 1.5);
        s[M + i * N + j] = 27.0 * std::pow(x * (1.0 - x), 1.5);
      }
    return s;
  }

  /// Five-point stencil in each species plus the local u-v coupling.
  [[nodiscard]] SparsityPattern pattern() const {
    const int M = N * N;
    std::vector<SparsityPattern::Entry> e;
    auto idx = [&](int i, int j) { return ((i + N) % N) * N + ((j + N) % N); };
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const int c = idx(i, j);
        for (int block = 0; block < 2; ++block) {
          const int row = block * M + c;
          const int off = block * M;
          for (const int nb : {c, idx(i + 1, j), idx(i - 1, j), idx(i, j + 1), idx(i, j - 1)}) e.emplace_back(row, off + nb);
          e.emplace_back(row, (1 - block) * M + c);
        }
      }
    return {2 * M, 2 * M, std::move(e)};
  }
};

}  // namespace problems

// ---- descriptors ----------------------------------------------------------------------------

namespace detail {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

template <typename F>
ProblemDescriptor describe(std::string id, std::string name, F f, Vector u0, std::optional<Vector> ref,
                           std::set<std::string> tags, Vector params = Vector()) {
  ProblemDescriptor d;
  d.id = std::move(id);
  d.name = std::move(name);
  d.n = static_cast<int>(u0.size());
  d.problem = make_problem(std::move(f), std::move(u0), std::move(params));
  d.reference_solution = std::move(ref);
  d.tags = std::move(tags);
  return d;
}

}  // namespace detail

inline constexpr int kWatsonDim = 6;
inline constexpr int kChebyquadDim = 2;
inline constexpr int kSuiteDim = 10;

struct SuiteEntry {
  const char* slug;
  const char* name;
};

inline constexpr SuiteEntry kSuite[23] = {
    {"rosenbrock", "Rosenbrock"},
    {"powell-singular", "Powell singular"},
    {"powell-badly-scaled", "Powell badly scaled"},
    {"wood", "Wood"},
    {"helical-valley", "Helical valley"},
    {"watson", "Watson"},
    {"chebyquad", "Chebyquad"},
    {"brown-almost-linear", "Brown almost-linear"},
    {"discrete-bvp", "Discrete boundary value"},
    {"discrete-integral", "Discrete integral equation"},
    {"trigonometric", "Trigonometric"},
    {"variably-dimensioned", "Variably dimensioned"},
    {"broyden-tridiagonal", "Broyden tridiagonal"},
    {"broyden-banded", "Broyden banded"},
    {"hammarling-2x2", "Hammarling 2x2 matrix square root"},
    {"hammarling-3x3", "Hammarling 3x3 matrix square root"},
    {"dennis-schnabel", "Dennis-Schnabel 2x2"},
    {"sample-18", "Sample problem 18"},
    {"sample-19", "Sample problem 19"},
    {"scalar", "Scalar x(x-5)^2"},
    {"freudenstein-roth", "Freudenstein-Roth"},
    {"boggs", "Boggs"},
    {"chandrasekhar", "Chandrasekhar H-equation"},
};

namespace detail {

/// Stored roots for the suite; analytic where a closed form exists,
/// otherwise from a tight solve.
inline std::optional<Vector> suite_reference(int index);

}  // namespace detail

/// Problem `index` (1-based) of the 23-problem suite with its canonical start.
inline ProblemDescriptor test23(int index) {
  using namespace problems;
  using detail::vec;
  if (index < 1 || index > 23) throw Error(ErrorKind::OutOfRange, "test23 index must be in 1..23");
  const SuiteEntry& e = kSuite[index - 1];
  const std::string id = std::string("test23/") + e.slug;
  const auto ref = detail::suite_reference(index);
  const int n10 = kSuiteDim;
  auto make = [&](auto f, Vector u0, std::set<std::string> tags = {"small"}) {
    return detail::describe(id, e.name, f, std::move(u0), ref, std::move(tags));
  };
  auto linspace_start = [](int n, auto fn) {
    Vector v(n);
    for (int j = 0; j < n; ++j) v[j] = fn(j + 1, n);
    return v;
  };
  switch (index) {
    case 1: return make(GeneralizedRosenbrock{}, vec({-1.2, 1.0}));
    case 2: return make(PowellSingular{}, vec({3.0, -1.0, 0.0, 1.0}), {"small", "ill-conditioned"});
    case 3: return make(PowellBadlyScaled{}, vec({0.0, 1.0}), {"small", "ill-conditioned"});
    case 4: return make(Wood{}, vec({-3.0, -1.0, -3.0, -1.0}));
    case 5: return make(HelicalValley{}, vec({-1.0, 0.0, 0.0}));
    case 6: return make(Watson{}, Vector::Zero(kWatsonDim), {"small", "ill-conditioned"});
    case 7:
      return make(Chebyquad{}, linspace_start(kChebyquadDim, [](int j, int n) { return j / (n + 1.0); }));
    case 8: return make(BrownAlmostLinear{}, Vector::Constant(n10, 0.5));
    case 9:
    case 10: {
      Vector u0 = linspace_start(n10, [](int j, int n) {
        const double t = j / (n + 1.0);
        return t * (t - 1.0);
      });
      if (index == 9) return make(DiscreteBoundaryValue{}, u0);
      return make(DiscreteIntegral{}, u0);
    }
    case 11: return make(Trigonometric{}, Vector::Constant(n10, 1.0 / n10));
    case 12:
      return make(VariablyDimensioned{}, linspace_start(n10, [](int j, int n) { return 1.0 - static_cast<double>(j) / n; }));
    case 13: return make(BroydenTridiagonal{}, Vector::Constant(n10, -1.0));
    case 14: return make(BroydenBanded{}, Vector::Constant(n10, -1.0));
    case 15: return make(HammarlingSquareRoot{2}, vec({1.0, 0.0, 0.0, 1.0}), {"small", "ill-conditioned"});
    case 16:
      return make(HammarlingSquareRoot{3}, vec({1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0}), {"small", "ill-conditioned"});
    case 17: return make(DennisSchnabel{}, vec({1.0, 5.0}));
    case 18: return make(Sample18{}, vec({2.0, 2.0}));
    case 19: return make(Sample19{}, vec({3.0, 3.0}), {"small", "ill-conditioned"});
    case 20: return make(ScalarCubic{}, vec({1.0}));
    case 21: return make(FreudensteinRoth{}, vec({0.5, -2.0}));
    case 22: return make(Boggs{}, vec({1.0, 0.0}));
    case 23: return make(Chandrasekhar{}, Vector::Ones(n10));
    default: break;
  }
  throw Error(ErrorKind::OutOfRange, "test23 index must be in 1..23");
}

inline std::vector<ProblemDescriptor> test23_all() {
  std::vector<ProblemDescriptor> all;
  for (int k = 1; k <= 23; ++k) all.push_back(test23(k));
  return all;
}

inline ProblemDescriptor generalized_rosenbrock(int N) {
  if (N < 2) throw Error(ErrorKind::InvalidArgument, "generalized Rosenbrock needs N >= 2");
  Vector u0 = Vector::Ones(N);
  u0[0] = -1.2;
  return detail::describe("generalized_rosenbrock?N=" + std::to_string(N), "Generalized Rosenbrock",
                          problems::GeneralizedRosenbrock{}, u0, Vector(Vector::Ones(N)), {"small"});
}

/// f(u, p) = u² − p elementwise, started from all ones.
inline ProblemDescriptor quadratic(const Vector& p) {
  if (p.size() < 1 || !(p.array() > 0.0).all())
    throw Error(ErrorKind::InvalidArgument, "quadratic needs a non-empty positive p");
  return detail::describe("quadratic", "Quadratic u^2 - p", problems::Quadratic{}, Vector::Ones(p.size()),
                          Vector(p.cwiseSqrt()), {"small"}, p);
}

inline ProblemDescriptor quadratic() { return quadratic(detail::vec({2.0, 5.0})); }

inline ProblemDescriptor brusselator_2d(int N, double forcing = 5.0) {
  if (N < 3) throw Error(ErrorKind::InvalidArgument, "Brusselator grid needs N >= 3");
  problems::Brusselator2D b{N};
  ProblemDescriptor d = detail::describe("brusselator2d?N=" + std::to_string(N), "brusselator_2d", b, b.initial_state(),
                                         std::nullopt, {"sparse"}, detail::vec({forcing}));
  d.problem.known_pattern = b.pattern();
  return d;
}

/// Catalog in stable order: the suite, then the scalable and demo problems.
inline std::vector<ProblemDescriptor> list_problems() {
  std::vector<ProblemDescriptor> all = test23_all();
  all.push_back(generalized_rosenbrock(10));
  all.push_back(quadratic());
  all.push_back(brusselator_2d(8));
  all.push_back(brusselator_2d(16));
  all.push_back(brusselator_2d(32));
  return all;
}

namespace detail {

inline std::optional<int> parse_size(const std::string& id, const std::string& prefix) {
  if (id.rfind(prefix, 0) != 0) return std::nullopt;
  const std::string rest = id.substr(prefix.size());
  if (rest.empty() || rest.size() > 6 || rest.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
  return std::stoi(rest);
}

}  // namespace detail

/// Resolves a CLI-facing id such as "test23/wood", "test23/4", "quadratic",
/// "generalized_rosenbrock?N=10" or "brusselator2d?N=32".
inline std::optional<ProblemDescriptor> problem_by_id(const std::string& id) {
  if (id.rfind("test23/", 0) == 0) {
    const std::string key = id.substr(7);
    for (int k = 1; k <= 23; ++k)
      if (key == kSuite[k - 1].slug || key == std::to_string(k)) {
        ProblemDescriptor d = test23(k);
        return d;
      }
    return std::nullopt;
  }
  if (id == "quadratic") return quadratic();
  if (id == "brusselator_2d" || id == "brusselator2d") return brusselator_2d(16);
  if (auto N = detail::parse_size(id, "generalized_rosenbrock?N=")) {
    if (*N < 2) return std::nullopt;
    return generalized_rosenbrock(*N);
  }
  if (auto N = detail::parse_size(id, "brusselator2d?N=")) {
    if (*N < 3) return std::nullopt;
    return brusselator_2d(*N);
  }
  return std::nullopt;
}

/// Problem families with a size parameter, for scaling runs.
inline std::optional<ProblemDescriptor> problem_family_member(const std::string& family, int size) {
  if (family == "brusselator2d" || family == "brusselator_2d") return brusselator_2d(size);
  if (family == "generalized_rosenbrock") return generalized_rosenbrock(size);
  return std::nullopt;
}

namespace detail {

// Closed forms where one exists. The rest come from tight (1e-12) solves
// started at the canonical point and are re-verified by the test suite.
inline std::optional<Vector> suite_reference(int index) {
  switch (index) {
    case 1: return vec({1.0, 1.0});
    case 2: return Vector(Vector::Zero(4));
    case 3: return vec({1.0981593296999151e-05, 9.1061467398657143});
    case 4: return Vector(Vector::Ones(4));
    case 5: return vec({1.0, 0.0, 0.0});
    case 6: return vec({-0.015725086401458428, 1.0124348693691096, -0.23299162595673584, 1.2604300877996022, -1.5137289227222721, 0.99299643243113145});
    case 7: return vec({0.21132486540518708, 0.78867513459481287});
    case 8: return vec({0.97943030334986425, 0.97943030334986425, 0.97943030334986425, 0.97943030334986425, 0.97943030334986425, 0.97943030334986425, 0.97943030334986425, 0.97943030334986425, 0.97943030334986425, 1.2056969665013555});
    case 9: return vec({-0.043164982518764328, -0.081577156535385803, -0.11448571438052772, -0.14097357686259473, -0.15990869618198097, -0.16987720231277276, -0.16908998378120643, -0.1552495352218303, -0.12535589167893396, -0.075416533685891574});
    case 10: return vec({-0.043164982518764321, -0.081577156535385789, -0.11448571438052771, -0.14097357686259473, -0.15990869618198097, -0.16987720231277276, -0.1690899837812064, -0.15524953522183027, -0.12535589167893391, -0.075416533685891518});
    case 11: return vec({0.017821656110974818, 0.01798638222627761, 0.018157433958787696, 0.01833528505934676, 0.01852046448127348, 0.018713565371353293, 0.018915255985870176, 0.01912629305275329, 0.019347538274518683, 0.17975732607204301});
    case 12: return Vector(Vector::Ones(10));
    case 13: return vec({-0.57072213201122479, -0.68180694998427516, -0.70221007601766006, -0.7055106298950804, -0.70490615572874371, -0.70149660702985106, -0.69188932235479828, -0.66579651440585363, -0.59603510902636569, -0.41641225752869337});
    case 14: return vec({-0.42830286358725028, -0.47659642435629024, -0.5196524636468618, -0.55809932483218094, -0.5925061568294574, -0.62450368219946784, -0.62323947144059111, -0.62139384179657342, -0.62045359665908728, -0.58646927072043509});
    case 15: return vec({0.01, 50.0, 0.0, 0.01});
    case 16: return vec({0.01, 50.0, 0.0, 0.0, 0.01, 0.0, 0.0, 0.0, 0.01});
    case 17: return vec({0.0, 3.0});
    case 18: return vec({0.0, 0.0});
    case 19: return vec({0.0, 0.0});
    case 20: return vec({0.0});
    case 21: return vec({5.0, 4.0});
    case 22: return vec({0.0, 1.0});
    case 23: return vec({1.0967358168344776, 1.2334840217223595, 1.3423629130310342, 1.4356463490493692, 1.5178684864866108, 1.5914920868821099, 1.658105751392686, 1.7188372512295915, 1.7745363737392694, 1.8258694825916455});
    default: return std::nullopt;
  }
}

}  // namespace detail

}  // namespace nlkit
