#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <span>

#include "nlkit/bench.hpp"
#include "nlkit/nlkit.hpp"

namespace nlkit::testing {

template <typename S>
using In = std::span<const S>;
template <typename S>
using Out = std::span<S>;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix A(m, n);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) A(i, j++) = x;
    ++i;
  }
  return A;
}

inline Vector eval(const ResidualFunction& f, const Vector& u, const Vector& p = Vector()) {
  Vector out(u.size());
  f(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
    std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
    std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

// f(u) = [u1², u1·u2]
struct SquareAndProduct {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    f[0] = u[0] * u[0];
    f[1] = u[0] * u[1];
  }
};

struct Identity {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = u[i];
  }
};

struct ElementwiseSquare {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = u[i] * u[i];
  }
};

// f(u) = A·u + c with A, c baked in at construction.
struct Affine {
  Matrix A;
  Vector c;
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      S s(c[i]);
      for (Eigen::Index j = 0; j < A.cols(); ++j) s += A(i, j) * u[static_cast<std::size_t>(j)];
      f[static_cast<std::size_t>(i)] = s;
    }
  }
};

// Scalar polynomials used for convergence-order and Halley tests.
struct CubeMinus8 {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    f[0] = u[0] * u[0] * u[0] - 8.0;
  }
};

struct NoRealRoot {
  template <typename S>
  void operator()(In<S> u, In<S>, Out<S> f) const {
    f[0] = u[0] * u[0] + 1.0;
  }
};

// The five-variable function whose Jacobian has the pattern
// {(1,1),(2,2),(2,3),(3,4),(4,1),(4,2),(4,5),(5,5)} (1-based).
struct FiveByFive {
  template <typename S>
  void operator()(In<S> x, In<S>, Out<S> f) const {
    using std::sin;
    using std::exp;
    f[0] = x[0] * x[0];
    f[1] = x[1] * x[2] + sin(x[1]);
    f[2] = exp(x[3]);
    f[3] = x[0] * x[1] + x[4] * x[4] * x[4];
    f[4] = 3.0 * x[4] + x[4] * x[4];
  }
};

inline SparsityPattern five_by_five_pattern() {
  return {5, 5, {{0, 0}, {1, 1}, {1, 2}, {2, 3}, {3, 0}, {3, 1}, {3, 4}, {4, 4}}};
}

inline Matrix random_matrix(std::mt19937_64& rng, int m, int n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix A(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) A(i, j) = d(rng);
  return A;
}

inline Vector random_vector(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Matrix diagonally_dominant(std::mt19937_64& rng, int n) {
  Matrix A = random_matrix(rng, n, n);
  for (int i = 0; i < n; ++i) A(i, i) += static_cast<double>(n) + 1.0;
  return A;
}

}  // namespace nlkit::testing
