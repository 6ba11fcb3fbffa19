#pragma once

// Forward-mode differentiation of residual functions: dual numbers when the
// residual has dual instantiations, finite differences otherwise.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "nlkit/core.hpp"

namespace nlkit {

struct DiffMode {
  enum class Kind { DualForward, FiniteDiffForward, FiniteDiffCentral };

  Kind kind = Kind::DualForward;
  /// Explicit FD step; unset means the scaled default step.
  std::optional<double> h;

  static DiffMode dual() { return {Kind::DualForward, std::nullopt}; }
  static DiffMode fd_forward(std::optional<double> h = std::nullopt) { return {Kind::FiniteDiffForward, h}; }
  static DiffMode fd_central(std::optional<double> h = std::nullopt) { return {Kind::FiniteDiffCentral, h}; }

  [[nodiscard]] bool is_dual() const { return kind == Kind::DualForward; }

  void validate() const {
    if (h && !(*h > 0.0)) throw Error(ErrorKind::InvalidArgument, "finite-difference step must be positive");
  }
};

namespace detail {

template <typename T>
std::span<const T> cspan(const std::vector<T>& v) {
  return {v.data(), v.size()};
}
template <typename T>
std::span<T> mspan(std::vector<T>& v) {
  return {v.data(), v.size()};
}
inline std::span<const double> cspan(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " produced a non-finite value");
}

inline void check_deadline(const std::optional<Clock::time_point>& deadline) {
  if (deadline && Clock::now() >= *deadline) throw Error(ErrorKind::Timeout, "deadline exceeded during differentiation");
}

inline double fd_forward_step(const Vector& u, const Vector& v, const DiffMode& mode) {
  if (mode.h) return *mode.h;
  return std::sqrt(kEps) * std::max(1.0, inf_norm(u)) / std::max(inf_norm(v), kTiny);
}

inline double fd_central_step(const Vector& u, const Vector& v, const DiffMode& mode) {
  if (mode.h) return *mode.h;
  return std::cbrt(kEps) * std::max(1.0, inf_norm(u)) / std::max(inf_norm(v), kTiny);
}

template <typename D>
std::vector<D> promote(const Vector& x) {
  std::vector<D> out(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = D(x[i]);
  return out;
}

}  // namespace detail

/// Directional derivative J(u)·v.
inline Vector jvp(const ResidualFunction& f, const Vector& u, const Vector& p, const Vector& v,
                  const DiffMode& mode = DiffMode::dual()) {
  mode.validate();
  const auto n = u.size();
  if (v.size() != n) throw Error(ErrorKind::InvalidArgument, "jvp: direction length differs from u");
  if (!v.allFinite()) throw Error(ErrorKind::InvalidArgument, "jvp: direction is not finite");
  Vector out = Vector::Zero(n);
  if (v.isZero(0.0)) return out;

  switch (mode.kind) {
    case DiffMode::Kind::DualForward: {
      std::vector<Dual1> ud(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) ud[static_cast<std::size_t>(i)] = Dual1(u[i], {v[i]});
      const auto pd = detail::promote<Dual1>(p);
      std::vector<Dual1> fd(static_cast<std::size_t>(n));
      f(detail::cspan(ud), detail::cspan(pd), detail::mspan(fd));
      for (Eigen::Index i = 0; i < n; ++i) out[i] = fd[static_cast<std::size_t>(i)].d[0];
      break;
    }
    case DiffMode::Kind::FiniteDiffForward: {
      const double h = detail::fd_forward_step(u, v, mode);
      out = (f(Vector(u + h * v), p) - f(u, p)) / h;
      break;
    }
    case DiffMode::Kind::FiniteDiffCentral: {
      const double h = detail::fd_central_step(u, v, mode);
      out = (f(Vector(u + h * v), p) - f(Vector(u - h * v), p)) / (2.0 * h);
      break;
    }
  }
  detail::require_finite(out, "jvp");
  return out;
}

/// Dense n×n Jacobian; dual mode seeds kChunkWidth columns per sweep.
inline Matrix dense_jacobian(const ResidualFunction& f, const Vector& u, const Vector& p,
                             const DiffMode& mode = DiffMode::dual(),
                             const std::optional<Clock::time_point>& deadline = std::nullopt) {
  mode.validate();
  const auto n = u.size();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "dense_jacobian: empty input");
  Matrix J(n, n);

  if (mode.is_dual()) {
    std::vector<DualChunk> ud = detail::promote<DualChunk>(u);
    const auto pd = detail::promote<DualChunk>(p);
    std::vector<DualChunk> fd(static_cast<std::size_t>(n));
    for (Eigen::Index c0 = 0; c0 < n; c0 += kChunkWidth) {
      detail::check_deadline(deadline);
      const auto width = std::min<Eigen::Index>(kChunkWidth, n - c0);
      for (Eigen::Index k = 0; k < width; ++k) ud[static_cast<std::size_t>(c0 + k)].d[static_cast<std::size_t>(k)] = 1.0;
      f(detail::cspan(ud), detail::cspan(pd), detail::mspan(fd));
      for (Eigen::Index k = 0; k < width; ++k) {
        ud[static_cast<std::size_t>(c0 + k)].d[static_cast<std::size_t>(k)] = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) J(i, c0 + k) = fd[static_cast<std::size_t>(i)].d[static_cast<std::size_t>(k)];
      }
    }
  } else {
    const Vector f0 = f(u, p);
    const double scale = std::max(1.0, inf_norm(u));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j % 64 == 0) detail::check_deadline(deadline);
      Vector up = u;
      if (mode.kind == DiffMode::Kind::FiniteDiffForward) {
        const double h = mode.h ? *mode.h : std::sqrt(kEps) * scale;
        up[j] += h;
        J.col(j) = (f(up, p) - f0) / h;
      } else {
        const double h = mode.h ? *mode.h : std::cbrt(kEps) * scale;
        Vector um = u;
        up[j] += h;
        um[j] -= h;
        J.col(j) = (f(up, p) - f(um, p)) / (2.0 * h);
      }
    }
  }
  detail::require_finite(J, "dense_jacobian");
  return J;
}

/// d²/dε² f(u + εa) at ε = 0. Exact through nested duals when available,
/// otherwise a central second difference.
inline Vector second_directional(const ResidualFunction& f, const Vector& u, const Vector& p, const Vector& a,
                                 const DiffMode& mode = DiffMode::dual()) {
  const auto n = u.size();
  Vector out = Vector::Zero(n);
  if (a.isZero(0.0)) return out;

  if (mode.is_dual() && f.hyper_capable()) {
    std::vector<HyperDual> ud(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& x = ud[static_cast<std::size_t>(i)];
      x.val = Dual1(u[i], {a[i]});
      x.d[0] = Dual1(a[i], {0.0});
    }
    const auto pd = detail::promote<HyperDual>(p);
    std::vector<HyperDual> fd(static_cast<std::size_t>(n));
    f(detail::cspan(ud), detail::cspan(pd), detail::mspan(fd));
    for (Eigen::Index i = 0; i < n; ++i) out[i] = fd[static_cast<std::size_t>(i)].d[0].d[0];
  } else {
    const double h = mode.h ? *mode.h
                            : std::pow(kEps, 0.25) * std::max(1.0, inf_norm(u)) / std::max(inf_norm(a), kTiny);
    out = (f(Vector(u + h * a), p) - 2.0 * f(u, p) + f(Vector(u - h * a), p)) / (h * h);
  }
  detail::require_finite(out, "second_directional");
  return out;
}

/// n×p Jacobian of the residual with respect to the parameters.
inline Matrix param_jacobian(const ResidualFunction& f, const Vector& u, const Vector& p,
                             const DiffMode& mode = DiffMode::dual()) {
  mode.validate();
  const auto n = u.size();
  const auto np = p.size();
  Matrix Jp = Matrix::Zero(n, np);
  if (np == 0) return Jp;

  if (mode.is_dual()) {
    const auto ud = detail::promote<DualChunk>(u);
    std::vector<DualChunk> pd = detail::promote<DualChunk>(p);
    std::vector<DualChunk> fd(static_cast<std::size_t>(n));
    for (Eigen::Index c0 = 0; c0 < np; c0 += kChunkWidth) {
      const auto width = std::min<Eigen::Index>(kChunkWidth, np - c0);
      for (Eigen::Index k = 0; k < width; ++k) pd[static_cast<std::size_t>(c0 + k)].d[static_cast<std::size_t>(k)] = 1.0;
      f(detail::cspan(ud), detail::cspan(pd), detail::mspan(fd));
      for (Eigen::Index k = 0; k < width; ++k) {
        pd[static_cast<std::size_t>(c0 + k)].d[static_cast<std::size_t>(k)] = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) Jp(i, c0 + k) = fd[static_cast<std::size_t>(i)].d[static_cast<std::size_t>(k)];
      }
    }
  } else {
    const double scale = std::max(1.0, inf_norm(p));
    for (Eigen::Index j = 0; j < np; ++j) {
      Vector pp = p;
      Vector pm = p;
      const double h = mode.h ? *mode.h : std::cbrt(kEps) * scale;
      pp[j] += h;
      pm[j] -= h;
      Jp.col(j) = (f(u, pp) - f(u, pm)) / (2.0 * h);
    }
  }
  detail::require_finite(Jp, "param_jacobian");
  return Jp;
}

}  // namespace nlkit
