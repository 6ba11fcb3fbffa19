#pragma once

// Descent directions: Newton, steepest descent, dogleg, damped Newton
// (Levenberg-Marquardt) with optional geodesic acceleration, Halley and the
// two-stage Potra-Pták step.

#include <cmath>
#include <functional>
#include <optional>

#include "nlkit/autodiff.hpp"
#include "nlkit/core.hpp"
#include "nlkit/jacobian.hpp"
#include "nlkit/linalg.hpp"

namespace nlkit {

enum class DescentKind { Newton, SteepestDescent, Dogleg, DampedNewton, Halley, PotraPtak };

constexpr const char* to_string(DescentKind k) {
  switch (k) {
    case DescentKind::Newton: return "Newton";
    case DescentKind::SteepestDescent: return "SteepestDescent";
    case DescentKind::Dogleg: return "Dogleg";
    case DescentKind::DampedNewton: return "DampedNewton";
    case DescentKind::Halley: return "Halley";
    case DescentKind::PotraPtak: return "PotraPtak";
  }
  return "Unknown";
}

struct DampingParams {
  double lambda0 = 1e-3;
  double lambda_up = 2.0;
  double lambda_down = 3.0;
  bool use_geodesic = false;
  double geo_h = 0.1;
  double geo_alpha = 0.75;
  /// Cholesky on the normal matrix; false selects QR on the stacked system.
  bool use_cholesky = true;

  void validate() const {
    if (!(lambda0 > 0.0) || !(lambda_up > 1.0) || !(lambda_down > 1.0) || !(geo_h > 0.0) || !(geo_alpha >= 0.0))
      throw Error(ErrorKind::InvalidArgument, "damping parameters out of range");
  }
};

struct DescentSpec {
  DescentKind kind = DescentKind::Newton;
  DampingParams damping;

  static DescentSpec newton() { return {DescentKind::Newton, {}}; }
  static DescentSpec steepest() { return {DescentKind::SteepestDescent, {}}; }
  static DescentSpec dogleg() { return {DescentKind::Dogleg, {}}; }
  static DescentSpec damped(DampingParams p = {}) { return {DescentKind::DampedNewton, p}; }
  static DescentSpec halley() { return {DescentKind::Halley, {}}; }
  static DescentSpec potra_ptak() { return {DescentKind::PotraPtak, {}}; }
};

using ResidualCallback = std::function<Vector(const Vector&)>;

// ---- Newton / steepest descent ---------------------------------------------------

inline Vector newton_direction(const LinearSystem& J_solve, const Vector& f_u) {
  Vector d = -J_solve.solve(f_u);
  if (!d.allFinite()) throw Error(ErrorKind::Singular, "Newton direction is not finite");
  return d;
}

inline Vector steepest_direction(const JacobianMatrix& J, const Vector& f_u) { return -J.transpose_multiply(f_u); }

// ---- dogleg --------------------------------------------------------------------------

enum class DoglegBranch { Newton, ScaledSteepest, Interpolated };

struct DoglegResult {
  Vector direction;
  DoglegBranch branch = DoglegBranch::Newton;
};

/// Dogleg step for radius delta given a precomputed Newton step.
inline DoglegResult dogleg_direction(const JacobianMatrix& J, const Vector& f_u, double delta, const Vector& newton) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "dogleg: trust radius must be positive");
  const double n_norm = newton.norm();
  if (n_norm <= delta) return {newton, DoglegBranch::Newton};

  const Vector sd = steepest_direction(J, f_u);
  const double g2 = sd.squaredNorm();
  const double Jg2 = J.multiply(sd).squaredNorm();
  if (g2 == 0.0 || Jg2 == 0.0) {
    // Stationary merit: nothing better than the clipped Newton step.
    return {newton * (delta / n_norm), DoglegBranch::Interpolated};
  }
  const Vector cauchy = (g2 / Jg2) * sd;
  const double c_norm = cauchy.norm();
  if (c_norm >= delta) return {sd * (delta / std::sqrt(g2)), DoglegBranch::ScaledSteepest};

  // ‖c + τ(n − c)‖ = Δ, positive root.
  const Vector diff = newton - cauchy;
  const double a = diff.squaredNorm();
  const double b = 2.0 * cauchy.dot(diff);
  const double c = cauchy.squaredNorm() - delta * delta;
  const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
  // Cancellation-free form of (−b + disc)/(2a); c < 0 so both forms are positive.
  const double tau = b >= 0.0 ? (-2.0 * c) / (b + disc) : (-b + disc) / (2.0 * a);
  Vector d = cauchy + tau * diff;
  const double dn = d.norm();
  if (dn > delta) d *= delta / dn;
  return {d, DoglegBranch::Interpolated};
}

inline DoglegResult dogleg_direction(const JacobianMatrix& J, const Vector& f_u, double delta,
                                     const LinearSolverChoice& choice = LinearSolverChoice::automatic()) {
  return dogleg_direction(J, f_u, delta, newton_direction(J.system(choice), f_u));
}

// ---- damped Newton --------------------------------------------------------------------

/// (JᵀJ + λD) with D = diag(JᵀJ) floored at 1e-12, prepared for repeated
/// right-hand sides.
class DampedSystem {
 public:
  DampedSystem(const Matrix& J, double lambda, bool use_cholesky = true) : J_(J), use_cholesky_(use_cholesky) {
    if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidArgument, "damping must be non-negative");
    const Matrix JtJ = J.transpose() * J;
    const Vector D = JtJ.diagonal().cwiseMax(1e-12);
    if (use_cholesky) {
      Matrix A = JtJ;
      A.diagonal() += lambda * D;
      chol_.emplace(A);
    } else {
      const auto n = J.cols();
      Matrix stacked(J.rows() + n, n);
      stacked.topRows(J.rows()) = J;
      stacked.bottomRows(n) = (lambda * D).cwiseSqrt().asDiagonal();
      stacked_rows_ = stacked.rows();
      qr_.emplace(stacked);
    }
  }

  /// x with (JᵀJ + λD)x = −Jᵀr.
  [[nodiscard]] Vector solve(const Vector& r) const {
    if (use_cholesky_) return -chol_->solve(Vector(J_.transpose() * r));
    Vector rhs = Vector::Zero(stacked_rows_);
    rhs.head(r.size()) = r;
    return -qr_->solve(rhs);
  }

 private:
  Matrix J_;
  bool use_cholesky_;
  Eigen::Index stacked_rows_ = 0;
  std::optional<CholeskyFactorization> chol_;
  std::optional<QrFactorization> qr_;
};

inline Vector damped_newton_direction(const Matrix& J, const Vector& f_u, double lambda, bool use_cholesky = true) {
  return DampedSystem(J, lambda, use_cholesky).solve(f_u);
}

// ---- geodesic acceleration -----------------------------------------------------------

struct GeodesicResult {
  Vector acceleration;
  bool accept = false;
};

/// Second-order correction along the LM velocity v. F evaluates the
/// residual; Jv is J(u)·v from the same Jacobian that built `system`.
inline GeodesicResult geodesic_acceleration(const DampedSystem& system, const ResidualCallback& F, const Vector& u,
                                            const Vector& f_u, const Vector& Jv, const Vector& v, double h,
                                            double alpha_geo) {
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "geodesic step h must be positive");
  const Vector f_h = F(Vector(u + h * v));
  const Vector d = (2.0 / h) * ((f_h - f_u) / h - Jv);
  GeodesicResult r;
  r.acceleration = d.allFinite() ? system.solve(d) : Vector::Constant(u.size(), std::numeric_limits<double>::infinity());
  const double vn = v.norm();
  const double an = r.acceleration.norm();
  r.accept = std::isfinite(an) && (an == 0.0 || (vn > 0.0 && 2.0 * an / vn <= alpha_geo));
  return r;
}

// ---- Halley ---------------------------------------------------------------------------

struct HalleyResult {
  Vector direction;
  Vector a;  // Newton step
  Vector b;  // J⁻¹·(second directional derivative along a)
};

inline HalleyResult halley_direction(const LinearSystem& J_solve, const ResidualFunction& f, const Vector& u,
                                     const Vector& p, const Vector& f_u, const DiffMode& mode = DiffMode::dual()) {
  HalleyResult r;
  r.a = newton_direction(J_solve, f_u);
  const Vector Haa = second_directional(f, u, p, r.a, mode);
  r.b = J_solve.solve(Haa);
  r.direction.resize(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double ai = r.a[i];
    const double den = ai + 0.5 * r.b[i];
    const bool tiny = std::abs(den) < kEps * (std::abs(ai) + std::abs(r.b[i]) + kTiny);
    r.direction[i] = tiny ? ai : ai * ai / den;
  }
  if (!r.direction.allFinite()) throw Error(ErrorKind::Singular, "Halley direction is not finite");
  return r;
}

// ---- Potra-Pták --------------------------------------------------------------------------

struct PotraPtakResult {
  Vector u_next;
  Vector y;
  Vector f_y;
};

/// Two solves with one factorization: y = u + δ₁, u_next = y + δ₂.
inline PotraPtakResult potra_ptak_step(const LinearSystem& J_solve, const ResidualCallback& F, const Vector& u,
                                       const Vector& f_u) {
  PotraPtakResult r;
  r.y = u + newton_direction(J_solve, f_u);
  r.f_y = F(r.y);
  if (!r.f_y.allFinite()) {
    r.u_next = r.y;
    return r;
  }
  r.u_next = r.y + newton_direction(J_solve, r.f_y);
  return r;
}

}  // namespace nlkit
