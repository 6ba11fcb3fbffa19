#pragma once

// Sensitivities of a root u*(θ) through the implicit function theorem:
// the full forward Jacobian du*/dθ and adjoint gradients of scalar losses.

#include <optional>

#include "nlkit/autodiff.hpp"
#include "nlkit/core.hpp"
#include "nlkit/jacobian.hpp"
#include "nlkit/linalg.hpp"
#include "nlkit/sparsity.hpp"

namespace nlkit {

struct SensitivityOptions {
  /// Root check: ‖f(u*, θ)‖∞ must not exceed 10·abstol.
  double abstol = 1e-8;
  /// Colored sparse ∇_u f with an iterative transposed solve.
  bool sparse = false;
  DiffMode mode = DiffMode::dual();
};

struct SensitivityResult {
  Matrix du_dtheta;  // forward: n×p
  Vector grad_theta;  // adjoint: p
  /// Max-norm residual of the linear solve(s), relative to the right-hand side.
  double solve_residual = 0.0;
};

namespace detail {

inline Problem with_params(const Problem& problem, const Vector& theta) {
  Problem p = problem;
  p.params = theta;
  return p;
}

inline void require_root(const Problem& problem, const Vector& u_star, const Vector& theta, double abstol) {
  const double r = inf_norm(problem.eval(u_star, theta));
  if (!(r <= 10.0 * abstol))
    throw Error(ErrorKind::InvalidArgument, "u_star is not a root: residual " + std::to_string(r));
}

inline JacobianMatrix state_jacobian(const Problem& problem, const Vector& u_star, const Vector& theta,
                                     const SensitivityOptions& opt) {
  Stats scratch;
  const Problem local = with_params(problem, theta);
  if (problem.analytic_jacobian && !opt.sparse) return Matrix(problem.analytic_jacobian(u_star, theta));
  JacobianEngine engine(local, opt.sparse ? JacobianStrategy::ColoredSparse : JacobianStrategy::DualDense, opt.mode,
                        scratch);
  return engine.evaluate(u_star);
}

}  // namespace detail

/// S = du*/dθ solving (∇_u f)·S = −∇_θ f with one factorization.
inline SensitivityResult ift_forward_full(const Problem& problem, const Vector& u_star, const Vector& theta,
                                          const SensitivityOptions& opt = {}) {
  detail::require_root(problem, u_star, theta, opt.abstol);
  const JacobianMatrix Ju = detail::state_jacobian(problem, u_star, theta, opt);
  const Matrix Jp = param_jacobian(problem.residual, u_star, theta, opt.mode);
  SensitivityResult r;
  r.du_dtheta.resize(u_star.size(), theta.size());
  const LinearSystem sys = Ju.is_sparse() ? Ju.system(LinearSolverChoice::gmres(0, LinearSolverChoice::Precond::ILU0), 1e-12)
                                          : Ju.system(LinearSolverChoice::lu());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const Vector rhs = -Jp.col(j);
    r.du_dtheta.col(j) = sys.solve(rhs);
    const double scale = std::max(inf_norm(rhs), kTiny);
    r.solve_residual = std::max(r.solve_residual, inf_norm(Ju.multiply(r.du_dtheta.col(j)) - rhs) / scale);
  }
  detail::require_finite(r.du_dtheta, "ift_forward");
  return r;
}

inline Matrix ift_forward(const Problem& problem, const Vector& u_star, const Vector& theta,
                          const SensitivityOptions& opt = {}) {
  return ift_forward_full(problem, u_star, theta, opt).du_dtheta;
}

/// ∂g/∂θ for a scalar loss g(u*) with gbar = ∂g/∂u*: solve (∇_u f)ᵀλ = gbar
/// once and return −(∇_θ f)ᵀλ.
inline SensitivityResult ift_adjoint_full(const Problem& problem, const Vector& u_star, const Vector& theta,
                                          const Vector& gbar, const SensitivityOptions& opt = {}) {
  if (gbar.size() != u_star.size()) throw Error(ErrorKind::InvalidArgument, "gbar length differs from u_star");
  detail::require_root(problem, u_star, theta, opt.abstol);
  const JacobianMatrix Ju = detail::state_jacobian(problem, u_star, theta, opt);
  const Matrix Jp = param_jacobian(problem.residual, u_star, theta, opt.mode);
  SensitivityResult r;
  Vector lambda;
  if (Ju.is_sparse()) {
    const CscMatrix Jt = Ju.sparse().transposed();
    std::optional<LinearOperator> pre;
    try {
      pre = Ilu0(Jt).as_operator();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroPivot) throw;
    }
    lambda = gmres(LinearOperator::from_csc(Jt), gbar, std::min(Jt.n_rows, 200), pre, 1e-12).x;
  } else {
    lambda = LuFactorization(Ju.dense()).solve_transpose(gbar);
  }
  r.solve_residual = inf_norm(Ju.transpose_multiply(lambda) - gbar) / std::max(inf_norm(gbar), kTiny);
  r.grad_theta = -(Jp.transpose() * lambda);
  detail::require_finite(r.grad_theta, "ift_adjoint");
  return r;
}

inline Vector ift_adjoint(const Problem& problem, const Vector& u_star, const Vector& theta, const Vector& gbar,
                          const SensitivityOptions& opt = {}) {
  return ift_adjoint_full(problem, u_star, theta, gbar, opt).grad_theta;
}

}  // namespace nlkit
