#pragma once

// Globalization: backtracking line search on the merit ½‖f‖², Wolfe
// predicates, and the trust-region ratio/radius machinery with its driver.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "nlkit/core.hpp"
#include "nlkit/descent.hpp"
#include "nlkit/jacobian.hpp"

namespace nlkit {

// ---- line search -------------------------------------------------------------------

struct MeritEvaluation {
  std::function<double(double)> phi;  // α ↦ ½‖f(u + α·δu)‖²
  double phi0 = 0.0;
  double dphi0 = 0.0;  // f(u)ᵀ·J·δu
};

inline double merit(const Vector& f) { return 0.5 * f.squaredNorm(); }

struct BacktrackingParams {
  double c1 = 1e-4;
  double rho = 0.5;
  double alpha0 = 1.0;
  int max_backtracks = 30;

  void validate() const {
    if (!(c1 > 0.0 && c1 < 1.0) || !(rho > 0.0 && rho < 1.0) || !(alpha0 > 0.0) || max_backtracks < 0)
      throw Error(ErrorKind::InvalidArgument, "backtracking parameters out of range");
  }
};

struct LineSearchOutcome {
  bool success = false;
  double alpha = 0.0;
  double phi_alpha = std::numeric_limits<double>::infinity();
  int backtracks = 0;
  double smallest_alpha = 0.0;  // last step length tried
};

/// Largest α in {α0·ρᵏ} meeting the Armijo condition. Non-finite merit
/// values count as failures of the condition.
inline LineSearchOutcome backtracking_search(const MeritEvaluation& m, const BacktrackingParams& params = {}) {
  params.validate();
  LineSearchOutcome out;
  if (!(m.dphi0 < 0.0) || !std::isfinite(m.phi0)) return out;
  double alpha = params.alpha0;
  for (int k = 0; k <= params.max_backtracks; ++k) {
    const double phi = m.phi(alpha);
    out.smallest_alpha = alpha;
    out.backtracks = k;
    if (std::isfinite(phi) && phi <= m.phi0 + params.c1 * alpha * m.dphi0) {
      out.success = true;
      out.alpha = alpha;
      out.phi_alpha = phi;
      return out;
    }
    alpha *= params.rho;
  }
  return out;
}

struct WolfeResult {
  bool armijo = false;
  bool curvature = false;
  bool strong = false;
};

inline WolfeResult wolfe_conditions(const MeritEvaluation& m, double alpha, double c1, double c2, double dphi_alpha) {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw Error(ErrorKind::InvalidArgument, "need 0 < c1 < c2 < 1");
  WolfeResult w;
  w.armijo = m.phi(alpha) <= m.phi0 + c1 * alpha * m.dphi0;
  w.curvature = dphi_alpha >= c2 * m.dphi0;
  w.strong = std::abs(dphi_alpha) <= c2 * std::abs(m.dphi0);
  return w;
}

// ---- trust region ---------------------------------------------------------------------

enum class RadiusScheme { Simple, NocedalWright };

constexpr const char* to_string(RadiusScheme s) {
  return s == RadiusScheme::Simple ? "Simple" : "NocedalWright";
}

struct TrustConfig {
  RadiusScheme scheme = RadiusScheme::Simple;
  double eta1 = 0.1;
  double eta2 = 0.75;
  double gamma_shrink = 0.25;
  double gamma_expand = 2.0;
  /// Unset: Δ0 = max(1, ‖u0‖∞) and Δmax = 1e3·Δ0.
  std::optional<double> delta0;
  std::optional<double> delta_max;
};

struct TrustState {
  double delta = 1.0;
  double delta_max = 1e3;
  double eta1 = 0.1;
  double eta2 = 0.75;
  double gamma_shrink = 0.25;
  double gamma_expand = 2.0;
  RadiusScheme scheme = RadiusScheme::Simple;

  static TrustState initial(const TrustConfig& c, const Vector& u0) {
    TrustState s;
    const double d0 = c.delta0.value_or(std::max(1.0, inf_norm(u0)));
    s.delta = d0;
    s.delta_max = c.delta_max.value_or(1e3 * d0);
    s.eta1 = c.eta1;
    s.eta2 = c.eta2;
    s.gamma_shrink = c.gamma_shrink;
    s.gamma_expand = c.gamma_expand;
    s.scheme = c.scheme;
    s.validate();
    return s;
  }

  void validate() const {
    if (!(delta > 0.0 && delta <= delta_max)) throw Error(ErrorKind::InvalidArgument, "trust radius out of range");
    if (!(0.0 < eta1 && eta1 < eta2 && eta2 < 1.0)) throw Error(ErrorKind::InvalidArgument, "need 0 < η1 < η2 < 1");
    if (!(gamma_shrink > 0.0 && gamma_shrink < 1.0) || !(gamma_expand > 1.0))
      throw Error(ErrorKind::InvalidArgument, "radius factors out of range");
  }
};

/// Actual over predicted reduction of ‖f‖². A degenerate prediction yields
/// −∞ so the step is rejected.
inline double tr_ratio(const Vector& f_u, const Vector& f_trial, const JacobianMatrix& J, const Vector& du) {
  const double f2 = f_u.squaredNorm();
  const double predicted = f2 - (f_u + J.multiply(du)).squaredNorm();
  if (!(predicted >= kEps * f2) || predicted == 0.0) return -std::numeric_limits<double>::infinity();
  const double actual = f2 - f_trial.squaredNorm();
  if (!std::isfinite(actual)) return -std::numeric_limits<double>::infinity();
  return actual / predicted;
}

struct TrustUpdate {
  TrustState state;
  bool accept = false;
};

inline TrustUpdate tr_update(const TrustState& s, double rho, const Vector& du) {
  TrustUpdate r{s, false};
  if (rho >= s.eta2) {
    r.accept = true;
    const bool binds = du.norm() >= 0.99 * s.delta;
    if (s.scheme == RadiusScheme::Simple || binds) r.state.delta = std::min(s.gamma_expand * s.delta, s.delta_max);
  } else if (rho >= s.eta1) {
    r.accept = true;
  } else {
    r.state.delta = s.gamma_shrink * s.delta;
  }
  return r;
}

namespace detail {

inline ReturnCode code_for(const Error& e) {
  if (e.is_linear_solve_failure()) return ReturnCode::LinearSolveFailed;
  if (e.kind() == ErrorKind::NonFinite) return ReturnCode::NonFinite;
  if (e.kind() == ErrorKind::Timeout) return ReturnCode::Timeout;
  throw e;
}

}  // namespace detail

/// Dogleg trust-region iteration.
inline SolveResult run_trust_region(const Problem& problem, JacobianStrategy jac, const TrustConfig& config,
                                    const SolveOptions& options,
                                    const LinearSolverChoice& linear = LinearSolverChoice::automatic(),
                                    const DiffMode& mode = DiffMode::dual()) {
  problem.validate();
  SolveContext ctx(problem, options);
  JacobianEngine engine(problem, jac, mode, ctx.stats, options.deadline);
  Vector u = problem.u0;
  Vector fu = ctx.residual(u);
  if (!fu.allFinite()) return ctx.finish(u, fu, ReturnCode::NonFinite);
  ctx.record(0, inf_norm(fu));

  TrustState state = TrustState::initial(config, problem.u0);
  ReturnCode code = ReturnCode::MaxIters;
  try {
    std::optional<JacobianMatrix> J;
    Vector newton;
    for (int iter = 1; iter <= options.maxiters; ++iter) {
      if (check_convergence(fu, options.abstol)) break;
      if (ctx.timed_out()) {
        code = ReturnCode::Timeout;
        break;
      }
      if (!J) {
        J = engine.evaluate(u);
        newton = newton_direction(J->system(linear, krylov_reltol(options.abstol, inf_norm(fu))), fu);
        ++ctx.stats.nlinsolve;
      }
      const Vector du = dogleg_direction(*J, fu, state.delta, newton).direction;
      const Vector u_trial = u + du;
      const Vector f_trial = ctx.residual(u_trial);
      const double rho = tr_ratio(fu, f_trial, *J, du);
      const TrustUpdate upd = tr_update(state, rho, du);
      state = upd.state;
      if (upd.accept) {
        u = u_trial;
        fu = f_trial;
        J.reset();
        ++ctx.stats.nsteps;
      }
      ctx.record(iter, inf_norm(fu));
      if (!(state.delta > 0.0)) break;
    }
  } catch (const Error& e) {
    code = detail::code_for(e);
  }
  return ctx.finish(u, fu, code);
}

}  // namespace nlkit
