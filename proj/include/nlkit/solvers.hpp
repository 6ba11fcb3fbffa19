#pragma once

// Named algorithms assembled from Jacobian strategy, descent and
// globalization, plus pseudo-transient continuation, the bracketed ITP
// scalar solver and the default poly-algorithm.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlkit/core.hpp"
#include "nlkit/descent.hpp"
#include "nlkit/globalize.hpp"
#include "nlkit/jacobian.hpp"
#include "nlkit/linalg.hpp"
#include "nlkit/quasinewton.hpp"

namespace nlkit {

enum class GlobalizationKind { None, LineSearch, TrustRegion };

struct GlobalizationSpec {
  GlobalizationKind kind = GlobalizationKind::None;
  BacktrackingParams line_search;
  TrustConfig trust;

  static GlobalizationSpec none() { return {}; }
  static GlobalizationSpec backtracking(BacktrackingParams p = {}) { return {GlobalizationKind::LineSearch, p, {}}; }
  static GlobalizationSpec trust_region(RadiusScheme scheme = RadiusScheme::Simple) {
    GlobalizationSpec g;
    g.kind = GlobalizationKind::TrustRegion;
    g.trust.scheme = scheme;
    return g;
  }
};

enum class Method { Standard, PseudoTransient, Polyalgorithm };

struct AlgorithmSpec {
  std::string name = "custom";
  Method method = Method::Standard;
  JacobianStrategy jacobian = JacobianStrategy::DualDense;
  QuasiNewtonConfig quasi_newton;
  DescentSpec descent;
  GlobalizationSpec globalization;
  LinearSolverChoice linear;
  /// With MatrixFree: also materialize a sparse J each iteration so ILU(0)
  /// can precondition GMRES.
  bool concrete_jac = false;
  DiffMode diff;
  double pseudo_transient_dt0 = 1e-3;
};

/// Validates component compatibility; throws IncompatibleSpec naming the
/// violated rule.
inline const AlgorithmSpec& assemble(const AlgorithmSpec& spec) {
  auto reject = [&](const std::string& why) { throw Error(ErrorKind::IncompatibleSpec, spec.name + ": " + why); };
  spec.diff.validate();
  spec.descent.damping.validate();
  spec.globalization.line_search.validate();
  if (spec.method == Method::Polyalgorithm) return spec;
  if (spec.jacobian == JacobianStrategy::MatrixFree && spec.linear.kind != LinearSolverChoice::Kind::GMRES)
    reject("a matrix-free Jacobian requires the GMRES linear solver");
  if (spec.globalization.kind == GlobalizationKind::TrustRegion && spec.descent.kind != DescentKind::Dogleg)
    reject("trust-region globalization requires the dogleg descent");
  if (spec.descent.kind == DescentKind::Dogleg && spec.globalization.kind != GlobalizationKind::TrustRegion)
    reject("the dogleg descent needs a trust radius");
  const bool multistep = spec.descent.kind == DescentKind::Halley || spec.descent.kind == DescentKind::PotraPtak;
  if (multistep && spec.globalization.kind != GlobalizationKind::None)
    reject("Halley and Potra-Ptak steps take no globalization");
  if (spec.descent.kind == DescentKind::Halley && spec.jacobian == JacobianStrategy::MatrixFree)
    reject("Halley needs a materialized Jacobian factorization");
  if (spec.descent.kind == DescentKind::SteepestDescent && spec.jacobian == JacobianStrategy::MatrixFree)
    reject("steepest descent needs a materialized Jacobian (Jᵀ products)");
  if (spec.descent.kind == DescentKind::DampedNewton) {
    if (spec.jacobian == JacobianStrategy::MatrixFree) reject("damped Newton needs a materialized Jacobian");
    if (spec.globalization.kind != GlobalizationKind::None)
      reject("damped Newton manages its own damping; use no globalization");
  }
  if (spec.method == Method::PseudoTransient) {
    if (!(spec.pseudo_transient_dt0 > 0.0)) reject("pseudo-transient Δt0 must be positive");
    if (spec.jacobian == JacobianStrategy::MatrixFree || spec.jacobian == JacobianStrategy::QuasiNewton)
      reject("pseudo-transient continuation needs a materialized Jacobian");
  }
  if (spec.jacobian == JacobianStrategy::QuasiNewton &&
      (spec.descent.kind != DescentKind::Newton || spec.globalization.kind != GlobalizationKind::None))
    reject("quasi-Newton strategies use the Newton descent without globalization");
  return spec;
}

namespace detail {

/// Materialized Jacobian (when the strategy has one) and the linear system
/// built from it for the current iterate.
struct IterationJacobian {
  std::optional<JacobianMatrix> J;
  std::optional<LinearSystem> system;
};

inline IterationJacobian prepare_jacobian(JacobianEngine& engine, const AlgorithmSpec& spec, const Vector& u,
                                          const Vector& fu, double abstol) {
  IterationJacobian it;
  const double reltol = krylov_reltol(abstol, inf_norm(fu));
  if (spec.jacobian == JacobianStrategy::MatrixFree) {
    std::optional<LinearOperator> pre;
    if (spec.concrete_jac) {
      it.J = engine.evaluate(u);
      if (spec.linear.precond == LinearSolverChoice::Precond::ILU0 && it.J->is_sparse()) {
        try {
          pre = Ilu0(it.J->sparse()).as_operator();
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ZeroPivot) throw;
        }
      }
    }
    it.system = LinearSystem::matrix_free(engine.operator_at(u), pre, spec.linear, reltol);
    return it;
  }
  it.J = engine.evaluate(u);
  it.system = it.J->system(spec.linear, reltol);
  return it;
}

/// J·δu, via the materialized matrix when there is one.
inline Vector jacobian_times(JacobianEngine& engine, const IterationJacobian& it, const Vector& u, const Vector& v) {
  return it.J ? it.J->multiply(v) : engine.jvp(u, v);
}

}  // namespace detail

// ---- Newton family --------------------------------------------------------------------

/// Levenberg-Marquardt iteration with Marquardt scaling and optional
/// geodesic acceleration. J is re-evaluated only after accepted steps.
inline SolveResult run_damped_newton(const Problem& problem, const AlgorithmSpec& spec, const SolveOptions& options) {
  problem.validate();
  SolveContext ctx(problem, options);
  JacobianEngine engine(problem, spec.jacobian, spec.diff, ctx.stats, options.deadline);
  const DampingParams& dp = spec.descent.damping;
  auto F = [&](const Vector& x) { return ctx.residual(x); };

  Vector u = problem.u0;
  Vector fu = F(u);
  if (!fu.allFinite()) return ctx.finish(u, fu, ReturnCode::NonFinite);
  ctx.record(0, inf_norm(fu));

  double lambda = dp.lambda0;
  ReturnCode code = ReturnCode::MaxIters;
  try {
    std::optional<Matrix> J;
    for (int iter = 1; iter <= options.maxiters; ++iter) {
      if (check_convergence(fu, options.abstol)) break;
      if (ctx.timed_out()) {
        code = ReturnCode::Timeout;
        break;
      }
      if (!J) J = engine.evaluate(u).to_dense();

      std::optional<DampedSystem> sys;
      try {
        sys.emplace(*J, lambda, dp.use_cholesky);
      } catch (const Error& e) {
        if (!e.is_linear_solve_failure()) throw;
        lambda = std::min(lambda * dp.lambda_up, 1e32);
        continue;
      }
      const Vector v = sys->solve(fu);
      ++ctx.stats.nlinsolve;
      if (!v.allFinite()) {
        lambda = std::min(lambda * dp.lambda_up, 1e32);
        continue;
      }
      Vector step = v;
      if (dp.use_geodesic) {
        const Vector Jv = *J * v;
        const GeodesicResult g = geodesic_acceleration(*sys, F, u, fu, Jv, v, dp.geo_h, dp.geo_alpha);
        ++ctx.stats.nlinsolve;
        if (!g.accept) {
          lambda = std::min(lambda * dp.lambda_up, 1e32);
          continue;
        }
        step += 0.5 * g.acceleration;
      }
      const Vector u_trial = u + step;
      const Vector f_trial = F(u_trial);
      if (f_trial.allFinite() && f_trial.norm() < fu.norm()) {
        u = u_trial;
        fu = f_trial;
        lambda = std::max(lambda / dp.lambda_down, 1e-32);
        J.reset();
        ++ctx.stats.nsteps;
        ctx.record(iter, inf_norm(fu));
      } else {
        lambda = std::min(lambda * dp.lambda_up, 1e32);
      }
    }
  } catch (const Error& e) {
    code = detail::code_for(e);
  }
  return ctx.finish(u, fu, code);
}

/// Newton, steepest descent, Halley and Potra-Pták iterations with an
/// optional backtracking line search; trust-region and damped specs are
/// routed to their own drivers.
inline SolveResult run_newton_family(const Problem& problem, const AlgorithmSpec& spec, const SolveOptions& options) {
  assemble(spec);
  if (spec.globalization.kind == GlobalizationKind::TrustRegion)
    return run_trust_region(problem, spec.jacobian, spec.globalization.trust, options, spec.linear, spec.diff);
  if (spec.descent.kind == DescentKind::DampedNewton) return run_damped_newton(problem, spec, options);

  problem.validate();
  SolveContext ctx(problem, options);
  JacobianEngine engine(problem, spec.jacobian, spec.diff, ctx.stats, options.deadline);
  auto F = [&](const Vector& x) { return ctx.residual(x); };

  Vector u = problem.u0;
  Vector fu = F(u);
  if (!fu.allFinite()) return ctx.finish(u, fu, ReturnCode::NonFinite);
  ctx.record(0, inf_norm(fu));

  ReturnCode code = ReturnCode::MaxIters;
  try {
    for (int iter = 1; iter <= options.maxiters; ++iter) {
      if (check_convergence(fu, options.abstol)) break;
      if (ctx.timed_out()) {
        code = ReturnCode::Timeout;
        break;
      }
      const detail::IterationJacobian it = detail::prepare_jacobian(engine, spec, u, fu, options.abstol);

      if (spec.descent.kind == DescentKind::PotraPtak) {
        const PotraPtakResult pp = potra_ptak_step(*it.system, F, u, fu);
        ctx.stats.nlinsolve += 2;
        u = pp.u_next;
        fu = pp.f_y.allFinite() ? F(u) : pp.f_y;
      } else {
        Vector du;
        switch (spec.descent.kind) {
          case DescentKind::Newton:
            du = newton_direction(*it.system, fu);
            ++ctx.stats.nlinsolve;
            break;
          case DescentKind::SteepestDescent:
            du = steepest_direction(*it.J, fu);
            break;
          case DescentKind::Halley:
            du = halley_direction(*it.system, problem.residual, u, problem.params, fu, spec.diff).direction;
            ctx.stats.nlinsolve += 2;
            ++ctx.stats.njvp;
            break;
          default:
            throw Error(ErrorKind::IncompatibleSpec, "unsupported descent for the Newton driver");
        }

        if (spec.globalization.kind == GlobalizationKind::LineSearch) {
          MeritEvaluation m;
          m.phi0 = merit(fu);
          m.dphi0 = fu.dot(detail::jacobian_times(engine, it, u, du));
          Vector f_last;
          double alpha_last = -1.0;
          m.phi = [&](double a) {
            alpha_last = a;
            f_last = F(Vector(u + a * du));
            return f_last.allFinite() ? merit(f_last) : std::numeric_limits<double>::infinity();
          };
          const LineSearchOutcome ls = backtracking_search(m, spec.globalization.line_search);
          if (!ls.success) {
            code = ReturnCode::LineSearchFailed;
            break;
          }
          u += ls.alpha * du;
          fu = alpha_last == ls.alpha ? f_last : F(u);
        } else {
          u += du;
          fu = F(u);
        }
      }
      ++ctx.stats.nsteps;
      if (!u.allFinite() || !fu.allFinite()) {
        code = ReturnCode::NonFinite;
        break;
      }
      ctx.record(iter, inf_norm(fu));
    }
  } catch (const Error& e) {
    code = detail::code_for(e);
  }
  return ctx.finish(u, fu, code);
}

// ---- pseudo-transient continuation ------------------------------------------------------

/// Damped Newton on (J + I/Δt)δu = −f with switched evolution relaxation
/// of Δt (ratio of successive L2 residual norms, clamped to [1e-4, 1e4]).
inline SolveResult run_pseudo_transient(const Problem& problem, const AlgorithmSpec& spec, const SolveOptions& options,
                                        double dt0) {
  if (!(dt0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "pseudo-transient Δt0 must be positive");
  problem.validate();
  SolveContext ctx(problem, options);
  JacobianEngine engine(problem, spec.jacobian == JacobianStrategy::MatrixFree ? JacobianStrategy::DualDense : spec.jacobian,
                        spec.diff, ctx.stats, options.deadline);

  Vector u = problem.u0;
  Vector fu = ctx.residual(u);
  if (!fu.allFinite()) return ctx.finish(u, fu, ReturnCode::NonFinite);
  ctx.record(0, inf_norm(fu));

  double dt = dt0;
  ReturnCode code = ReturnCode::MaxIters;
  try {
    for (int iter = 1; iter <= options.maxiters; ++iter) {
      if (check_convergence(fu, options.abstol)) break;
      if (ctx.timed_out()) {
        code = ReturnCode::Timeout;
        break;
      }
      const JacobianMatrix J = engine.evaluate(u);
      const LinearSystem sys = J.shifted(1.0 / dt).system(spec.linear, krylov_reltol(options.abstol, inf_norm(fu)));
      const Vector du = newton_direction(sys, fu);
      ++ctx.stats.nlinsolve;
      const double prev = fu.norm();
      u += du;
      fu = ctx.residual(u);
      ++ctx.stats.nsteps;
      if (!fu.allFinite()) {
        code = ReturnCode::NonFinite;
        break;
      }
      ctx.record(iter, inf_norm(fu));
      const double now = fu.norm();
      const double ratio = now > 0.0 ? prev / now : 1e4;
      dt *= std::clamp(ratio, 1e-4, 1e4);
    }
  } catch (const Error& e) {
    code = detail::code_for(e);
  }
  return ctx.finish(u, fu, code);
}

// ---- bracketed scalar root -------------------------------------------------------------

struct ItpResult {
  double root = 0.0;
  double f_root = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int iterations = 0;
};

/// Interpolate-truncate-project root finder on a sign-changing bracket.
inline ItpResult solve_bracketed_itp(const std::function<double(double)>& f, double a, double b, double abstol = 1e-12,
                                     int maxiters = 1000) {
  if (!(a < b)) throw Error(ErrorKind::InvalidBracket, "bracket needs a < b");
  double fa = f(a);
  double fb = f(b);
  ItpResult r;
  if (fa == 0.0 || fb == 0.0) {
    r.root = fa == 0.0 ? a : b;
    r.lo = r.hi = r.root;
    return r;
  }
  if (!(fa * fb < 0.0)) throw Error(ErrorKind::InvalidBracket, "f(a) and f(b) must have opposite signs");

  const double kappa1 = 0.2 / (b - a);
  const double kappa2 = 2.0;
  const int n0 = 10;
  const double eps = abstol;
  const int n_half = std::max(0, static_cast<int>(std::ceil(std::log2((b - a) / (2.0 * eps)))));
  const int n_max = n_half + n0;

  double lo = a;
  double hi = b;
  double flo = fa;
  double fhi = fb;
  int j = 0;
  while (hi - lo > 2.0 * eps && j < maxiters) {
    const double mid = 0.5 * (lo + hi);
    const double rad = eps * std::pow(2.0, n_max - j) - 0.5 * (hi - lo);
    const double delta = kappa1 * std::pow(hi - lo, kappa2);
    // Interpolation (regula falsi), truncation toward the midpoint,
    // projection into the minmax interval.
    const double xf = (fhi * lo - flo * hi) / (fhi - flo);
    const double sigma = (mid - xf) >= 0.0 ? 1.0 : -1.0;
    const double xt = delta <= std::abs(mid - xf) ? xf + sigma * delta : mid;
    const double x = std::abs(xt - mid) <= rad ? xt : mid - sigma * rad;
    const double fx = f(x);
    ++j;
    if (fx == 0.0) {
      lo = hi = x;
      flo = fhi = 0.0;
      break;
    }
    if ((fx > 0.0) == (fhi > 0.0)) {
      hi = x;
      fhi = fx;
    } else {
      lo = x;
      flo = fx;
    }
    if (std::abs(fx) <= abstol) {
      r.root = x;
      r.f_root = fx;
      r.lo = lo;
      r.hi = hi;
      r.iterations = j;
      return r;
    }
  }
  r.root = 0.5 * (lo + hi);
  r.f_root = f(r.root);
  r.lo = lo;
  r.hi = hi;
  r.iterations = j;
  return r;
}

// ---- presets ------------------------------------------------------------------------------

namespace presets {

/// Dense dual Jacobian, LU solve, full steps.
inline AlgorithmSpec newton_raphson() {
  AlgorithmSpec s;
  s.name = "newton-raphson";
  s.linear = LinearSolverChoice::lu();
  return s;
}

inline AlgorithmSpec newton_backtracking() {
  AlgorithmSpec s;
  s.name = "newton-backtracking";
  s.globalization = GlobalizationSpec::backtracking();
  return s;
}

inline AlgorithmSpec trust_region(RadiusScheme scheme = RadiusScheme::Simple) {
  AlgorithmSpec s;
  s.name = scheme == RadiusScheme::Simple ? "trust-region" : "trust-region-nw";
  s.descent = DescentSpec::dogleg();
  s.globalization = GlobalizationSpec::trust_region(scheme);
  return s;
}

inline AlgorithmSpec levenberg_marquardt(bool geodesic = true) {
  AlgorithmSpec s;
  s.name = geodesic ? "levenberg-marquardt" : "lm-no-geodesic";
  DampingParams p;
  p.use_geodesic = geodesic;
  p.use_cholesky = false;
  s.descent = DescentSpec::damped(p);
  return s;
}

inline AlgorithmSpec pseudo_transient(double dt0 = 1e-3) {
  AlgorithmSpec s;
  s.name = "pseudo-transient";
  s.method = Method::PseudoTransient;
  s.descent = DescentSpec::damped();
  s.pseudo_transient_dt0 = dt0;
  return s;
}

inline AlgorithmSpec halley() {
  AlgorithmSpec s;
  s.name = "halley";
  s.descent = DescentSpec::halley();
  return s;
}

inline AlgorithmSpec potra_ptak() {
  AlgorithmSpec s;
  s.name = "potra-ptak";
  s.descent = DescentSpec::potra_ptak();
  return s;
}

inline AlgorithmSpec quasi_newton(const std::string& name, QuasiNewtonConfig qn) {
  AlgorithmSpec s;
  s.name = name;
  s.jacobian = JacobianStrategy::QuasiNewton;
  s.quasi_newton = qn;
  return s;
}

inline AlgorithmSpec broyden() { return quasi_newton("broyden", QuasiNewtonConfig::broyden()); }
inline AlgorithmSpec modified_broyden() {
  return quasi_newton("modified-broyden", QuasiNewtonConfig::broyden(QnInit::TrueJacobian));
}
inline AlgorithmSpec lbroyden() { return quasi_newton("lbroyden", QuasiNewtonConfig::lbroyden()); }
inline AlgorithmSpec klement() { return quasi_newton("klement", QuasiNewtonConfig::klement()); }

inline AlgorithmSpec newton_krylov(LinearSolverChoice::Precond precond = LinearSolverChoice::Precond::ILU0) {
  AlgorithmSpec s;
  s.name = "newton-krylov";
  s.jacobian = JacobianStrategy::MatrixFree;
  s.linear = LinearSolverChoice::gmres(0, precond);
  s.concrete_jac = precond == LinearSolverChoice::Precond::ILU0;
  return s;
}

/// Colored sparse Jacobian; linear solves follow the selection policy.
inline AlgorithmSpec sparse_newton() {
  AlgorithmSpec s;
  s.name = "sparse-newton";
  s.jacobian = JacobianStrategy::ColoredSparse;
  return s;
}

/// Dense dual Jacobian with a dense LU solve.
inline AlgorithmSpec dense_newton() {
  AlgorithmSpec s;
  s.name = "dense-newton";
  s.linear = LinearSolverChoice::lu();
  return s;
}

inline AlgorithmSpec polyalgorithm() {
  AlgorithmSpec s;
  s.name = "polyalgorithm";
  s.method = Method::Polyalgorithm;
  return s;
}

}  // namespace presets

/// Preset names accepted by by_name(), in listing order.
inline std::vector<std::string> algorithm_names() {
  return {"newton-raphson", "newton-backtracking", "trust-region",  "trust-region-nw", "levenberg-marquardt",
          "lm-no-geodesic", "pseudo-transient",    "halley",        "potra-ptak",      "broyden",
          "modified-broyden", "lbroyden",          "klement",       "newton-krylov",   "sparse-newton",
          "dense-newton",   "polyalgorithm"};
}

inline std::optional<AlgorithmSpec> algorithm_by_name(const std::string& name) {
  using namespace presets;
  static const std::map<std::string, std::function<AlgorithmSpec()>> table = {
      {"newton-raphson", [] { return newton_raphson(); }},
      {"newton-backtracking", [] { return newton_backtracking(); }},
      {"trust-region", [] { return trust_region(); }},
      {"trust-region-nw", [] { return trust_region(RadiusScheme::NocedalWright); }},
      {"levenberg-marquardt", [] { return levenberg_marquardt(true); }},
      {"lm-no-geodesic", [] { return levenberg_marquardt(false); }},
      {"pseudo-transient", [] { return pseudo_transient(); }},
      {"halley", [] { return halley(); }},
      {"potra-ptak", [] { return potra_ptak(); }},
      {"broyden", [] { return broyden(); }},
      {"modified-broyden", [] { return modified_broyden(); }},
      {"lbroyden", [] { return lbroyden(); }},
      {"klement", [] { return klement(); }},
      {"newton-krylov", [] { return newton_krylov(); }},
      {"sparse-newton", [] { return sparse_newton(); }},
      {"dense-newton", [] { return dense_newton(); }},
      {"polyalgorithm", [] { return polyalgorithm(); }},
  };
  const auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second();
}

// ---- dispatch and poly-algorithm ------------------------------------------------------------

inline SolveResult run_polyalgorithm(const Problem& problem, const SolveOptions& options,
                                     std::vector<std::pair<std::string, ReturnCode>>* stages = nullptr);

inline SolveResult solve(const Problem& problem, const AlgorithmSpec& spec, const SolveOptions& options = {}) {
  assemble(spec);
  switch (spec.method) {
    case Method::Polyalgorithm: return run_polyalgorithm(problem, options);
    case Method::PseudoTransient: return run_pseudo_transient(problem, spec, options, spec.pseudo_transient_dt0);
    case Method::Standard: break;
  }
  if (spec.jacobian == JacobianStrategy::QuasiNewton)
    return run_quasi_newton(problem, spec.quasi_newton, options, spec.diff);
  return run_newton_family(problem, spec, options);
}

/// Default entry point: the poly-algorithm.
inline SolveResult solve(const Problem& problem, const SolveOptions& options = {}) {
  return run_polyalgorithm(problem, options);
}

/// Stage names tried by the poly-algorithm for this problem, in order.
inline std::vector<AlgorithmSpec> polyalgorithm_stages(const Problem& problem) {
  std::vector<AlgorithmSpec> stages;
  const bool skip_qn = static_cast<bool>(problem.analytic_jacobian) || problem.size() <= 25;
  if (!skip_qn) {
    stages.push_back(presets::broyden());
    stages.push_back(presets::klement());
    stages.push_back(presets::modified_broyden());
  }
  AlgorithmSpec nr = presets::newton_raphson();
  AlgorithmSpec nrls = presets::newton_backtracking();
  AlgorithmSpec tr = presets::trust_region();
  nr.linear = nrls.linear = tr.linear = LinearSolverChoice::automatic();
  if (problem.analytic_jacobian) {
    nr.jacobian = nrls.jacobian = tr.jacobian = JacobianStrategy::Analytic;
  } else if (!problem.residual.dual_capable()) {
    nr.jacobian = nrls.jacobian = tr.jacobian = JacobianStrategy::FDDense;
    nr.diff = nrls.diff = tr.diff = DiffMode::fd_forward();
  }
  stages.push_back(nr);
  stages.push_back(nrls);
  stages.push_back(tr);
  if (!problem.residual.dual_capable())
    for (auto& s : stages) s.diff = DiffMode::fd_forward();
  return stages;
}

inline SolveResult run_polyalgorithm(const Problem& problem, const SolveOptions& options,
                                     std::vector<std::pair<std::string, ReturnCode>>* stages) {
  problem.validate();
  options.validate();
  const auto start = Clock::now();
  std::optional<SolveResult> best;
  Stats total;
  for (const AlgorithmSpec& spec : polyalgorithm_stages(problem)) {
    SolveResult r = solve(problem, spec, options);
    total += r.stats;
    if (stages) stages->emplace_back(spec.name, r.retcode);
    const bool better = !best || (std::isfinite(r.resid_norm) && !(r.resid_norm >= best->resid_norm));
    const bool timed_out = r.retcode == ReturnCode::Timeout;
    if (r.success() || better) best = std::move(r);
    if (best->success() || timed_out) break;
  }
  best->stats = total;
  best->wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  return *best;
}

}  // namespace nlkit
