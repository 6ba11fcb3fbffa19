#pragma once

// Quasi-Newton Jacobian approximations: good Broyden kept as an inverse
// (dense or limited-memory low-rank), Klement's diagonal update, and the
// reinitialization triggers used by their driver.

#include <cmath>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "nlkit/core.hpp"
#include "nlkit/globalize.hpp"
#include "nlkit/jacobian.hpp"
#include "nlkit/linalg.hpp"

namespace nlkit {

enum class QnForm { DenseInverse, LowRank, Diagonal };
enum class QnInit { Identity, TrueJacobian };
enum class QnReinit { NotDescentDirection, Stalling };

struct QuasiNewtonConfig {
  QnForm form = QnForm::DenseInverse;
  QnInit init = QnInit::Identity;
  QnReinit reinit = QnReinit::NotDescentDirection;
  int capacity = 10;  // low-rank pair count
  int stall_window = 3;
  double stall_tol = 1e-12;

  static QuasiNewtonConfig broyden(QnInit init = QnInit::Identity) {
    return {QnForm::DenseInverse, init, QnReinit::NotDescentDirection};
  }
  static QuasiNewtonConfig lbroyden(int capacity = 10) {
    return {QnForm::LowRank, QnInit::Identity, QnReinit::NotDescentDirection, capacity};
  }
  static QuasiNewtonConfig klement() { return {QnForm::Diagonal, QnInit::Identity, QnReinit::Stalling}; }
};

struct QuasiNewtonState {
  QnForm form = QnForm::DenseInverse;
  QnInit init_rule = QnInit::Identity;
  Matrix H;  // DenseInverse: approximate J⁻¹
  double base_scale = 1.0;
  /// LowRank: H = base·I + Σ a_k b_kᵀ, oldest first.
  std::deque<std::pair<Vector, Vector>> pairs;
  int capacity = 10;
  Vector d;  // Diagonal: approximate J
  int steps_since_reinit = 0;
  /// Set when a TrueJacobian initialization hit a singular J and fell back.
  bool init_fell_back = false;
  std::string note;

  [[nodiscard]] int size() const {
    switch (form) {
      case QnForm::DenseInverse: return static_cast<int>(H.rows());
      case QnForm::Diagonal: return static_cast<int>(d.size());
      case QnForm::LowRank: return dim;
    }
    return 0;
  }

  /// Action of the inverse approximation: H·v (Diagonal: v ⊘ d).
  [[nodiscard]] Vector apply_inverse(const Vector& v) const {
    switch (form) {
      case QnForm::DenseInverse: return H * v;
      case QnForm::Diagonal: return v.cwiseQuotient(d);
      case QnForm::LowRank: {
        Vector x = base_scale * v;
        for (const auto& [a, b] : pairs) x += a * b.dot(v);
        return x;
      }
    }
    return v;
  }

  /// Hᵀ·v for the inverse-form approximations.
  [[nodiscard]] Vector apply_inverse_transpose(const Vector& v) const {
    switch (form) {
      case QnForm::DenseInverse: return H.transpose() * v;
      case QnForm::Diagonal: return v.cwiseQuotient(d);
      case QnForm::LowRank: {
        Vector x = base_scale * v;
        for (const auto& [a, b] : pairs) x += b * a.dot(v);
        return x;
      }
    }
    return v;
  }

  [[nodiscard]] Vector direction(const Vector& f) const { return -apply_inverse(f); }

  /// Dense H for the low-rank form (tests and diagnostics).
  [[nodiscard]] Matrix dense_inverse() const {
    if (form == QnForm::DenseInverse) return H;
    const int n = size();
    Matrix M(n, n);
    for (int j = 0; j < n; ++j) M.col(j) = apply_inverse(Vector::Unit(n, j));
    return M;
  }

  int dim = 0;  // LowRank dimension
};

inline QuasiNewtonState qn_identity(int n, QnForm form, int capacity = 10) {
  QuasiNewtonState s;
  s.form = form;
  s.capacity = capacity;
  s.dim = n;
  switch (form) {
    case QnForm::DenseInverse: s.H = Matrix::Identity(n, n); break;
    case QnForm::Diagonal: s.d = Vector::Ones(n); break;
    case QnForm::LowRank: s.base_scale = 1.0; break;
  }
  return s;
}

/// Initial approximation. TrueJacobian applies to the dense form only and
/// falls back to the identity when J(u0) is singular.
inline QuasiNewtonState qn_init(const QuasiNewtonConfig& config, int n, QnInit rule,
                                const std::function<Matrix()>& jacobian_at_u0 = {}) {
  if (config.capacity < 1) throw Error(ErrorKind::InvalidArgument, "low-rank capacity must be at least 1");
  QuasiNewtonState s = qn_identity(n, config.form, config.capacity);
  s.init_rule = rule;
  if (rule == QnInit::TrueJacobian && config.form == QnForm::DenseInverse) {
    if (!jacobian_at_u0) throw Error(ErrorKind::InvalidArgument, "TrueJacobian init needs a Jacobian");
    try {
      const LuFactorization lu(jacobian_at_u0());
      s.H = lu.inverse();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Singular) throw;
      s.init_fell_back = true;
      s.note = "TrueJacobian initialization singular; using identity";
    }
  }
  return s;
}

namespace detail {

/// The Sherman-Morrison pair (a, b) with H′ = H + a·bᵀ, or nothing when the
/// update is guarded out.
template <typename ApplyH, typename ApplyHt>
std::optional<std::pair<Vector, Vector>> broyden_pair(const ApplyH& Hv, const ApplyHt& Htv, const Vector& s,
                                                      const Vector& t) {
  const Vector Ht = Hv(t);
  const double denom = s.dot(Ht);
  if (!(std::abs(denom) >= 1e-12 * s.norm() * Ht.norm()) || denom == 0.0) return std::nullopt;
  Vector a = (s - Ht) / denom;
  Vector b = Htv(s);
  if (!a.allFinite() || !b.allFinite()) return std::nullopt;
  return std::make_pair(std::move(a), std::move(b));
}

}  // namespace detail

/// Good Broyden update of the inverse approximation; returns false when the
/// update was skipped by the stall guard.
inline bool broyden_update(QuasiNewtonState& st, const Vector& s, const Vector& t) {
  if (!(s.norm() > 0.0)) throw Error(ErrorKind::InvalidArgument, "broyden_update: zero step");
  if (st.form == QnForm::DenseInverse) {
    const auto pair = detail::broyden_pair([&](const Vector& v) { return Vector(st.H * v); },
                                           [&](const Vector& v) { return Vector(st.H.transpose() * v); }, s, t);
    if (!pair) return false;
    st.H.noalias() += pair->first * pair->second.transpose();
    ++st.steps_since_reinit;
    return true;
  }
  if (st.form == QnForm::LowRank) {
    // Evict first so the new pair is derived from the operator that remains.
    std::deque<std::pair<Vector, Vector>> saved;
    while (static_cast<int>(st.pairs.size()) >= st.capacity) {
      saved.push_back(st.pairs.front());
      st.pairs.pop_front();
    }
    const auto pair = detail::broyden_pair([&](const Vector& v) { return st.apply_inverse(v); },
                                           [&](const Vector& v) { return st.apply_inverse_transpose(v); }, s, t);
    if (!pair) {
      for (auto it = saved.rbegin(); it != saved.rend(); ++it) st.pairs.push_front(*it);
      return false;
    }
    st.pairs.push_back(*pair);
    ++st.steps_since_reinit;
    return true;
  }
  throw Error(ErrorKind::InvalidArgument, "broyden_update needs an inverse-form state");
}

inline bool lbroyden_update(QuasiNewtonState& st, const Vector& s, const Vector& t) { return broyden_update(st, s, t); }
inline Vector lbroyden_apply(const QuasiNewtonState& st, const Vector& v) { return st.apply_inverse(v); }

/// Diagonal secant update on coordinates with a meaningful step.
inline void klement_update(QuasiNewtonState& st, const Vector& s, const Vector& t) {
  if (st.form != QnForm::Diagonal) throw Error(ErrorKind::InvalidArgument, "klement_update needs a diagonal state");
  const double smax = inf_norm(s);
  if (!(smax > 0.0)) throw Error(ErrorKind::InvalidArgument, "klement_update: zero step");
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (std::abs(s[i]) > 1e-9 * smax) {
      const double di = t[i] / s[i];
      if (std::isfinite(di)) st.d[i] = di;
    }
    if (std::abs(st.d[i]) < 1e-12) st.d[i] = std::signbit(st.d[i]) ? -1e-12 : 1e-12;
  }
  ++st.steps_since_reinit;
}

struct ReinitInputs {
  double resid_norm = 0.0;       // ‖f(u)‖₂
  double next_resid_norm = 0.0;  // ‖f(u + δu)‖₂
  double step_inf = 0.0;         // ‖δu‖∞
  double u_inf = 0.0;            // ‖u‖∞
  /// Residual norms of accepted iterates, oldest first.
  const std::vector<double>* history = nullptr;
};

/// Whether the approximation should be reset before continuing.
inline bool reinit_check(const QuasiNewtonConfig& config, const ReinitInputs& in) {
  if (config.reinit == QnReinit::NotDescentDirection) {
    const bool no_decrease = !(in.next_resid_norm < in.resid_norm);
    const bool tiny_step = in.step_inf < kEps * in.u_inf;
    return no_decrease || tiny_step;
  }
  if (!std::isfinite(in.next_resid_norm)) return true;
  if (in.history == nullptr) return false;
  const auto& h = *in.history;
  const int w = config.stall_window;
  if (static_cast<int>(h.size()) <= w) return false;
  const double before = *std::min_element(h.begin(), h.end() - w);
  const double recent = *std::min_element(h.end() - w, h.end());
  return recent > before * (1.0 - config.stall_tol);
}

struct QuasiNewtonRunInfo {
  int reinits = 0;
  int skipped_updates = 0;
};

/// Quasi-Newton iteration: full steps along −H·f, secant updates after each
/// step, reinitialization per the configured rule. A reset that does not
/// help (two in a row) ends the run as Stalled.
inline SolveResult run_quasi_newton(const Problem& problem, const QuasiNewtonConfig& config, const SolveOptions& options,
                                    const DiffMode& mode = DiffMode::dual(), QuasiNewtonRunInfo* info = nullptr) {
  problem.validate();
  SolveContext ctx(problem, options);
  JacobianEngine engine(problem, JacobianStrategy::QuasiNewton, mode, ctx.stats, options.deadline);
  const int n = problem.size();
  QuasiNewtonRunInfo local;
  QuasiNewtonRunInfo& run = info ? *info : local;

  Vector u = problem.u0;
  Vector fu = ctx.residual(u);
  if (!fu.allFinite()) return ctx.finish(u, fu, ReturnCode::NonFinite);
  ctx.record(0, inf_norm(fu));

  auto fresh = [&]() {
    return qn_init(config, n, config.init, [&]() { return engine.evaluate(u).dense(); });
  };
  ReturnCode code = ReturnCode::MaxIters;
  try {
    QuasiNewtonState st = fresh();
    std::vector<double> history{fu.norm()};
    bool just_reset = true;
    for (int iter = 1; iter <= options.maxiters; ++iter) {
      if (check_convergence(fu, options.abstol)) break;
      if (ctx.timed_out()) {
        code = ReturnCode::Timeout;
        break;
      }
      const Vector du = st.direction(fu);
      ++ctx.stats.nlinsolve;
      Vector u_new = u + du;
      Vector f_new = du.allFinite() ? ctx.residual(u_new) : Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
      const double next_norm = f_new.allFinite() ? f_new.norm() : std::numeric_limits<double>::infinity();

      ReinitInputs in{fu.norm(), next_norm, inf_norm(du), inf_norm(u), &history};
      const bool accept = config.reinit == QnReinit::NotDescentDirection ? !reinit_check(config, in)
                                                                          : std::isfinite(next_norm);
      if (accept) {
        const Vector t = f_new - fu;
        if (du.norm() > 0.0) {
          const bool updated = config.form == QnForm::Diagonal ? (klement_update(st, du, t), true) : broyden_update(st, du, t);
          if (!updated) ++run.skipped_updates;
        }
        u = std::move(u_new);
        fu = std::move(f_new);
        history.push_back(next_norm);
        ++ctx.stats.nsteps;
        ctx.record(iter, inf_norm(fu));
        just_reset = false;
        in.history = &history;
        if (config.reinit == QnReinit::Stalling && reinit_check(config, in)) {
          st = fresh();
          ++run.reinits;
          history = {fu.norm()};
          just_reset = true;
        }
        continue;
      }
      st = fresh();
      ++run.reinits;
      history = {fu.norm()};
      // The rejected direction already came from a fresh state, so the reset
      // would reproduce it.
      if (just_reset) {
        code = ReturnCode::Stalled;
        break;
      }
      just_reset = true;
    }
  } catch (const Error& e) {
    code = detail::code_for(e);
  }
  return ctx.finish(u, fu, code);
}

}  // namespace nlkit
