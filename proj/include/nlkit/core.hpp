#pragma once

// Problem and result types shared by every solver, plus the bookkeeping the
// outer iteration drivers use (work counters, trace, deadline, termination).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlkit/dual.hpp"
#include "nlkit/error.hpp"
#include "nlkit/sparsity_pattern.hpp"

namespace nlkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Clock = std::chrono::steady_clock;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kTiny = std::numeric_limits<double>::min();

enum class ReturnCode {
  Success,
  MaxIters,
  LineSearchFailed,
  LinearSolveFailed,
  Stalled,
  NonFinite,
  Timeout,
};

constexpr const char* to_string(ReturnCode c) {
  switch (c) {
    case ReturnCode::Success: return "Success";
    case ReturnCode::MaxIters: return "MaxIters";
    case ReturnCode::LineSearchFailed: return "LineSearchFailed";
    case ReturnCode::LinearSolveFailed: return "LinearSolveFailed";
    case ReturnCode::Stalled: return "Stalled";
    case ReturnCode::NonFinite: return "NonFinite";
    case ReturnCode::Timeout: return "Timeout";
  }
  return "Unknown";
}

struct Stats {
  std::int64_t nf = 0;         // residual evaluations
  std::int64_t njac = 0;       // Jacobian materializations
  std::int64_t njvp = 0;       // directional-derivative evaluations
  std::int64_t nlinsolve = 0;  // linear solves
  std::int64_t nsteps = 0;     // accepted outer iterations

  Stats& operator+=(const Stats& o) {
    nf += o.nf;
    njac += o.njac;
    njvp += o.njvp;
    nlinsolve += o.nlinsolve;
    nsteps += o.nsteps;
    return *this;
  }
};

struct SolveOptions {
  double abstol = 1e-8;
  int maxiters = 1000;
  bool store_trace = false;
  /// Cooperative wall-clock limit; checked between iterations and inside
  /// long Jacobian sweeps.
  std::optional<Clock::time_point> deadline;

  void validate() const {
    if (!(abstol > 0.0)) throw Error(ErrorKind::InvalidArgument, "abstol must be positive");
    if (maxiters < 1) throw Error(ErrorKind::InvalidArgument, "maxiters must be at least 1");
  }
};

struct TracePoint {
  int iteration = 0;
  double resid_norm = 0.0;
};

struct SolveResult {
  Vector u_star;
  double resid_norm = std::numeric_limits<double>::infinity();
  ReturnCode retcode = ReturnCode::MaxIters;
  Stats stats;
  std::vector<TracePoint> trace;
  double wall_time_s = 0.0;

  [[nodiscard]] bool success() const { return retcode == ReturnCode::Success; }
};

// ---- norms and convergence ----------------------------------------------------

/// Max-norm; NaN entries propagate so the result compares false against any
/// tolerance.
inline double inf_norm(const Eigen::Ref<const Vector>& v) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (std::isnan(a)) return std::numeric_limits<double>::quiet_NaN();
    m = std::max(m, a);
  }
  return m;
}

inline bool all_finite(const Eigen::Ref<const Vector>& v) { return v.allFinite(); }

/// True iff max-norm of resid <= abstol. NaN entries make this false.
inline bool check_convergence(const Eigen::Ref<const Vector>& resid, double abstol) {
  const double m = inf_norm(resid);
  return m <= abstol;
}

// ---- problem -------------------------------------------------------------------

template <typename T>
using ResidualSignature = std::function<void(std::span<const T>, std::span<const T>, std::span<T>)>;

/// A residual f(u, θ) instantiated for the scalar types the differentiation
/// layer needs. Only `real` is mandatory; missing dual instantiations make
/// the problem usable with finite differences only.
struct ResidualFunction {
  ResidualSignature<double> real;
  ResidualSignature<Dual1> dual1;
  ResidualSignature<DualChunk> chunk;
  ResidualSignature<HyperDual> hyper;

  [[nodiscard]] bool dual_capable() const { return dual1 && chunk; }
  [[nodiscard]] bool hyper_capable() const { return static_cast<bool>(hyper); }

  template <typename T>
  [[nodiscard]] const ResidualSignature<T>& get() const {
    if constexpr (std::is_same_v<T, double>) return real;
    else if constexpr (std::is_same_v<T, Dual1>) return dual1;
    else if constexpr (std::is_same_v<T, DualChunk>) return chunk;
    else return hyper;
  }

  /// Evaluates into `out` after zero-filling it.
  template <typename T>
  void operator()(std::span<const T> u, std::span<const T> p, std::span<T> out) const {
    const auto& fn = get<T>();
    if (!fn) throw Error(ErrorKind::NotDifferentiable, "residual has no instantiation for this scalar type");
    std::fill(out.begin(), out.end(), T(0.0));
    fn(u, p, out);
  }

  [[nodiscard]] Vector operator()(const Vector& u, const Vector& p) const {
    Vector out(u.size());
    (*this)(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
            std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
            std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
    return out;
  }
};

/// Wraps a generic callable `f(u, p, out)` (e.g. a lambda taking `auto`
/// spans) for every scalar type the library differentiates with.
template <typename F>
ResidualFunction make_residual(F f) {
  ResidualFunction r;
  r.real = [f](std::span<const double> u, std::span<const double> p, std::span<double> out) { f(u, p, out); };
  r.dual1 = [f](std::span<const Dual1> u, std::span<const Dual1> p, std::span<Dual1> out) { f(u, p, out); };
  r.chunk = [f](std::span<const DualChunk> u, std::span<const DualChunk> p, std::span<DualChunk> out) {
    f(u, p, out);
  };
  r.hyper = [f](std::span<const HyperDual> u, std::span<const HyperDual> p, std::span<HyperDual> out) {
    f(u, p, out);
  };
  return r;
}

using JacobianFunction = std::function<Matrix(const Vector& u, const Vector& p)>;

struct Problem {
  ResidualFunction residual;
  Vector u0;
  Vector params;
  JacobianFunction analytic_jacobian;
  std::optional<SparsityPattern> known_pattern;

  [[nodiscard]] int size() const { return static_cast<int>(u0.size()); }

  [[nodiscard]] Vector eval(const Vector& u) const { return residual(u, params); }
  [[nodiscard]] Vector eval(const Vector& u, const Vector& p) const { return residual(u, p); }

  /// Checks the square-system invariant by evaluating once at u0.
  void validate() const {
    if (u0.size() < 1) throw Error(ErrorKind::InvalidArgument, "problem has no unknowns");
    if (!residual.real) throw Error(ErrorKind::InvalidArgument, "problem has no residual");
    const Vector f0 = eval(u0);
    if (f0.size() != u0.size()) throw Error(ErrorKind::InvalidArgument, "residual length differs from u0 length");
  }
};

template <typename F>
Problem make_problem(F f, Vector u0, Vector params = Vector()) {
  Problem p;
  p.residual = make_residual(std::move(f));
  p.u0 = std::move(u0);
  p.params = std::move(params);
  return p;
}

/// Problem whose residual is only available on doubles (finite differences
/// are then the only differentiation route).
inline Problem make_real_problem(ResidualSignature<double> f, Vector u0, Vector params = Vector()) {
  Problem p;
  p.residual.real = std::move(f);
  p.u0 = std::move(u0);
  p.params = std::move(params);
  return p;
}

/// Test hook for the purity assumption: two evaluations at the same point
/// must agree bit for bit.
inline bool residual_is_pure_at(const Problem& prob, const Vector& u) {
  const Vector a = prob.eval(u);
  const Vector b = prob.eval(u);
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data(),
                                            [](double x, double y) {
                                              return (std::isnan(x) && std::isnan(y)) || x == y;
                                            });
}

// ---- driver bookkeeping -----------------------------------------------------------

/// Per-solve mutable state owned by one driver: counters, trace and deadline.
class SolveContext {
 public:
  SolveContext(const Problem& problem, const SolveOptions& options)
      : problem_(problem), options_(options), start_(Clock::now()) {
    options_.validate();
  }

  [[nodiscard]] const Problem& problem() const { return problem_; }
  [[nodiscard]] const SolveOptions& options() const { return options_; }
  [[nodiscard]] double abstol() const { return options_.abstol; }
  [[nodiscard]] int maxiters() const { return options_.maxiters; }

  Stats stats;

  Vector residual(const Vector& u) {
    ++stats.nf;
    return problem_.eval(u);
  }

  [[nodiscard]] bool timed_out() const {
    return options_.deadline && Clock::now() >= *options_.deadline;
  }

  void record(int iteration, double resid_norm) {
    if (options_.store_trace) trace_.push_back({iteration, resid_norm});
  }

  /// Builds the result and enforces the success contract: the return code is
  /// Success exactly when the final residual meets abstol.
  SolveResult finish(Vector u, const Vector& fu, ReturnCode code) {
    SolveResult r;
    r.resid_norm = inf_norm(fu);
    const bool converged = r.resid_norm <= options_.abstol;
    if (converged) {
      code = ReturnCode::Success;
    } else if (code == ReturnCode::Success) {
      code = ReturnCode::MaxIters;
    }
    r.u_star = std::move(u);
    r.retcode = code;
    r.stats = stats;
    r.trace = std::move(trace_);
    r.wall_time_s = std::chrono::duration<double>(Clock::now() - start_).count();
    return r;
  }

 private:
  const Problem& problem_;
  SolveOptions options_;
  Clock::time_point start_;
  std::vector<TracePoint> trace_;
};

}  // namespace nlkit
