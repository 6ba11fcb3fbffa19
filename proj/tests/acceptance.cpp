// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nlkit/bench.hpp"
#include "nlkit/nlkit.hpp"

namespace {

using namespace nlkit;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Seconds = std::chrono::duration<double>;

int count_successes(const std::vector<ProblemDescriptor>& problems, const AlgorithmSpec& spec, double abstol,
                    std::vector<std::string>* failed = nullptr) {
  SolveOptions o;
  o.abstol = abstol;
  o.maxiters = 1000;
  int ok = 0;
  for (const auto& d : problems) {
    const SolveResult r = solve(d.problem, spec, o);
    if (r.success() && inf_norm(d.problem.eval(r.u_star)) <= abstol) {
      ++ok;
    } else if (failed) {
      failed->push_back(d.id);
    }
  }
  return ok;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s.empty() ? "none" : s;
}

Outcome suite_count(const AlgorithmSpec& spec, int needed, bool exact) {
  std::vector<std::string> failed;
  const int got = count_successes(test23_all(), spec, 1e-8, &failed);
  Outcome o;
  o.pass = exact ? got == needed : got >= needed;
  o.detail = spec.name + " solved " + std::to_string(got) + "/23 (need " + (exact ? "" : ">=") +
             std::to_string(needed) + "; failed: " + join(failed) + ")";
  return o;
}

Outcome c1() { return suite_count(presets::newton_raphson(), 23, true); }

Outcome c2() { return suite_count(presets::trust_region(RadiusScheme::Simple), 21, false); }

Outcome c3() {
  const Outcome plain = suite_count(presets::levenberg_marquardt(false), 23, true);
  const Outcome geo = suite_count(presets::levenberg_marquardt(true), 20, false);
  return {plain.pass && geo.pass, "no geodesic: " + plain.detail + "; geodesic: " + geo.detail};
}

Outcome c4() {
  std::vector<ProblemDescriptor> all = test23_all();
  all.push_back(brusselator_2d(16));
  all.push_back(quadratic());
  std::vector<std::string> failed;
  int ok = 0;
  for (const auto& d : all) {
    const SolveResult r = solve(d.problem);  // default options, default polyalgorithm
    if (r.success() && inf_norm(d.problem.eval(r.u_star)) <= SolveOptions{}.abstol) {
      ++ok;
    } else {
      failed.push_back(d.id);
    }
  }
  return {ok == static_cast<int>(all.size()),
          "polyalgorithm solved " + std::to_string(ok) + "/" + std::to_string(all.size()) + " (failed: " +
              join(failed) + ")"};
}

Outcome c5() {
  const auto d = generalized_rosenbrock(10);
  SolveOptions o;
  o.abstol = 1e-8;
  o.maxiters = 1000;
  const SolveResult bt = solve(d.problem, presets::newton_backtracking(), o);
  const SolveResult nr = solve(d.problem, presets::newton_raphson(), o);
  const double resid = inf_norm(d.problem.eval(bt.u_star));
  const double dist = (bt.u_star - Vector::Ones(10)).cwiseAbs().maxCoeff();
  const bool rescued = bt.success() && resid <= 1e-8 && dist <= 1e-6;
  const bool plain_fails = !nr.success();
  std::ostringstream s;
  s << "backtracking " << to_string(bt.retcode) << " |f|=" << resid << " |u-1|=" << dist << "; plain NR "
    << to_string(nr.retcode);
  return {rescued && plain_fails, s.str()};
}

Outcome c6() {
  const SparsityPattern p(5, 5, {{0, 0}, {1, 1}, {1, 2}, {2, 3}, {3, 0}, {3, 1}, {3, 4}, {4, 4}});
  const Coloring col = color_greedy(p, Coloring::Axis::Columns);
  const Coloring row = color_greedy(p, Coloring::Axis::Rows);
  // Classes are 0-based here: {1,3,4}/{2}/{5} and {1,2,3,5}/{4} in 1-based terms.
  const bool ok = col.num_colors == 3 && row.num_colors == 2 &&
                  col.classes() == std::vector<std::vector<int>>{{0, 2, 3}, {1}, {4}} &&
                  row.classes() == std::vector<std::vector<int>>{{0, 1, 2, 4}, {3}};
  return {ok, "columns " + std::to_string(col.num_colors) + " colors, rows " + std::to_string(row.num_colors) +
                  " colors"};
}

Outcome c7() {
  std::mt19937_64 rng(bench::resolve_seed(7));
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  bool ok = true;
  std::ostringstream s;
  for (int N : {4, 8, 16}) {
    const auto d = brusselator_2d(N);
    const SparsityPattern& p = *d.problem.known_pattern;
    Vector u = d.problem.u0;
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += U(rng);
    const Coloring c = color_greedy(p);
    int sweeps = 0;
    const CscMatrix J = compressed_jacobian(d.problem.residual, u, d.problem.params, p, c, DiffMode::dual(), &sweeps);
    const Matrix Jd = dense_jacobian(d.problem.residual, u, d.problem.params);
    const double diff = (J.to_dense() - CscMatrix::restrict(Jd, p).to_dense()).cwiseAbs().maxCoeff();
    const bool good = diff <= 1e-10 && sweeps == c.num_colors && c.num_colors < 2 * N * N;
    ok = ok && good;
    s << "N=" << N << " diff=" << diff << " sweeps=" << sweeps << " colors=" << c.num_colors << "; ";
  }
  return {ok, s.str()};
}

Outcome c8() {
  const auto big = brusselator_2d(32);
  const SolveResult r32 = solve(big.problem, presets::newton_krylov());
  const double resid32 = inf_norm(big.problem.eval(r32.u_star));
  const auto small = brusselator_2d(8);
  const SolveResult k8 = solve(small.problem, presets::newton_krylov());
  const SolveResult d8 = solve(small.problem, presets::dense_newton());
  const double gap = (k8.u_star - d8.u_star).cwiseAbs().maxCoeff();
  std::ostringstream s;
  s << "N=32 " << to_string(r32.retcode) << " |f|=" << resid32 << "; N=8 krylov " << to_string(k8.retcode)
    << " dense " << to_string(d8.retcode) << " |du|=" << gap;
  return {resid32 <= 1e-6 && k8.success() && d8.success() && gap <= 1e-6, s.str()};
}

// Six-dimensional mildly nonlinear system with four parameters.
struct SixDim {
  Matrix A;
  template <typename S>
  void operator()(std::span<const S> u, std::span<const S> p, std::span<S> f) const {
    using std::tanh;
    for (std::size_t i = 0; i < 6; ++i) {
      S s = 0.2 * tanh(u[i]) - p[i % 4] + 0.3 * p[(i + 1) % 4] * u[i];
      for (std::size_t j = 0; j < 6; ++j) s += A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * u[j];
      f[i] = s;
    }
  }
};

Vector resolve(Problem p, const Vector& theta, const Vector& start) {
  p.params = theta;
  p.u0 = start;
  SolveOptions o;
  o.abstol = 1e-11;
  return solve(p, presets::newton_raphson(), o).u_star;
}

Outcome c9() {
  const auto q = quadratic();
  const Vector theta = q.problem.params;
  const SolveResult rq = solve(q.problem);
  const Vector gbar = 2.0 * rq.u_star;
  const Vector adj = ift_adjoint(q.problem, rq.u_star, theta, gbar);
  const Vector fwd = ift_forward(q.problem, rq.u_star, theta).transpose() * gbar;
  const double e_adj = (adj - Vector::Ones(2)).cwiseAbs().maxCoeff();
  const double e_fwd = (fwd - Vector::Ones(2)).cwiseAbs().maxCoeff();

  std::mt19937_64 rng(bench::resolve_seed(9));
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Matrix A(6, 6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) A(i, j) = U(rng);
    A(i, i) = 7.0 + std::abs(U(rng));
  }
  Vector p0(4);
  for (Eigen::Index i = 0; i < 4; ++i) p0[i] = U(rng);
  const Problem six = make_problem(SixDim{A}, Vector::Zero(6), p0);
  const Vector u6 = resolve(six, p0, six.u0);
  const Vector g6 = 2.0 * u6;
  const Vector adj6 = ift_adjoint(six, u6, p0, g6);
  const Vector fwd6 = ift_forward(six, u6, p0).transpose() * g6;
  Vector fd(4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double h = 1e-5;
    Vector tp = p0, tm = p0;
    tp[j] += h;
    tm[j] -= h;
    fd[j] = (resolve(six, tp, u6).squaredNorm() - resolve(six, tm, u6).squaredNorm()) / (2.0 * h);
  }
  const double e6a = (adj6 - fd).cwiseAbs().maxCoeff();
  const double e6f = (fwd6 - fd).cwiseAbs().maxCoeff();
  std::ostringstream s;
  s << "quadratic adjoint err=" << e_adj << " forward err=" << e_fwd << "; 6-dim vs FD adjoint=" << e6a
    << " forward=" << e6f;
  return {e_adj <= 1e-8 && e_fwd <= 1e-8 && e6a <= 1e-4 && e6f <= 1e-4, s.str()};
}

// Least-squares slope of log e_{k+1} against log e_k over the last four
// iterates whose error is still above the rounding floor.
double fitted_order(const std::vector<double>& err) {
  std::vector<double> e;
  for (double x : err)
    if (x > 1e-13) e.push_back(x);
  if (e.size() < 3) return 0.0;
  const std::size_t first = e.size() > 4 ? e.size() - 4 : 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = first; k + 1 < e.size(); ++k) {
    const double x = std::log(e[k]), y = std::log(e[k + 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct CubeMinus8 {
  template <typename S>
  void operator()(std::span<const S> u, std::span<const S>, std::span<S> f) const {
    f[0] = u[0] * u[0] * u[0] - 8.0;
  }
};
struct ExpMinus2 {
  template <typename S>
  void operator()(std::span<const S> u, std::span<const S>, std::span<S> f) const {
    using std::exp;
    f[0] = exp(u[0]) - 2.0;
  }
};
struct AtanShift {
  template <typename S>
  void operator()(std::span<const S> u, std::span<const S>, std::span<S> f) const {
    using std::atan;
    f[0] = atan(u[0]) - 0.5;
  }
};

enum class Step { Newton, Halley, PotraPtak };

std::vector<double> error_sequence(const ResidualFunction& f, double u0, double root, Step method) {
  const auto F = [&](const Vector& x) {
    Vector out(1);
    f(std::span<const double>(x.data(), 1), std::span<const double>(), std::span<double>(out.data(), 1));
    return out;
  };
  Vector u(1);
  u[0] = u0;
  std::vector<double> err{std::abs(u0 - root)};
  for (int k = 0; k < 40 && err.back() > 1e-15; ++k) {
    const Vector fu = F(u);
    const LinearSystem J = LinearSystem::dense(dense_jacobian(f, u, Vector()), LinearSolverChoice::lu());
    switch (method) {
      case Step::Newton: u += newton_direction(J, fu); break;
      case Step::Halley: u += halley_direction(J, f, u, Vector(), fu).direction; break;
      case Step::PotraPtak: u = potra_ptak_step(J, ResidualCallback(F), u, fu).u_next; break;
    }
    err.push_back(std::abs(u[0] - root));
  }
  return err;
}

Outcome c10() {
  struct Case {
    const char* name;
    ResidualFunction f;
    double u0, root;
  };
  const std::vector<Case> cases = {
      {"x^3-8", make_residual(CubeMinus8{}), 4.0, 2.0},
      {"exp(x)-2", make_residual(ExpMinus2{}), 2.0, std::log(2.0)},
      {"atan(x)-0.5", make_residual(AtanShift{}), 1.0, std::tan(0.5)},
  };
  const std::vector<std::pair<Step, double>> methods = {
      {Step::Newton, 1.8}, {Step::Halley, 2.5}, {Step::PotraPtak, 2.0}};
  const char* names[] = {"newton", "halley", "potra-ptak"};
  bool ok = true;
  std::ostringstream s;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    double worst = 1e9;
    for (const auto& c : cases) worst = std::min(worst, fitted_order(error_sequence(c.f, c.u0, c.root, methods[m].first)));
    ok = ok && worst >= methods[m].second;
    s << names[m] << " min order " << worst << " (need " << methods[m].second << "); ";
  }
  return {ok, s.str()};
}

Outcome c11() {
  std::mt19937_64 rng(bench::resolve_seed(11));
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto rv = [&](int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = U(rng);
    return v;
  };
  const int n = 6;
  int checked[3] = {0, 0, 0};
  double worst[3] = {0, 0, 0};
  auto dense = qn_identity(n, QnForm::DenseInverse);
  auto low = qn_identity(n, QnForm::LowRank, 8);
  auto diag = qn_identity(n, QnForm::Diagonal);
  for (int k = 0; k < 1000; ++k) {
    // A fresh start every few updates keeps the random operator well scaled.
    if (k % 8 == 0) {
      dense = qn_identity(n, QnForm::DenseInverse);
      low = qn_identity(n, QnForm::LowRank, 8);
    }
    const Vector s = rv(n), t = rv(n);
    if (broyden_update(dense, s, t)) {
      ++checked[0];
      worst[0] = std::max(worst[0], (dense.H * t - s).norm() / s.norm());
    }
    if (lbroyden_update(low, s, t)) {
      ++checked[1];
      worst[1] = std::max(worst[1], (lbroyden_apply(low, t) - s).norm() / s.norm());
    }
    klement_update(diag, s, t);
    ++checked[2];
    const double smax = s.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      const bool unguarded = std::abs(s[i]) > 1e-9 * smax && std::abs(t[i] / s[i]) >= 1e-12;
      if (unguarded) worst[2] = std::max(worst[2], std::abs(diag.d[i] * s[i] - t[i]) / std::abs(t[i]));
    }
  }
  std::ostringstream s;
  s << "broyden " << checked[0] << " checked, worst " << worst[0] << "; lbroyden " << checked[1] << ", worst "
    << worst[1] << "; klement " << checked[2] << ", worst " << worst[2];
  const bool ok = worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-10 && checked[0] >= 900 &&
                  checked[1] >= 900;
  return {ok, s.str()};
}

bench::ScalingRow cell(int N, const std::string& alg, double timeout_s) {
  bench::ScalingConfig c;
  c.sizes = {N};
  c.algorithms = {alg};
  c.timeout_s = timeout_s;
  c.warmup = true;
  return bench::run_scaling(c).front();
}

Outcome c12() {
  const auto dense16 = cell(16, "dense-newton", 600);
  // Budget for N=64: ten times the N=16 time scaled linearly by the number of
  // unknowns, capped by the regular timeout.
  const double budget = std::min(600.0, 10.0 * dense16.runtime_ns * 1e-9 * 16.0);
  const auto dense64 = cell(64, "dense-newton", budget);
  const auto sparse64 = cell(64, "sparse-newton", 600);
  const auto krylov64 = cell(64, "newton-krylov", 600);
  const bool sparse_faster = sparse64.retcode == ReturnCode::Success && sparse64.runtime_ns < dense64.runtime_ns;
  const bool krylov_done = krylov64.retcode == ReturnCode::Success && krylov64.resid_inf <= 1e-6;
  const bool dense_over = dense64.retcode == ReturnCode::Timeout;
  std::ostringstream s;
  s << "dense N=16 " << dense16.runtime_ns * 1e-9 << "s; N=64 budget " << budget << "s: dense "
    << to_string(dense64.retcode) << " " << dense64.runtime_ns * 1e-9 << "s, sparse " << to_string(sparse64.retcode)
    << " " << sparse64.runtime_ns * 1e-9 << "s, krylov " << to_string(krylov64.retcode) << " "
    << krylov64.runtime_ns * 1e-9 << "s";
  return {sparse_faster && krylov_done && dense_over, s.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "23-suite coverage, Newton-Raphson", 10, c1},
      {2, "23-suite coverage, trust region (simple)", 10, c2},
      {3, "23-suite coverage, Levenberg-Marquardt", 30, c3},
      {4, "polyalgorithm robustness", 60, c4},
      {5, "line-search rescue on generalized Rosenbrock", 5, c5},
      {6, "coloring of the 5x5 example", 1, c6},
      {7, "sparse Jacobian oracle on Brusselator", 10, c7},
      {8, "Newton-Krylov on Brusselator", 120, c8},
      {9, "implicit-function sensitivities", 5, c9},
      {10, "convergence orders", 5, c10},
      {11, "secant invariants", 5, c11},
      {12, "scaling ordering on Brusselator", 600, c12},
  };
  int failures = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double t = Seconds(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = t < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s criterion %2d: %s | %s | %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), t, c.limit_s, in_time ? "" : " over time limit");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failures, all.size());
  return failures == 0 ? 0 : 1;
}
