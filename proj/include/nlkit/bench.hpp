#pragma once

// Benchmark harness behind the CLI: work-precision sweeps and problem-size
// scaling runs, both emitting CSV. Kept in the library so tests can drive it
// without spawning the executable.

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nlkit/problems.hpp"
#include "nlkit/solvers.hpp"

namespace nlkit::bench {

inline constexpr std::uint64_t kDefaultSeed = 20240101;

/// NLKIT_SEED, when set to an unsigned integer, wins over the configured seed.
inline std::uint64_t resolve_seed(std::uint64_t configured = kDefaultSeed) {
  const char* env = std::getenv("NLKIT_SEED");
  if (env == nullptr || *env == '\0') return configured;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || end == env || *end != '\0')
    throw Error(ErrorKind::InvalidArgument, std::string("NLKIT_SEED is not an unsigned integer: ") + env);
  return static_cast<std::uint64_t>(v);
}

/// "1e-2..1e-10" expands to one tolerance per decade, inclusive at both ends.
/// A comma-separated list is taken literally.
inline std::vector<double> parse_tolerance_grid(const std::string& text) {
  std::vector<double> grid;
  const auto dots = text.find("..");
  auto to_double = [](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::InvalidArgument, "bad tolerance '" + s + "'");
    return v;
  };
  if (dots != std::string::npos) {
    const double hi = to_double(text.substr(0, dots));
    const double lo = to_double(text.substr(dots + 2));
    if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "tolerance range must run from large to small");
    const double e_hi = std::log10(hi);
    const double e_lo = std::log10(lo);
    const int steps = static_cast<int>(std::lround(e_hi - e_lo));
    if (steps < 1 || std::abs((e_hi - e_lo) - steps) > 1e-9)
      throw Error(ErrorKind::InvalidArgument, "tolerance range ends must be whole decades apart");
    for (int k = 0; k <= steps; ++k) grid.push_back(hi * std::pow(10.0, -k));
    grid.back() = lo;
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(to_double(item));
  }
  return grid;
}

/// Comma-separated positive integers, e.g. "8,16,32".
inline std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 1) throw Error(ErrorKind::InvalidArgument, "bad size '" + item + "'");
    sizes.push_back(v);
  }
  if (sizes.empty()) throw Error(ErrorKind::InvalidArgument, "no sizes given");
  return sizes;
}

struct BenchConfig {
  std::vector<std::string> problems;
  std::vector<std::string> algorithms;
  std::vector<double> tolerances{1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
  int reps = 5;
  bool warmup = true;
  int maxiters = 1000;
  int jobs = 1;
  std::uint64_t seed = kDefaultSeed;

  void validate() const {
    if (reps < 1) throw Error(ErrorKind::InvalidArgument, "reps must be at least 1");
    if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be at least 1");
    if (tolerances.empty()) throw Error(ErrorKind::InvalidArgument, "empty tolerance grid");
    for (std::size_t i = 0; i < tolerances.size(); ++i) {
      if (!(tolerances[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");
      if (i > 0 && !(tolerances[i] < tolerances[i - 1]))
        throw Error(ErrorKind::InvalidArgument, "tolerance grid must be strictly decreasing");
    }
  }
};

// ---- timing -------------------------------------------------------------------------

struct TimedSolve {
  SolveResult result;  // from the last timed repetition
  std::int64_t runtime_ns = 0;
  double resid_inf = std::numeric_limits<double>::infinity();
};

inline std::int64_t median_ns(std::vector<std::int64_t> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2;
}

/// Residual recomputed from the iterate, never taken from solver state.
inline double remeasure(const Problem& problem, const Vector& u) {
  if (u.size() != problem.size()) return std::numeric_limits<double>::infinity();
  const double r = inf_norm(problem.eval(u));
  return std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
}

inline TimedSolve timed_solve(const Problem& problem, const AlgorithmSpec& spec, SolveOptions options, int reps,
                              bool warmup) {
  using Clock = std::chrono::steady_clock;
  if (warmup) (void)solve(problem, spec, options);
  std::vector<std::int64_t> times;
  TimedSolve out;
  for (int k = 0; k < reps; ++k) {
    const auto t0 = Clock::now();
    out.result = solve(problem, spec, options);
    times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
    if (out.result.retcode == ReturnCode::Timeout) break;
  }
  out.runtime_ns = median_ns(times);
  out.resid_inf = remeasure(problem, out.result.u_star);
  return out;
}

// ---- worker pool -----------------------------------------------------------------------

/// Runs task(i) for i in [0, count) on up to `jobs` threads. Results land in
/// caller-owned slots so output order never depends on scheduling.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- formatting ---------------------------------------------------------------------------

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

inline std::string format_tol(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// ---- work-precision ------------------------------------------------------------------------

inline constexpr const char* kWpHeader = "problem,algorithm,abstol,runtime_ns,resid_inf,retcode,nf,njac,nlinsolve";

struct WpRow {
  std::string problem;
  std::string algorithm;
  double abstol = 0.0;
  std::int64_t runtime_ns = 0;
  double resid_inf = 0.0;
  ReturnCode retcode = ReturnCode::MaxIters;
  Stats stats;

  [[nodiscard]] std::string csv() const {
    std::ostringstream os;
    os << problem << ',' << algorithm << ',' << format_tol(abstol) << ',' << runtime_ns << ','
       << format_real(resid_inf) << ',' << to_string(retcode) << ',' << stats.nf << ',' << stats.njac << ','
       << stats.nlinsolve;
    return os.str();
  }
};

/// One fresh solve per (problem, algorithm, abstol) cell, in that nesting
/// order. Unknown ids throw InvalidArgument before any work is done.
inline std::vector<WpRow> run_wp(const BenchConfig& config) {
  config.validate();
  std::vector<ProblemDescriptor> problems;
  for (const auto& id : config.problems) {
    auto d = problem_by_id(id);
    if (!d) throw Error(ErrorKind::InvalidArgument, "unknown problem '" + id + "'");
    problems.push_back(std::move(*d));
  }
  std::vector<AlgorithmSpec> specs;
  for (const auto& name : config.algorithms) {
    auto s = algorithm_by_name(name);
    if (!s) throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + name + "'");
    specs.push_back(std::move(*s));
  }

  const std::size_t nt = config.tolerances.size();
  const std::size_t na = specs.size();
  std::vector<WpRow> rows(problems.size() * na * nt);
  parallel_for(rows.size(), config.jobs, [&](std::size_t idx) {
    const std::size_t ip = idx / (na * nt);
    const std::size_t ia = (idx / nt) % na;
    const std::size_t it = idx % nt;
    SolveOptions o;
    o.abstol = config.tolerances[it];
    o.maxiters = config.maxiters;
    const TimedSolve t = timed_solve(problems[ip].problem, specs[ia], o, config.reps, config.warmup);
    WpRow& r = rows[idx];
    r.problem = problems[ip].id;
    r.algorithm = config.algorithms[ia];
    r.abstol = o.abstol;
    r.runtime_ns = t.runtime_ns;
    r.resid_inf = t.resid_inf;
    r.retcode = t.result.retcode;
    r.stats = t.result.stats;
  });
  return rows;
}

inline void write_wp_csv(std::ostream& os, const std::vector<WpRow>& rows) {
  os << kWpHeader << '\n';
  for (const auto& r : rows) os << r.csv() << '\n';
}

// ---- scaling ---------------------------------------------------------------------------------

inline constexpr const char* kScalingHeader = "size,algorithm,runtime_ns,resid_inf,retcode";

struct ScalingConfig {
  std::string family = "brusselator2d";
  std::vector<int> sizes{8, 16, 32};
  std::vector<std::string> algorithms;
  double timeout_s = 600.0;
  double abstol = 1e-6;
  int maxiters = 1000;
  int reps = 1;
  bool warmup = false;
  int jobs = 1;
  /// Run each cell in a forked child that is killed once the budget (plus a
  /// small grace period) is spent. Off: cooperative deadline only.
  bool isolate = true;

  void validate() const {
    if (!(timeout_s > 0.0)) throw Error(ErrorKind::InvalidArgument, "timeout must be positive");
    if (reps < 1 || jobs < 1) throw Error(ErrorKind::InvalidArgument, "reps and jobs must be at least 1");
    if (sizes.empty() || algorithms.empty()) throw Error(ErrorKind::InvalidArgument, "need sizes and algorithms");
  }
};

struct ScalingRow {
  int size = 0;
  std::string algorithm;
  std::int64_t runtime_ns = 0;
  double resid_inf = std::numeric_limits<double>::infinity();
  ReturnCode retcode = ReturnCode::MaxIters;

  [[nodiscard]] std::string csv() const {
    std::ostringstream os;
    os << size << ',' << algorithm << ',' << runtime_ns << ',' << format_real(resid_inf) << ',' << to_string(retcode);
    return os.str();
  }
};

namespace detail {

struct CellPayload {
  std::int64_t runtime_ns;
  double resid_inf;
  int retcode;
};

inline ScalingRow timeout_row(int size, const std::string& algorithm, double timeout_s) {
  ScalingRow r;
  r.size = size;
  r.algorithm = algorithm;
  r.runtime_ns = static_cast<std::int64_t>(timeout_s * 1e9);
  r.retcode = ReturnCode::Timeout;
  return r;
}

inline ScalingRow run_cell_inline(const Problem& problem, const AlgorithmSpec& spec, const ScalingConfig& c, int size,
                                  const std::string& name) {
  SolveOptions o;
  o.abstol = c.abstol;
  o.maxiters = c.maxiters;
  o.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(c.timeout_s));
  const TimedSolve t = timed_solve(problem, spec, o, c.reps, c.warmup);
  ScalingRow r;
  r.size = size;
  r.algorithm = name;
  r.runtime_ns = t.runtime_ns;
  r.resid_inf = t.resid_inf;
  r.retcode = t.result.retcode;
  if (r.retcode == ReturnCode::Timeout) r.runtime_ns = std::max(r.runtime_ns, static_cast<std::int64_t>(c.timeout_s * 1e9));
  return r;
}

inline ScalingRow run_cell_forked(const Problem& problem, const AlgorithmSpec& spec, const ScalingConfig& c, int size,
                                  const std::string& name) {
  int fds[2];
  if (pipe(fds) != 0) return run_cell_inline(problem, spec, c, size, name);
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    return run_cell_inline(problem, spec, c, size, name);
  }
  if (pid == 0) {
    close(fds[0]);
    CellPayload p{0, std::numeric_limits<double>::infinity(), static_cast<int>(ReturnCode::NonFinite)};
    try {
      const ScalingRow r = run_cell_inline(problem, spec, c, size, name);
      p = {r.runtime_ns, r.resid_inf, static_cast<int>(r.retcode)};
    } catch (...) {
    }
    const ssize_t wrote = write(fds[1], &p, sizeof p);
    _exit(wrote == static_cast<ssize_t>(sizeof p) ? 0 : 1);
  }
  close(fds[1]);
  const double grace = std::max(1.0, 0.1 * c.timeout_s);
  const auto hard_stop = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                            std::chrono::duration<double>(c.timeout_s + grace));
  CellPayload p{};
  std::size_t got = 0;
  bool killed = false;
  while (got < sizeof p) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(hard_stop - Clock::now()).count();
    if (left <= 0) {
      kill(pid, SIGKILL);
      killed = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1000)));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    const ssize_t n = read(fds[0], reinterpret_cast<char*>(&p) + got, sizeof p - got);
    if (n <= 0) break;
    got += static_cast<std::size_t>(n);
  }
  close(fds[0]);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (killed) return timeout_row(size, name, c.timeout_s);
  ScalingRow r;
  r.size = size;
  r.algorithm = name;
  if (got != sizeof p) {
    r.retcode = ReturnCode::NonFinite;  // child died without reporting
    return r;
  }
  r.runtime_ns = p.runtime_ns;
  r.resid_inf = p.resid_inf;
  r.retcode = static_cast<ReturnCode>(p.retcode);
  return r;
}

}  // namespace detail

/// One row per (size, algorithm), sizes outermost.
inline std::vector<ScalingRow> run_scaling(const ScalingConfig& config) {
  config.validate();
  std::vector<AlgorithmSpec> specs;
  for (const auto& name : config.algorithms) {
    auto s = algorithm_by_name(name);
    if (!s) throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + name + "'");
    specs.push_back(std::move(*s));
  }
  std::vector<ProblemDescriptor> members;
  for (int n : config.sizes) {
    auto d = problem_family_member(config.family, n);
    if (!d) throw Error(ErrorKind::InvalidArgument, "unknown problem family '" + config.family + "'");
    members.push_back(std::move(*d));
  }
  const std::size_t na = specs.size();
  std::vector<ScalingRow> rows(members.size() * na);
  parallel_for(rows.size(), config.jobs, [&](std::size_t idx) {
    const std::size_t is = idx / na;
    const std::size_t ia = idx % na;
    const int size = config.sizes[is];
    const std::string& name = config.algorithms[ia];
    rows[idx] = config.isolate ? detail::run_cell_forked(members[is].problem, specs[ia], config, size, name)
                               : detail::run_cell_inline(members[is].problem, specs[ia], config, size, name);
  });
  return rows;
}

inline void write_scaling_csv(std::ostream& os, const std::vector<ScalingRow>& rows) {
  os << kScalingHeader << '\n';
  for (const auto& r : rows) os << r.csv() << '\n';
}

}  // namespace nlkit::bench
