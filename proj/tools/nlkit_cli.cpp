#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nlkit/bench.hpp"
#include "nlkit/nlkit.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUnknownId = 2;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// "test23" stands for the whole suite.
std::vector<std::string> expand_problem_ids(const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (id == "test23") {
      for (const auto& e : nlkit::kSuite) out.push_back(std::string("test23/") + e.slug);
    } else {
      out.push_back(id);
    }
  }
  return out;
}

json stats_json(const nlkit::Stats& s) {
  return {{"nf", s.nf}, {"njac", s.njac}, {"njvp", s.njvp}, {"nlinsolve", s.nlinsolve}, {"nsteps", s.nsteps}};
}

// Writes to `path`, or stdout when the path is empty. Returns false on I/O failure.
template <typename Writer>
bool emit(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return static_cast<bool>(std::cout);
  }
  std::ofstream os(path);
  if (!os) {
    std::cerr << "error: cannot open '" << path << "' for writing\n";
    return false;
  }
  write(os);
  os.flush();
  if (!os) std::cerr << "error: write to '" << path << "' failed\n";
  return static_cast<bool>(os);
}

struct SolveArgs {
  std::string problem;
  std::string algorithm;
  double abstol = 1e-8;
  int maxiters = 1000;
  std::string precond;
  int krylov_dim = 0;
  bool print_solution = false;
  bool trace = false;
};

int cmd_solve(const SolveArgs& a) {
  auto desc = nlkit::problem_by_id(a.problem);
  if (!desc) {
    std::cerr << "error: unknown problem '" << a.problem << "' (see 'list problems')\n";
    return kExitUnknownId;
  }
  auto spec = nlkit::algorithm_by_name(a.algorithm);
  if (!spec) {
    std::cerr << "error: unknown algorithm '" << a.algorithm << "' (see 'list algorithms')\n";
    return kExitUnknownId;
  }
  if (!a.precond.empty()) {
    if (a.precond == "ilu0") {
      spec->linear.precond = nlkit::LinearSolverChoice::Precond::ILU0;
    } else if (a.precond == "none") {
      spec->linear.precond = nlkit::LinearSolverChoice::Precond::None;
    } else {
      std::cerr << "error: --precond must be 'none' or 'ilu0'\n";
      return 1;
    }
  }
  if (a.krylov_dim > 0) spec->linear.krylov_dim = a.krylov_dim;

  nlkit::SolveOptions o;
  o.abstol = a.abstol;
  o.maxiters = a.maxiters;
  o.store_trace = a.trace;
  nlkit::SolveResult r;
  try {
    r = nlkit::solve(desc->problem, *spec, o);
  } catch (const nlkit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  json out = {{"problem", desc->id},
              {"name", desc->name},
              {"algorithm", a.algorithm},
              {"n", desc->n},
              {"abstol", a.abstol},
              {"retcode", nlkit::to_string(r.retcode)},
              {"resid_inf", nlkit::bench::remeasure(desc->problem, r.u_star)},
              {"wall_time_s", r.wall_time_s},
              {"stats", stats_json(r.stats)}};
  if (desc->reference_solution && desc->reference_solution->size() == r.u_star.size())
    out["error_vs_reference"] = nlkit::inf_norm(r.u_star - *desc->reference_solution);
  if (a.print_solution) out["u_star"] = std::vector<double>(r.u_star.data(), r.u_star.data() + r.u_star.size());
  if (a.trace) {
    json t = json::array();
    for (const auto& p : r.trace) t.push_back({p.iteration, p.resid_norm});
    out["trace"] = std::move(t);
  }
  std::cout << out.dump(2) << '\n';
  return r.success() ? 0 : 1;
}

struct WpArgs {
  std::string problems;
  std::string algorithms;
  std::string tols = "1e-2..1e-10";
  int reps = 5;
  int jobs = 1;
  int maxiters = 1000;
  std::string out;
};

int cmd_wp(const WpArgs& a) {
  nlkit::bench::BenchConfig c;
  c.problems = expand_problem_ids(split_list(a.problems));
  c.algorithms = split_list(a.algorithms);
  for (const auto& id : c.problems)
    if (!nlkit::problem_by_id(id)) {
      std::cerr << "error: unknown problem '" << id << "'\n";
      return kExitUnknownId;
    }
  for (const auto& name : c.algorithms)
    if (!nlkit::algorithm_by_name(name)) {
      std::cerr << "error: unknown algorithm '" << name << "'\n";
      return kExitUnknownId;
    }
  try {
    c.tolerances = nlkit::bench::parse_tolerance_grid(a.tols);
    c.reps = a.reps;
    c.jobs = a.jobs;
    c.maxiters = a.maxiters;
    c.seed = nlkit::bench::resolve_seed(c.seed);
    const auto rows = nlkit::bench::run_wp(c);
    return emit(a.out, [&](std::ostream& os) { nlkit::bench::write_wp_csv(os, rows); }) ? 0 : 1;
  } catch (const nlkit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

struct ScalingArgs {
  std::string family = "brusselator2d";
  std::string sizes = "8,16,32";
  std::string algorithms;
  double timeout_s = 600.0;
  double abstol = 1e-6;
  int reps = 1;
  int jobs = 1;
  bool no_isolate = false;
  std::string out;
};

int cmd_scaling(const ScalingArgs& a) {
  nlkit::bench::ScalingConfig c;
  c.family = a.family;
  c.algorithms = split_list(a.algorithms);
  if (!nlkit::problem_family_member(a.family, 4)) {
    std::cerr << "error: unknown problem family '" << a.family << "'\n";
    return kExitUnknownId;
  }
  for (const auto& name : c.algorithms)
    if (!nlkit::algorithm_by_name(name)) {
      std::cerr << "error: unknown algorithm '" << name << "'\n";
      return kExitUnknownId;
    }
  try {
    c.sizes = nlkit::bench::parse_sizes(a.sizes);
    c.timeout_s = a.timeout_s;
    c.abstol = a.abstol;
    c.reps = a.reps;
    c.jobs = a.jobs;
    c.isolate = !a.no_isolate;
    const auto rows = nlkit::bench::run_scaling(c);
    return emit(a.out, [&](std::ostream& os) { nlkit::bench::write_scaling_csv(os, rows); }) ? 0 : 1;
  } catch (const nlkit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_list(const std::string& what) {
  if (what == "problems") {
    for (const auto& d : nlkit::list_problems()) std::printf("%-34s n=%-5d %s\n", d.id.c_str(), d.n, d.name.c_str());
    std::printf("%-34s %s\n", "generalized_rosenbrock?N=<n>", "family, any N >= 2");
    std::printf("%-34s %s\n", "brusselator2d?N=<n>", "family, any N >= 3");
    return 0;
  }
  for (const auto& name : nlkit::algorithm_names()) std::printf("%s\n", name.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlkit: nonlinear solver runs and benchmarks"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve one problem and print the result as JSON");
  solve->add_option("problem", sa.problem, "Problem id, e.g. test23/rosenbrock or brusselator2d?N=32")->required();
  solve->add_option("algorithm", sa.algorithm, "Algorithm name (see 'list algorithms')")->required();
  solve->add_option("--abstol", sa.abstol, "Max-norm residual tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--maxiters", sa.maxiters, "Iteration limit")->check(CLI::PositiveNumber);
  solve->add_option("--precond", sa.precond, "Krylov preconditioner: none or ilu0");
  solve->add_option("--krylov-dim", sa.krylov_dim, "Krylov subspace dimension (0: min(n, 100))");
  solve->add_flag("--print-solution", sa.print_solution, "Include u_star in the output");
  solve->add_flag("--trace", sa.trace, "Include the residual history");

  WpArgs wa;
  auto* wp = app.add_subcommand("wp", "Work-precision sweep, CSV output");
  wp->add_option("--problems", wa.problems, "Comma-separated problem ids ('test23' = whole suite)")->required();
  wp->add_option("--algorithms", wa.algorithms, "Comma-separated algorithm names")->required();
  wp->add_option("--tols", wa.tols, "Tolerance grid, e.g. 1e-2..1e-10 or 1e-4,1e-8");
  wp->add_option("--reps", wa.reps, "Timed repetitions per cell (median reported)")->check(CLI::PositiveNumber);
  wp->add_option("--jobs", wa.jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  wp->add_option("--maxiters", wa.maxiters, "Iteration limit")->check(CLI::PositiveNumber);
  wp->add_option("--out", wa.out, "Output file (default stdout)");

  ScalingArgs ca;
  auto* scaling = app.add_subcommand("scaling", "Problem-size scaling run, CSV output");
  scaling->add_option("--family", ca.family, "brusselator2d or generalized_rosenbrock");
  scaling->add_option("--sizes", ca.sizes, "Comma-separated sizes");
  scaling->add_option("--algorithms", ca.algorithms, "Comma-separated algorithm names")->required();
  scaling->add_option("--timeout-s", ca.timeout_s, "Per-cell time budget in seconds")->check(CLI::PositiveNumber);
  scaling->add_option("--abstol", ca.abstol, "Target residual")->check(CLI::PositiveNumber);
  scaling->add_option("--reps", ca.reps, "Timed repetitions per cell")->check(CLI::PositiveNumber);
  scaling->add_option("--jobs", ca.jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  scaling->add_flag("--no-isolate", ca.no_isolate, "Run cells in-process (cooperative timeout only)");
  scaling->add_option("--out", ca.out, "Output file (default stdout)");

  std::string what;
  auto* list = app.add_subcommand("list", "List problems or algorithms");
  list->add_option("what", what, "problems or algorithms")->required()->check(CLI::IsMember({"problems", "algorithms"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (solve->parsed()) return cmd_solve(sa);
  if (wp->parsed()) return cmd_wp(wa);
  if (scaling->parsed()) return cmd_scaling(ca);
  return cmd_list(what);
}
