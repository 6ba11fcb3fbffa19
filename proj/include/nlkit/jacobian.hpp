#pragma once

// Jacobian strategies behind a single engine: analytic, dense dual, dense
// finite differences, colored sparse and matrix-free. The engine owns the
// sparsity pattern and coloring for a solve and keeps the work counters.

#include <memory>
#include <optional>
#include <utility>

#include "nlkit/autodiff.hpp"
#include "nlkit/core.hpp"
#include "nlkit/linalg.hpp"
#include "nlkit/sparsity.hpp"

namespace nlkit {

enum class JacobianStrategy { Analytic, DualDense, FDDense, ColoredSparse, MatrixFree, QuasiNewton };

constexpr const char* to_string(JacobianStrategy s) {
  switch (s) {
    case JacobianStrategy::Analytic: return "Analytic";
    case JacobianStrategy::DualDense: return "DualDense";
    case JacobianStrategy::FDDense: return "FDDense";
    case JacobianStrategy::ColoredSparse: return "ColoredSparse";
    case JacobianStrategy::MatrixFree: return "MatrixFree";
    case JacobianStrategy::QuasiNewton: return "QuasiNewton";
  }
  return "Unknown";
}

/// A materialized Jacobian, stored dense or in CSC form.
class JacobianMatrix {
 public:
  JacobianMatrix() = default;
  JacobianMatrix(Matrix dense) : dense_(std::move(dense)) {}  // NOLINT(google-explicit-constructor)
  JacobianMatrix(CscMatrix sparse) : sparse_(std::move(sparse)) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] bool is_sparse() const { return sparse_.has_value(); }
  [[nodiscard]] int size() const { return is_sparse() ? sparse_->n_rows : static_cast<int>(dense_->rows()); }

  [[nodiscard]] const Matrix& dense() const { return *dense_; }
  [[nodiscard]] const CscMatrix& sparse() const { return *sparse_; }

  [[nodiscard]] Matrix to_dense() const { return is_sparse() ? sparse_->to_dense() : *dense_; }

  [[nodiscard]] Vector multiply(const Vector& v) const {
    return is_sparse() ? sparse_->multiply(v) : Vector(*dense_ * v);
  }
  [[nodiscard]] Vector transpose_multiply(const Vector& v) const {
    return is_sparse() ? sparse_->transpose_multiply(v) : Vector(dense_->transpose() * v);
  }

  [[nodiscard]] bool all_finite() const { return is_sparse() ? sparse_->all_finite() : dense_->allFinite(); }

  /// J + shift·I in the same storage.
  [[nodiscard]] JacobianMatrix shifted(double shift) const {
    if (is_sparse()) {
      CscMatrix s = *sparse_;
      s.add_to_diagonal(shift);
      return s;
    }
    Matrix d = *dense_;
    d.diagonal().array() += shift;
    return d;
  }

  /// Prepared linear system for this matrix.
  [[nodiscard]] LinearSystem system(const LinearSolverChoice& choice, double krylov_reltol = 1e-10) const {
    return is_sparse() ? LinearSystem::sparse(*sparse_, choice, krylov_reltol) : LinearSystem::dense(*dense_, choice);
  }

 private:
  std::optional<Matrix> dense_;
  std::optional<CscMatrix> sparse_;
};

/// Inexact-Newton forcing term for the inner Krylov solve.
inline double krylov_reltol(double abstol, double resid_inf) {
  const double scaled = resid_inf > 0.0 ? 1e-2 * abstol / resid_inf : 1e-10;
  return std::min(1e-4, std::max(1e-10, scaled));
}

class JacobianEngine {
 public:
  JacobianEngine(const Problem& problem, JacobianStrategy strategy, DiffMode mode, Stats& stats,
                 std::optional<Clock::time_point> deadline = std::nullopt)
      : problem_(problem), strategy_(strategy), mode_(mode), stats_(stats), deadline_(deadline) {
    mode_.validate();
    if (strategy_ == JacobianStrategy::Analytic && !problem_.analytic_jacobian)
      throw Error(ErrorKind::InvalidArgument, "analytic Jacobian strategy needs problem.analytic_jacobian");
    if (strategy_ == JacobianStrategy::FDDense && mode_.is_dual()) mode_ = DiffMode::fd_forward();
  }

  [[nodiscard]] JacobianStrategy strategy() const { return strategy_; }
  [[nodiscard]] const DiffMode& mode() const { return mode_; }

  /// Pattern used by the colored strategy: the problem's known pattern when
  /// present, otherwise detected once and cached.
  const SparsityPattern& pattern() {
    if (!pattern_) {
      pattern_ = problem_.known_pattern ? *problem_.known_pattern : detect_pattern_approx(problem_);
      coloring_ = color_greedy(*pattern_, Coloring::Axis::Columns);
    }
    return *pattern_;
  }

  const Coloring& coloring() {
    pattern();
    return *coloring_;
  }

  /// Number of seeded directions in the most recent colored evaluation.
  [[nodiscard]] int last_sweeps() const { return last_sweeps_; }

  /// Materializes J(u). Matrix-free engines materialize a sparse J here
  /// (used for preconditioning when forced).
  JacobianMatrix evaluate(const Vector& u) {
    ++stats_.njac;
    const int n = static_cast<int>(u.size());
    switch (strategy_) {
      case JacobianStrategy::Analytic: {
        Matrix J = problem_.analytic_jacobian(u, problem_.params);
        if (J.rows() != n || J.cols() != n) throw Error(ErrorKind::InvalidArgument, "analytic Jacobian has wrong shape");
        detail::require_finite(J, "analytic Jacobian");
        return J;
      }
      case JacobianStrategy::DualDense:
      case JacobianStrategy::FDDense:
      case JacobianStrategy::QuasiNewton: {
        count_fd_evals(n);
        return dense_jacobian(problem_.residual, u, problem_.params, mode_, deadline_);
      }
      case JacobianStrategy::ColoredSparse:
      case JacobianStrategy::MatrixFree: {
        const SparsityPattern& pat = pattern();
        CscMatrix J = compressed_jacobian(problem_.residual, u, problem_.params, pat, *coloring_, mode_, &last_sweeps_);
        if (!mode_.is_dual()) stats_.nf += (mode_.kind == DiffMode::Kind::FiniteDiffCentral ? 2 : 1) * last_sweeps_;
        if (!J.all_finite()) throw Error(ErrorKind::NonFinite, "sparse Jacobian produced a non-finite value");
        return J;
      }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown Jacobian strategy");
  }

  Vector jvp(const Vector& u, const Vector& v) {
    ++stats_.njvp;
    if (!mode_.is_dual()) stats_.nf += 2;
    return nlkit::jvp(problem_.residual, u, problem_.params, v, mode_);
  }

  /// v ↦ J(u)·v through directional derivatives; the engine must outlive it.
  LinearOperator operator_at(const Vector& u) {
    LinearOperator op;
    op.n = static_cast<int>(u.size());
    auto point = std::make_shared<const Vector>(u);
    op.apply = [this, point](const Vector& v) { return jvp(*point, v); };
    op.traits = {false, false, false};
    return op;
  }

 private:
  void count_fd_evals(int n) {
    if (strategy_ == JacobianStrategy::Analytic || mode_.is_dual()) return;
    stats_.nf += mode_.kind == DiffMode::Kind::FiniteDiffCentral ? 2 * n : n + 1;
  }

  const Problem& problem_;
  JacobianStrategy strategy_;
  DiffMode mode_;
  Stats& stats_;
  std::optional<Clock::time_point> deadline_;
  std::optional<SparsityPattern> pattern_;
  std::optional<Coloring> coloring_;
  int last_sweeps_ = 0;
};

}  // namespace nlkit
