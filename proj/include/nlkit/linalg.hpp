#pragma once

// Linear algebra for the Newton-type solvers: dense direct factorizations,
// restart-free GMRES, ILU(0) and the default solver-selection policy.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlkit/core.hpp"
#include "nlkit/sparsity.hpp"

namespace nlkit {

struct OperatorTraits {
  bool is_materialized = false;
  bool is_symmetric = false;
  bool is_sparse = false;
};

/// A square linear map given only through its action.
struct LinearOperator {
  int n = 0;
  std::function<Vector(const Vector&)> apply;
  std::function<Vector(const Vector&)> apply_transpose;  // optional
  OperatorTraits traits;

  Vector operator()(const Vector& v) const { return apply(v); }

  static LinearOperator from_dense(const Matrix& A) {
    return {static_cast<int>(A.rows()), [A](const Vector& v) { return Vector(A * v); },
            [A](const Vector& v) { return Vector(A.transpose() * v); }, {true, false, false}};
  }

  static LinearOperator from_csc(CscMatrix A) {
    auto shared = std::make_shared<const CscMatrix>(std::move(A));
    return {shared->n_rows, [shared](const Vector& v) { return shared->multiply(v); },
            [shared](const Vector& v) { return shared->transpose_multiply(v); }, {true, false, true}};
  }

  static LinearOperator identity(int n) {
    return {n, [](const Vector& v) { return v; }, [](const Vector& v) { return v; }, {true, true, false}};
  }
};

namespace detail {

inline double norm_inf_matrix(const Matrix& A) {
  return A.rows() == 0 ? 0.0 : A.cwiseAbs().rowwise().sum().maxCoeff();
}

inline void require_square(const Matrix& A, const char* who) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::InvalidArgument, std::string(who) + ": matrix is not square");
}

}  // namespace detail

// ---- dense direct solvers --------------------------------------------------------

/// Partial-pivoting LU kept for repeated solves (Halley, Potra-Pták, IFT).
class LuFactorization {
 public:
  explicit LuFactorization(const Matrix& A) {
    detail::require_square(A, "lu");
    const double norm = detail::norm_inf_matrix(A);
    lu_.compute(A);
    const double min_pivot = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    const double threshold = kEps * norm * static_cast<double>(A.rows());
    if (!(min_pivot > threshold) || norm == 0.0)
      throw Error(ErrorKind::Singular, "LU pivot magnitude " + std::to_string(min_pivot) + " below " + std::to_string(threshold));
  }

  [[nodiscard]] Vector solve(const Vector& b) const { return lu_.solve(b); }
  [[nodiscard]] Vector solve_transpose(const Vector& b) const { return lu_.transpose().solve(b); }
  [[nodiscard]] Matrix inverse() const { return lu_.inverse(); }
  /// Reciprocal 1-norm condition estimate.
  [[nodiscard]] double rcond() const { return lu_.rcond(); }
  [[nodiscard]] Eigen::Index size() const { return lu_.rows(); }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

inline Vector lu_solve(const Matrix& A, const Vector& b) { return LuFactorization(A).solve(b); }

class QrFactorization {
 public:
  explicit QrFactorization(const Matrix& A) : m_(A.rows()), n_(A.cols()) {
    if (A.rows() < A.cols()) throw Error(ErrorKind::InvalidArgument, "qr: system is wide");
    qr_.compute(A);
    const double norm = detail::norm_inf_matrix(A);
    const double threshold = kEps * norm * static_cast<double>(std::max(m_, n_));
    const auto R = qr_.matrixQR().topLeftCorner(n_, n_).diagonal().cwiseAbs();
    if (norm == 0.0 || !(R.minCoeff() > threshold))
      throw Error(ErrorKind::RankDeficient, "QR diagonal below " + std::to_string(threshold));
  }

  /// Least-squares solution (exact for square nonsingular systems).
  [[nodiscard]] Vector solve(const Vector& b) const {
    Vector qtb = qr_.householderQ().transpose() * b;
    return qr_.matrixQR().topLeftCorner(n_, n_).triangularView<Eigen::Upper>().solve(qtb.head(n_));
  }

  /// Solves Aᵀx = b for square A using Aᵀ = RᵀQᵀ.
  [[nodiscard]] Vector solve_transpose(const Vector& b) const {
    Vector y = qr_.matrixQR().topLeftCorner(n_, n_).triangularView<Eigen::Upper>().transpose().solve(b);
    Vector full = Vector::Zero(m_);
    full.head(n_) = y;
    return qr_.householderQ() * full;
  }

 private:
  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::HouseholderQR<Matrix> qr_;
};

inline Vector qr_solve(const Matrix& A, const Vector& b) { return QrFactorization(A).solve(b); }

class CholeskyFactorization {
 public:
  explicit CholeskyFactorization(const Matrix& A) {
    detail::require_square(A, "cholesky");
    llt_.compute(A);
    if (llt_.info() != Eigen::Success || !(llt_.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0))
      throw Error(ErrorKind::NotPositiveDefinite, "non-positive pivot in Cholesky factorization");
  }

  [[nodiscard]] Vector solve(const Vector& b) const { return llt_.solve(b); }

 private:
  Eigen::LLT<Matrix> llt_;
};

inline Vector cholesky_solve(const Matrix& A, const Vector& b) { return CholeskyFactorization(A).solve(b); }

/// Minimum-norm least squares with singular values below rcond·σ_max dropped.
/// A negative rcond means max(m, n)·ε.
class SvdFactorization {
 public:
  SvdFactorization(const Matrix& A, double rcond)
      : svd_(A, Eigen::ComputeThinU | Eigen::ComputeThinV),
        rcond_(rcond >= 0.0 ? rcond : kEps * static_cast<double>(std::max(A.rows(), A.cols()))) {}

  [[nodiscard]] Vector solve(const Vector& b) const { return apply(svd_.matrixU(), svd_.matrixV(), b); }
  [[nodiscard]] Vector solve_transpose(const Vector& b) const { return apply(svd_.matrixV(), svd_.matrixU(), b); }
  [[nodiscard]] const Vector& singular_values() const { return svd_.singularValues(); }

 private:
  [[nodiscard]] Vector apply(const Matrix& left, const Matrix& right, const Vector& b) const {
    const Vector& s = svd_.singularValues();
    const double smax = s.size() ? s[0] : 0.0;
    Vector c = left.transpose() * b;
    for (Eigen::Index i = 0; i < s.size(); ++i) c[i] = (s[i] > rcond_ * smax && s[i] > 0.0) ? c[i] / s[i] : 0.0;
    return right * c;
  }

  Eigen::JacobiSVD<Matrix> svd_;
  double rcond_;
};

inline Vector svd_solve(const Matrix& A, const Vector& b, double rcond = 1e-12) {
  return SvdFactorization(A, rcond).solve(b);
}

/// 1-norm condition estimate from the LU factors; infinite when singular.
inline double condition_estimate(const Matrix& A) {
  try {
    const double rc = LuFactorization(A).rcond();
    return rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

// ---- ILU(0) ------------------------------------------------------------------------

/// Incomplete LU with zero fill-in on A's pattern. apply() performs the two
/// triangular solves, i.e. approximates A⁻¹v.
class Ilu0 {
 public:
  explicit Ilu0(const CscMatrix& A) : n_(A.n_rows) {
    if (A.n_rows != A.n_cols) throw Error(ErrorKind::InvalidArgument, "ilu0: matrix is not square");
    // Row-major copy (CSR) of A.
    const CscMatrix t = A.transposed();
    row_ptr_ = t.col_ptr;
    col_idx_ = t.row_idx;
    vals_ = t.values;
    diag_.assign(static_cast<std::size_t>(n_), -1);
    for (int i = 0; i < n_; ++i) {
      for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
        if (col_idx_[static_cast<std::size_t>(k)] == i) diag_[static_cast<std::size_t>(i)] = k;
      if (diag_[static_cast<std::size_t>(i)] < 0)
        throw Error(ErrorKind::ZeroPivot, "ilu0: diagonal entry " + std::to_string(i) + " is not structural");
    }

    std::vector<int> pos(static_cast<std::size_t>(n_), -1);
    for (int i = 0; i < n_; ++i) {
      const int rb = row_ptr_[static_cast<std::size_t>(i)];
      const int re = row_ptr_[static_cast<std::size_t>(i) + 1];
      for (int k = rb; k < re; ++k) pos[static_cast<std::size_t>(col_idx_[static_cast<std::size_t>(k)])] = k;
      for (int k = rb; k < re; ++k) {
        const int c = col_idx_[static_cast<std::size_t>(k)];
        if (c >= i) break;
        const double pivot = vals_[static_cast<std::size_t>(diag_[static_cast<std::size_t>(c)])];
        if (pivot == 0.0) throw Error(ErrorKind::ZeroPivot, "ilu0: zero pivot at row " + std::to_string(c));
        const double lik = vals_[static_cast<std::size_t>(k)] / pivot;
        vals_[static_cast<std::size_t>(k)] = lik;
        for (int m = diag_[static_cast<std::size_t>(c)] + 1; m < row_ptr_[static_cast<std::size_t>(c) + 1]; ++m) {
          const int p = pos[static_cast<std::size_t>(col_idx_[static_cast<std::size_t>(m)])];
          if (p >= 0) vals_[static_cast<std::size_t>(p)] -= lik * vals_[static_cast<std::size_t>(m)];
        }
      }
      for (int k = rb; k < re; ++k) pos[static_cast<std::size_t>(col_idx_[static_cast<std::size_t>(k)])] = -1;
      if (vals_[static_cast<std::size_t>(diag_[static_cast<std::size_t>(i)])] == 0.0)
        throw Error(ErrorKind::ZeroPivot, "ilu0: zero pivot at row " + std::to_string(i));
    }
  }

  [[nodiscard]] Vector apply(const Vector& v) const {
    Vector x = v;
    for (int i = 0; i < n_; ++i) {
      double s = x[i];
      for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < diag_[static_cast<std::size_t>(i)]; ++k)
        s -= vals_[static_cast<std::size_t>(k)] * x[col_idx_[static_cast<std::size_t>(k)]];
      x[i] = s;
    }
    for (int i = n_ - 1; i >= 0; --i) {
      double s = x[i];
      for (int k = diag_[static_cast<std::size_t>(i)] + 1; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
        s -= vals_[static_cast<std::size_t>(k)] * x[col_idx_[static_cast<std::size_t>(k)]];
      x[i] = s / vals_[static_cast<std::size_t>(diag_[static_cast<std::size_t>(i)])];
    }
    return x;
  }

  [[nodiscard]] LinearOperator as_operator() const {
    auto self = std::make_shared<const Ilu0>(*this);
    return {n_, [self](const Vector& v) { return self->apply(v); }, {}, {true, false, true}};
  }

  /// Unit lower factor L and upper factor U as dense matrices (tests).
  [[nodiscard]] std::pair<Matrix, Matrix> factors_dense() const {
    Matrix L = Matrix::Identity(n_, n_);
    Matrix U = Matrix::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
        const int c = col_idx_[static_cast<std::size_t>(k)];
        (c < i ? L(i, c) : U(i, c)) = vals_[static_cast<std::size_t>(k)];
      }
    return {L, U};
  }

 private:
  int n_;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> vals_;
  std::vector<int> diag_;
};

inline Ilu0 ilu0(const CscMatrix& A) { return Ilu0(A); }

// ---- GMRES ---------------------------------------------------------------------------

struct GmresResult {
  Vector x;
  int iterations = 0;
  double rel_residual = 1.0;  // preconditioned, relative to ‖M⁻¹b‖
  bool converged = false;
  std::vector<double> residual_history;  // preconditioned residual norms, starting at ‖M⁻¹b‖
};

/// Left-preconditioned GMRES from x0 = 0 with modified Gram-Schmidt Arnoldi
/// and Givens rotations. No restarts: at most krylov_dim iterations.
inline GmresResult gmres(const LinearOperator& op, const Vector& b, int krylov_dim,
                         const std::optional<LinearOperator>& precond = std::nullopt, double reltol = 1e-8) {
  if (krylov_dim < 1) throw Error(ErrorKind::InvalidArgument, "gmres: krylov_dim must be at least 1");
  const int n = op.n;
  auto M = [&](const Vector& v) -> Vector { return precond ? precond->apply(v) : v; };

  GmresResult res;
  res.x = Vector::Zero(n);
  const Vector r0 = M(b);
  const double beta = r0.norm();
  res.residual_history.push_back(beta);
  if (!std::isfinite(beta)) throw Error(ErrorKind::Breakdown, "gmres: non-finite right-hand side");
  if (beta == 0.0) {
    res.rel_residual = 0.0;
    res.converged = true;
    return res;
  }

  const int m = std::min(krylov_dim, n);
  Matrix V(n, m + 1);
  Matrix H = Matrix::Zero(m + 1, m);
  Vector cs = Vector::Zero(m);
  Vector sn = Vector::Zero(m);
  Vector g = Vector::Zero(m + 1);
  V.col(0) = r0 / beta;
  g[0] = beta;

  int k = 0;
  bool happy = false;
  for (; k < m; ++k) {
    Vector w = M(op.apply(V.col(k)));
    const double wnorm0 = w.norm();
    for (int i = 0; i <= k; ++i) {
      H(i, k) = V.col(i).dot(w);
      w -= H(i, k) * V.col(i);
    }
    const double hnext = w.norm();
    H(k + 1, k) = hnext;
    for (int i = 0; i < k; ++i) {
      const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
      H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
      H(i, k) = t;
    }
    const double denom = std::hypot(H(k, k), H(k + 1, k));
    if (denom == 0.0) throw Error(ErrorKind::Breakdown, "gmres: Hessenberg column vanished");
    cs[k] = H(k, k) / denom;
    sn[k] = H(k + 1, k) / denom;
    H(k, k) = denom;
    H(k + 1, k) = 0.0;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];
    res.residual_history.push_back(std::abs(g[k + 1]));

    if (std::abs(g[k + 1]) <= reltol * beta) {
      ++k;
      break;
    }
    if (hnext <= kEps * std::max(wnorm0, kTiny)) {
      // Invariant subspace: the least-squares solution is exact unless the
      // operator is singular on it.
      happy = true;
      ++k;
      break;
    }
    V.col(k + 1) = w / hnext;
  }

  const Vector y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
  res.x = V.leftCols(k) * y;
  res.iterations = k;
  res.rel_residual = std::abs(g[k]) / beta;
  res.converged = res.rel_residual <= reltol;
  if (happy && !res.converged && res.rel_residual > std::sqrt(kEps))
    throw Error(ErrorKind::Breakdown, "gmres: Arnoldi breakdown before convergence");
  if (happy) res.converged = true;
  if (!res.x.allFinite()) throw Error(ErrorKind::Breakdown, "gmres: non-finite iterate");
  return res;
}

// ---- selection policy ------------------------------------------------------------------

struct LinearSolverChoice {
  enum class Kind { LU, QR, Cholesky, SVD, GMRES, Auto };
  enum class Precond { None, ILU0 };

  Kind kind = Kind::Auto;
  int krylov_dim = 0;  // 0: min(n, 100)
  Precond precond = Precond::None;
  double svd_rcond = -1.0;  // negative: max(m, n)·ε

  static LinearSolverChoice lu() { return {Kind::LU}; }
  static LinearSolverChoice qr() { return {Kind::QR}; }
  static LinearSolverChoice cholesky() { return {Kind::Cholesky}; }
  static LinearSolverChoice svd(double rcond = -1.0) { return {Kind::SVD, 0, Precond::None, rcond}; }
  static LinearSolverChoice gmres(int dim = 0, Precond p = Precond::None) { return {Kind::GMRES, dim, p}; }
  static LinearSolverChoice automatic() { return {Kind::Auto}; }

  [[nodiscard]] int krylov_dim_for(int n) const { return krylov_dim > 0 ? krylov_dim : std::min(n, 100); }

  friend bool operator==(const LinearSolverChoice&, const LinearSolverChoice&) = default;
};

constexpr const char* to_string(LinearSolverChoice::Kind k) {
  switch (k) {
    case LinearSolverChoice::Kind::LU: return "LU";
    case LinearSolverChoice::Kind::QR: return "QR";
    case LinearSolverChoice::Kind::Cholesky: return "Cholesky";
    case LinearSolverChoice::Kind::SVD: return "SVD";
    case LinearSolverChoice::Kind::GMRES: return "GMRES";
    case LinearSolverChoice::Kind::Auto: return "Auto";
  }
  return "Unknown";
}

/// Condition numbers above this are "ill-conditioned" (QR).
inline const double kIllConditioned = 1.0 / std::cbrt(kEps);
/// Condition numbers above this are "extremely ill-conditioned" (SVD).
inline const double kExtremelyIllConditioned = 1.0 / std::sqrt(kEps);

struct SystemTraits {
  int n = 0;
  bool is_materialized = true;
  bool is_sparse = false;
  bool is_symmetric = false;
  bool is_positive_definite = false;
  double density = 1.0;
  /// Condition estimate; 0 when unknown.
  double estimated_condition = 0.0;
};

/// Default policy: matrix-free → GMRES; SPD → Cholesky; large or very sparse
/// → GMRES with ILU(0) (no sparse direct factorization here); otherwise
/// LU, escalating to QR and then SVD as conditioning degrades.
inline LinearSolverChoice select_linear_solver(const SystemTraits& t) {
  using K = LinearSolverChoice::Kind;
  if (!t.is_materialized) return LinearSolverChoice::gmres();
  if (t.is_symmetric && t.is_positive_definite) return LinearSolverChoice::cholesky();
  if (t.is_sparse && (t.n > 10000 || t.density < 0.01))
    return LinearSolverChoice::gmres(0, LinearSolverChoice::Precond::ILU0);
  if (t.estimated_condition > kExtremelyIllConditioned) return LinearSolverChoice::svd();
  if (t.estimated_condition > kIllConditioned) return LinearSolverChoice{K::QR};
  return LinearSolverChoice::lu();
}

// ---- reusable solve handle ---------------------------------------------------------------

/// A linear system A·x = b prepared once (factorized or preconditioned) and
/// solvable for several right-hand sides.
class LinearSystem {
 public:
  using Kind = LinearSolverChoice::Kind;

  /// Direct kinds other than Cholesky factor the row-equilibrated matrix
  /// diag(r)·A with r_i = 1/max_j |A_ij|. The singularity guards then judge
  /// pivots against rows of unit size, so a Jacobian whose rows differ by
  /// many orders of magnitude is not mistaken for a singular one.
  static LinearSystem dense(const Matrix& A, const LinearSolverChoice& choice) {
    LinearSystem s;
    s.n_ = static_cast<int>(A.rows());
    if (choice.kind == Kind::Cholesky) {
      auto c = std::make_shared<CholeskyFactorization>(A);
      s.solve_ = [c](const Vector& b) { return c->solve(b); };
      s.solve_t_ = s.solve_;
      s.kind_ = Kind::Cholesky;
      return s;
    }
    if (choice.kind == Kind::GMRES) return matrix_free(LinearOperator::from_dense(A), std::nullopt, choice, 1e-10);

    Vector r = A.cwiseAbs().rowwise().maxCoeff();
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = (r[i] > 0.0 && std::isfinite(r[i])) ? 1.0 / r[i] : 1.0;
    const Matrix As = r.asDiagonal() * A;
    switch (choice.kind) {
      case Kind::LU: s.set(std::make_shared<LuFactorization>(As), Kind::LU, r); break;
      case Kind::QR: s.set(std::make_shared<QrFactorization>(As), Kind::QR, r); break;
      case Kind::SVD: s.set(std::make_shared<SvdFactorization>(As, choice.svd_rcond), Kind::SVD, r); break;
      default: {
        // LU first; fall back on conditioning.
        std::shared_ptr<LuFactorization> lu;
        double cond = std::numeric_limits<double>::infinity();
        try {
          lu = std::make_shared<LuFactorization>(As);
          cond = lu->rcond() > 0.0 ? 1.0 / lu->rcond() : cond;
        } catch (const Error&) {
        }
        SystemTraits t;
        t.n = s.n_;
        t.estimated_condition = cond;
        const auto picked = select_linear_solver(t);
        if (picked.kind == Kind::LU && lu) {
          s.set(lu, Kind::LU, r);
        } else if (picked.kind == Kind::QR) {
          try {
            s.set(std::make_shared<QrFactorization>(As), Kind::QR, r);
          } catch (const Error&) {
            s.set(std::make_shared<SvdFactorization>(As, choice.svd_rcond), Kind::SVD, r);
          }
        } else {
          s.set(std::make_shared<SvdFactorization>(As, choice.svd_rcond), Kind::SVD, r);
        }
        break;
      }
    }
    return s;
  }

  /// Sparse matrices: direct kinds densify; GMRES (and Auto when the policy
  /// says so) iterate on the CSC matrix, optionally with ILU(0).
  static LinearSystem sparse(const CscMatrix& A, const LinearSolverChoice& choice, double reltol) {
    LinearSolverChoice c = choice;
    if (c.kind == Kind::Auto) {
      SystemTraits t;
      t.n = A.n_rows;
      t.is_sparse = true;
      t.density = static_cast<double>(A.nnz()) / (static_cast<double>(A.n_rows) * A.n_cols);
      const auto picked = select_linear_solver(t);
      if (picked.kind != Kind::GMRES) return dense(A.to_dense(), LinearSolverChoice::automatic());
      c = picked;
    }
    if (c.kind != Kind::GMRES) return dense(A.to_dense(), c);
    std::optional<LinearOperator> pre;
    if (c.precond == LinearSolverChoice::Precond::ILU0) {
      try {
        pre = Ilu0(A).as_operator();
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroPivot) throw;
      }
    }
    LinearSystem s = matrix_free(LinearOperator::from_csc(A), pre, c, reltol);
    auto At = std::make_shared<const CscMatrix>(A.transposed());
    const int dim = c.krylov_dim_for(A.n_rows);
    s.solve_t_ = [At, dim, reltol](const Vector& b) {
      return gmres(LinearOperator::from_csc(*At), b, dim, std::nullopt, reltol).x;
    };
    return s;
  }

  static LinearSystem matrix_free(LinearOperator op, std::optional<LinearOperator> precond,
                                  const LinearSolverChoice& choice, double reltol) {
    LinearSystem s;
    s.n_ = op.n;
    s.kind_ = Kind::GMRES;
    const int dim = choice.krylov_dim_for(op.n);
    auto state = std::make_shared<KrylovState>(KrylovState{std::move(op), std::move(precond), dim, reltol, {}});
    s.krylov_ = state;
    s.solve_ = [state](const Vector& b) {
      GmresResult r = gmres(state->op, b, state->dim, state->precond, state->reltol);
      state->last = r;
      return r.x;
    };
    return s;
  }

  [[nodiscard]] Vector solve(const Vector& b) const { return solve_(b); }

  [[nodiscard]] Vector solve_transpose(const Vector& b) const {
    if (!solve_t_) throw Error(ErrorKind::InvalidArgument, "transposed solve unavailable for this system");
    return solve_t_(b);
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] int size() const { return n_; }

  /// Statistics of the most recent GMRES solve, when iterative.
  [[nodiscard]] std::optional<GmresResult> last_krylov() const {
    if (!krylov_) return std::nullopt;
    return krylov_->last;
  }

 private:
  struct KrylovState {
    LinearOperator op;
    std::optional<LinearOperator> precond;
    int dim;
    double reltol;
    GmresResult last;
  };

  template <typename F>
  void set(std::shared_ptr<F> f, Kind k) {
    solve_ = [f](const Vector& b) { return f->solve(b); };
    solve_t_ = [f](const Vector& b) { return f->solve_transpose(b); };
    kind_ = k;
  }

  // (diag(r)·A)·x = diag(r)·b, and Aᵀ·x = b  ⇔  x = diag(r)·(diag(r)·A)⁻ᵀ·b.
  template <typename F>
  void set(std::shared_ptr<F> f, Kind k, const Vector& r) {
    solve_ = [f, r](const Vector& b) { return f->solve(Vector(r.cwiseProduct(b))); };
    solve_t_ = [f, r](const Vector& b) { return Vector(r.cwiseProduct(f->solve_transpose(b))); };
    kind_ = k;
  }

  int n_ = 0;
  Kind kind_ = Kind::LU;
  std::function<Vector(const Vector&)> solve_;
  std::function<Vector(const Vector&)> solve_t_;
  std::shared_ptr<KrylovState> krylov_;
};

}  // namespace nlkit
