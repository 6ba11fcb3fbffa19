#pragma once

// Sparsity detection, greedy distance-1 coloring of the column (or row)
// intersection graph, and compressed Jacobian evaluation with decompression
// into compressed-sparse-column storage.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "nlkit/autodiff.hpp"
#include "nlkit/core.hpp"
#include "nlkit/sparsity_pattern.hpp"

namespace nlkit {

// ---- compressed sparse column storage -------------------------------------------

struct CscMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int> col_ptr{0};
  std::vector<int> row_idx;
  std::vector<double> values;

  static CscMatrix from_pattern(const SparsityPattern& pattern) {
    CscMatrix m;
    m.n_rows = pattern.n_rows();
    m.n_cols = pattern.n_cols();
    m.col_ptr.assign(static_cast<std::size_t>(m.n_cols) + 1, 0);
    for (const auto& e : pattern.nonzeros()) ++m.col_ptr[static_cast<std::size_t>(e.second) + 1];
    for (std::size_t j = 0; j < static_cast<std::size_t>(m.n_cols); ++j) m.col_ptr[j + 1] += m.col_ptr[j];
    m.row_idx.resize(pattern.nnz());
    m.values.assign(pattern.nnz(), 0.0);
    std::vector<int> next(m.col_ptr.begin(), m.col_ptr.end() - 1);
    // nonzeros are sorted by (row, col), so rows arrive ascending per column
    for (const auto& [r, c] : pattern.nonzeros()) m.row_idx[static_cast<std::size_t>(next[static_cast<std::size_t>(c)]++)] = r;
    return m;
  }

  /// Keeps the entries of `dense` that lie on `pattern`.
  static CscMatrix restrict(const Matrix& dense, const SparsityPattern& pattern) {
    CscMatrix m = from_pattern(pattern);
    for (int j = 0; j < m.n_cols; ++j)
      for (int k = m.col_ptr[static_cast<std::size_t>(j)]; k < m.col_ptr[static_cast<std::size_t>(j) + 1]; ++k)
        m.values[static_cast<std::size_t>(k)] = dense(m.row_idx[static_cast<std::size_t>(k)], j);
    return m;
  }

  static CscMatrix from_dense(const Matrix& dense) {
    std::vector<SparsityPattern::Entry> e;
    for (int i = 0; i < dense.rows(); ++i)
      for (int j = 0; j < dense.cols(); ++j)
        if (dense(i, j) != 0.0) e.emplace_back(i, j);
    return restrict(dense, SparsityPattern(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()), std::move(e)));
  }

  [[nodiscard]] std::size_t nnz() const { return values.size(); }

  [[nodiscard]] SparsityPattern pattern() const {
    std::vector<SparsityPattern::Entry> e;
    e.reserve(nnz());
    for (int j = 0; j < n_cols; ++j)
      for (int k = col_ptr[static_cast<std::size_t>(j)]; k < col_ptr[static_cast<std::size_t>(j) + 1]; ++k)
        e.emplace_back(row_idx[static_cast<std::size_t>(k)], j);
    return {n_rows, n_cols, std::move(e)};
  }

  /// Pointer to the stored entry (row, col), or nullptr when structurally zero.
  [[nodiscard]] const double* find(int row, int col) const {
    const auto b = row_idx.begin() + col_ptr[static_cast<std::size_t>(col)];
    const auto e = row_idx.begin() + col_ptr[static_cast<std::size_t>(col) + 1];
    const auto it = std::lower_bound(b, e, row);
    if (it == e || *it != row) return nullptr;
    return &values[static_cast<std::size_t>(it - row_idx.begin())];
  }
  double* find(int row, int col) {
    return const_cast<double*>(static_cast<const CscMatrix&>(*this).find(row, col));
  }

  [[nodiscard]] Vector multiply(const Vector& x) const {
    Vector y = Vector::Zero(n_rows);
    for (int j = 0; j < n_cols; ++j) {
      const double xj = x[j];
      for (int k = col_ptr[static_cast<std::size_t>(j)]; k < col_ptr[static_cast<std::size_t>(j) + 1]; ++k)
        y[row_idx[static_cast<std::size_t>(k)]] += values[static_cast<std::size_t>(k)] * xj;
    }
    return y;
  }

  [[nodiscard]] Vector transpose_multiply(const Vector& x) const {
    Vector y = Vector::Zero(n_cols);
    for (int j = 0; j < n_cols; ++j) {
      double s = 0.0;
      for (int k = col_ptr[static_cast<std::size_t>(j)]; k < col_ptr[static_cast<std::size_t>(j) + 1]; ++k)
        s += values[static_cast<std::size_t>(k)] * x[row_idx[static_cast<std::size_t>(k)]];
      y[j] = s;
    }
    return y;
  }

  [[nodiscard]] Matrix to_dense() const {
    Matrix d = Matrix::Zero(n_rows, n_cols);
    for (int j = 0; j < n_cols; ++j)
      for (int k = col_ptr[static_cast<std::size_t>(j)]; k < col_ptr[static_cast<std::size_t>(j) + 1]; ++k)
        d(row_idx[static_cast<std::size_t>(k)], j) = values[static_cast<std::size_t>(k)];
    return d;
  }

  [[nodiscard]] CscMatrix transposed() const {
    CscMatrix t;
    t.n_rows = n_cols;
    t.n_cols = n_rows;
    t.col_ptr.assign(static_cast<std::size_t>(n_rows) + 1, 0);
    for (int r : row_idx) ++t.col_ptr[static_cast<std::size_t>(r) + 1];
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_rows); ++i) t.col_ptr[i + 1] += t.col_ptr[i];
    t.row_idx.resize(nnz());
    t.values.resize(nnz());
    std::vector<int> next(t.col_ptr.begin(), t.col_ptr.end() - 1);
    for (int j = 0; j < n_cols; ++j) {
      for (int k = col_ptr[static_cast<std::size_t>(j)]; k < col_ptr[static_cast<std::size_t>(j) + 1]; ++k) {
        const int r = row_idx[static_cast<std::size_t>(k)];
        const auto dst = static_cast<std::size_t>(next[static_cast<std::size_t>(r)]++);
        t.row_idx[dst] = j;
        t.values[dst] = values[static_cast<std::size_t>(k)];
      }
    }
    return t;
  }

  /// Adds `shift` to every diagonal entry; the diagonal must be structural.
  void add_to_diagonal(double shift) {
    for (int i = 0; i < std::min(n_rows, n_cols); ++i) {
      double* d = find(i, i);
      if (d == nullptr) throw Error(ErrorKind::InvalidArgument, "diagonal entry is not structurally present");
      *d += shift;
    }
  }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
};

// ---- coloring -----------------------------------------------------------------------

struct Coloring {
  enum class Axis { Columns, Rows };

  Axis axis = Axis::Columns;
  std::vector<int> color_of;  // 1-based colors, one per column (or row)
  int num_colors = 0;

  /// Members of each color class, 0-based indices, ascending.
  [[nodiscard]] std::vector<std::vector<int>> classes() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(num_colors));
    for (std::size_t i = 0; i < color_of.size(); ++i) out[static_cast<std::size_t>(color_of[i] - 1)].push_back(static_cast<int>(i));
    return out;
  }

  /// No two same-colored columns share a structural row (rows: share a column).
  [[nodiscard]] bool is_valid(const SparsityPattern& pattern) const {
    const SparsityPattern p = axis == Axis::Columns ? pattern : pattern.transposed();
    if (static_cast<int>(color_of.size()) != p.n_cols()) return false;
    for (int c : color_of)
      if (c < 1 || c > num_colors) return false;
    for (const auto& cols : p.columns_by_row()) {
      std::vector<int> seen;
      for (int j : cols) seen.push_back(color_of[static_cast<std::size_t>(j)]);
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) return false;
    }
    return true;
  }
};

/// Greedy coloring in natural index order; each vertex takes the smallest
/// color not used by an adjacent (structurally overlapping) vertex.
inline Coloring color_greedy(const SparsityPattern& pattern, Coloring::Axis axis = Coloring::Axis::Columns) {
  if (pattern.empty()) throw Error(ErrorKind::InvalidArgument, "cannot color an empty pattern");
  const SparsityPattern p = axis == Coloring::Axis::Columns ? pattern : pattern.transposed();
  const auto rows_of = p.rows_by_column();
  const auto cols_of = p.columns_by_row();
  const int n = p.n_cols();

  Coloring c;
  c.axis = axis;
  c.color_of.assign(static_cast<std::size_t>(n), 0);
  std::vector<int> forbidden_by(static_cast<std::size_t>(n) + 2, -1);  // color -> last vertex that forbade it
  for (int j = 0; j < n; ++j) {
    for (int r : rows_of[static_cast<std::size_t>(j)]) {
      for (int k : cols_of[static_cast<std::size_t>(r)]) {
        const int ck = c.color_of[static_cast<std::size_t>(k)];
        if (k != j && ck > 0) forbidden_by[static_cast<std::size_t>(ck)] = j;
      }
    }
    int color = 1;
    while (forbidden_by[static_cast<std::size_t>(color)] == j) ++color;
    c.color_of[static_cast<std::size_t>(j)] = color;
    c.num_colors = std::max(c.num_colors, color);
  }
  return c;
}

/// Max vertex degree of the intersection graph (bounds greedy color count).
inline int intersection_graph_max_degree(const SparsityPattern& pattern, Coloring::Axis axis = Coloring::Axis::Columns) {
  const SparsityPattern p = axis == Coloring::Axis::Columns ? pattern : pattern.transposed();
  const auto rows_of = p.rows_by_column();
  const auto cols_of = p.columns_by_row();
  int best = 0;
  for (int j = 0; j < p.n_cols(); ++j) {
    std::vector<int> nb;
    for (int r : rows_of[static_cast<std::size_t>(j)])
      for (int k : cols_of[static_cast<std::size_t>(r)])
        if (k != j) nb.push_back(k);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    best = std::max(best, static_cast<int>(nb.size()));
  }
  return best;
}

// ---- detection -------------------------------------------------------------------

/// Union of the structural nonzeros of dense dual Jacobians sampled at
/// u0 + uniform(−1, 1)·max(1, ‖u0‖∞). Branches that depend on the state can
/// hide entries that no sample happens to exercise.
inline SparsityPattern detect_pattern_approx(const Problem& problem, int n_samples = 3, std::uint64_t seed = 0) {
  if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "n_samples must be at least 1");
  if (!problem.residual.dual_capable())
    throw Error(ErrorKind::NotDifferentiable, "sparsity detection needs a dual-capable residual");
  const int n = problem.size();
  const double scale = std::max(1.0, inf_norm(problem.u0));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  std::vector<char> structural(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n_samples; ++s) {
    Matrix J;
    bool ok = false;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
      Vector u = problem.u0;
      for (int i = 0; i < n; ++i) u[i] += scale * unif(rng);
      try {
        J = dense_jacobian(problem.residual, u, problem.params, DiffMode::dual());
        ok = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NonFinite) throw;
      }
    }
    if (!ok) throw Error(ErrorKind::NonFinite, "sparsity detection: sampled Jacobian stayed non-finite after 3 resamples");
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (J(i, j) != 0.0) structural[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = 1;
  }
  std::vector<SparsityPattern::Entry> e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (structural[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]) e.emplace_back(i, j);
  return {n, n, std::move(e)};
}

// ---- compressed evaluation ----------------------------------------------------------

namespace detail {

inline void require_decompressible(const SparsityPattern& pattern, const Coloring& coloring) {
  if (!coloring.is_valid(pattern))
    throw Error(ErrorKind::DecompressionConflict,
                "two same-colored vectors overlap structurally; coloring is invalid for this pattern");
}

}  // namespace detail

/// Sparse Jacobian from one seeded sweep per color. Column colorings seed
/// sums of same-colored basis vectors; row colorings build each compressed
/// row wᵀJ from forward sweeps (no reverse mode here). `sweeps`, when given,
/// receives the number of seeded directions evaluated.
inline CscMatrix compressed_jacobian(const ResidualFunction& f, const Vector& u, const Vector& p,
                                     const SparsityPattern& pattern, const Coloring& coloring,
                                     const DiffMode& mode = DiffMode::dual(), int* sweeps = nullptr) {
  detail::require_decompressible(pattern, coloring);
  const int n = static_cast<int>(u.size());
  CscMatrix J = CscMatrix::from_pattern(pattern);
  const int ncolors = coloring.num_colors;
  int done = 0;

  if (coloring.axis == Coloring::Axis::Columns) {
    // compressed(i, c) = Σ_{j : color(j) = c} J(i, j)
    Matrix compressed(n, ncolors);
    if (mode.is_dual()) {
      std::vector<DualChunk> ud = detail::promote<DualChunk>(u);
      const auto pd = detail::promote<DualChunk>(p);
      std::vector<DualChunk> fd(static_cast<std::size_t>(n));
      for (int c0 = 0; c0 < ncolors; c0 += kChunkWidth) {
        const int width = std::min(kChunkWidth, ncolors - c0);
        for (int j = 0; j < n; ++j) {
          const int k = coloring.color_of[static_cast<std::size_t>(j)] - 1 - c0;
          ud[static_cast<std::size_t>(j)].d.fill(0.0);
          if (k >= 0 && k < width) ud[static_cast<std::size_t>(j)].d[static_cast<std::size_t>(k)] = 1.0;
        }
        f(detail::cspan(ud), detail::cspan(pd), detail::mspan(fd));
        for (int k = 0; k < width; ++k) {
          for (int i = 0; i < n; ++i) compressed(i, c0 + k) = fd[static_cast<std::size_t>(i)].d[static_cast<std::size_t>(k)];
          ++done;
        }
      }
    } else {
      for (int c = 0; c < ncolors; ++c) {
        Vector seed = Vector::Zero(n);
        for (int j = 0; j < n; ++j)
          if (coloring.color_of[static_cast<std::size_t>(j)] == c + 1) seed[j] = 1.0;
        compressed.col(c) = jvp(f, u, p, seed, mode);
        ++done;
      }
    }
    for (int j = 0; j < J.n_cols; ++j) {
      const int c = coloring.color_of[static_cast<std::size_t>(j)] - 1;
      for (int k = J.col_ptr[static_cast<std::size_t>(j)]; k < J.col_ptr[static_cast<std::size_t>(j) + 1]; ++k)
        J.values[static_cast<std::size_t>(k)] = compressed(J.row_idx[static_cast<std::size_t>(k)], c);
    }
  } else {
    // compressed(c, j) = Σ_{i : color(i) = c} J(i, j), assembled from forward sweeps
    const Matrix dense = dense_jacobian(f, u, p, mode);
    Matrix compressed = Matrix::Zero(ncolors, n);
    for (int i = 0; i < n; ++i) compressed.row(coloring.color_of[static_cast<std::size_t>(i)] - 1) += dense.row(i);
    done = ncolors;
    for (int j = 0; j < J.n_cols; ++j)
      for (int k = J.col_ptr[static_cast<std::size_t>(j)]; k < J.col_ptr[static_cast<std::size_t>(j) + 1]; ++k) {
        const int r = J.row_idx[static_cast<std::size_t>(k)];
        J.values[static_cast<std::size_t>(k)] = compressed(coloring.color_of[static_cast<std::size_t>(r)] - 1, j);
      }
  }
  if (!J.all_finite()) throw Error(ErrorKind::NonFinite, "compressed_jacobian produced a non-finite value");
  if (sweeps != nullptr) *sweeps = done;
  return J;
}

}  // namespace nlkit
