#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlkit/error.hpp"

namespace nlkit {

/// Structural nonzero set of a Jacobian. Indices are 0-based internally; the
/// text format is 1-based.
class SparsityPattern {
 public:
  using Entry = std::pair<int, int>;  // (row, col)

  SparsityPattern() = default;

  SparsityPattern(int n_rows, int n_cols, std::vector<Entry> entries)
      : n_rows_(n_rows), n_cols_(n_cols), nonzeros_(std::move(entries)) {
    if (n_rows_ < 1 || n_cols_ < 1) {
      throw Error(ErrorKind::InvalidArgument, "sparsity pattern dimensions must be positive");
    }
    for (const auto& [r, c] : nonzeros_) {
      if (r < 0 || r >= n_rows_ || c < 0 || c >= n_cols_) {
        throw Error(ErrorKind::OutOfRange, "sparsity pattern entry (" + std::to_string(r) + ", " +
                                               std::to_string(c) + ") out of range");
      }
    }
    std::sort(nonzeros_.begin(), nonzeros_.end());
    nonzeros_.erase(std::unique(nonzeros_.begin(), nonzeros_.end()), nonzeros_.end());
  }

  static SparsityPattern dense(int n_rows, int n_cols) {
    std::vector<Entry> e;
    e.reserve(static_cast<std::size_t>(n_rows) * n_cols);
    for (int i = 0; i < n_rows; ++i)
      for (int j = 0; j < n_cols; ++j) e.emplace_back(i, j);
    return {n_rows, n_cols, std::move(e)};
  }

  static SparsityPattern diagonal(int n) {
    std::vector<Entry> e;
    for (int i = 0; i < n; ++i) e.emplace_back(i, i);
    return {n, n, std::move(e)};
  }

  [[nodiscard]] int n_rows() const { return n_rows_; }
  [[nodiscard]] int n_cols() const { return n_cols_; }
  [[nodiscard]] std::size_t nnz() const { return nonzeros_.size(); }
  [[nodiscard]] const std::vector<Entry>& nonzeros() const { return nonzeros_; }
  [[nodiscard]] bool empty() const { return nonzeros_.empty(); }

  [[nodiscard]] double density() const {
    return static_cast<double>(nnz()) / (static_cast<double>(n_rows_) * n_cols_);
  }

  [[nodiscard]] bool contains(int row, int col) const {
    return std::binary_search(nonzeros_.begin(), nonzeros_.end(), Entry{row, col});
  }

  /// Structural rows of each column, ascending.
  [[nodiscard]] std::vector<std::vector<int>> rows_by_column() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n_cols_));
    for (const auto& [r, c] : nonzeros_) out[static_cast<std::size_t>(c)].push_back(r);
    return out;
  }

  /// Structural columns of each row, ascending.
  [[nodiscard]] std::vector<std::vector<int>> columns_by_row() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n_rows_));
    for (const auto& [r, c] : nonzeros_) out[static_cast<std::size_t>(r)].push_back(c);
    return out;
  }

  [[nodiscard]] SparsityPattern transposed() const {
    std::vector<Entry> e;
    e.reserve(nnz());
    for (const auto& [r, c] : nonzeros_) e.emplace_back(c, r);
    return {n_cols_, n_rows_, std::move(e)};
  }

  /// Text format: "n_rows n_cols" then one 1-indexed "row col" pair per line.
  void write(std::ostream& os) const {
    os << n_rows_ << ' ' << n_cols_ << '\n';
    for (const auto& [r, c] : nonzeros_) os << (r + 1) << ' ' << (c + 1) << '\n';
  }

  static SparsityPattern read(std::istream& is) {
    int nr = 0;
    int nc = 0;
    if (!(is >> nr >> nc)) throw Error(ErrorKind::Io, "sparsity pattern: missing header line");
    std::vector<Entry> e;
    int r = 0;
    int c = 0;
    while (is >> r >> c) e.emplace_back(r - 1, c - 1);
    if (!is.eof()) throw Error(ErrorKind::Io, "sparsity pattern: malformed entry line");
    return {nr, nc, std::move(e)};
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    write(os);
  }

  static SparsityPattern load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
    return read(is);
  }

  friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;

 private:
  int n_rows_ = 0;
  int n_cols_ = 0;
  std::vector<Entry> nonzeros_;
};

}  // namespace nlkit
