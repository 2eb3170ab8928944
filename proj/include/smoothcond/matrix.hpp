#pragma once

// Dense square matrices with an attached zero pattern, plus the small set of
// exact linear-algebra kernels (LU, determinant, inverse, solve, minors) the
// condition-number code is built on. Storage is row-major and indices are
// 0-based internally; text formats are 1-based.

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace smoothcond {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  /// Builds from nested rows; all rows must have equal length.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  double max_abs() const;
  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

/// Set S of positions allowed to be nonzero in an n x n matrix.
class SparsityPattern {
 public:
  SparsityPattern() = default;
  /// Empty pattern of dimension n.
  explicit SparsityPattern(std::size_t n) : n_(n), mask_(n * n, false) {}
  /// Throws std::invalid_argument on out-of-range or duplicate positions.
  SparsityPattern(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> positions);

  static SparsityPattern full(std::size_t n);
  static SparsityPattern lower_triangular(std::size_t n);
  static SparsityPattern tridiagonal(std::size_t n);
  static SparsityPattern diagonal(std::size_t n);
  /// Positions of the nonzero entries of a square matrix.
  static SparsityPattern support_of(const Matrix& a);

  std::size_t dim() const { return n_; }
  std::size_t size() const { return count_; }
  bool contains(std::size_t i, std::size_t j) const { return mask_[i * n_ + j]; }
  void insert(std::size_t i, std::size_t j);

  /// Row-major list of positions.
  std::vector<std::pair<std::size_t, std::size_t>> positions() const;

  bool is_lower_triangular() const;
  /// True iff S is a subset of `other` (same dimension).
  bool subset_of(const SparsityPattern& other) const;

  /// Pattern with row i and column j removed.
  SparsityPattern minor(std::size_t i, std::size_t j) const;
  /// Pattern with column k widened to all rows.
  SparsityPattern with_full_column(std::size_t k) const;

  friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t count_ = 0;
  std::vector<bool> mask_;
};

/// Returns a row->column perfect matching of the bipartite graph with edges S,
/// or nullopt if none exists (augmenting paths, Kuhn's algorithm).
std::optional<std::vector<std::size_t>> perfect_matching(const SparsityPattern& pattern);

/// True iff some invertible matrix has support in S.
bool is_admissible(const SparsityPattern& pattern);

/// For a matrix supported on S, returns the mask of positions (k,l) where the
/// inverse can be nonzero: (k,l) is set iff S minus row l and column k still
/// admits a perfect matching. All-false if S is not admissible.
std::vector<bool> structural_inverse_mask(const SparsityPattern& pattern);

/// n x n matrix whose support lies in a SparsityPattern.
class PatternedMatrix {
 public:
  PatternedMatrix() = default;
  /// Throws std::invalid_argument if `entries` is not square of the pattern's
  /// dimension or has a nonzero outside the pattern.
  PatternedMatrix(SparsityPattern pattern, Matrix entries);
  /// Full pattern.
  explicit PatternedMatrix(Matrix entries);

  std::size_t dim() const { return pattern_.dim(); }
  const SparsityPattern& pattern() const { return pattern_; }
  const Matrix& entries() const { return entries_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }

 private:
  SparsityPattern pattern_;
  Matrix entries_;
};

/// P*A = L*U with P given as a row permutation: row i of P*A is row perm[i] of A.
struct LuFactorization {
  std::vector<std::size_t> permutation;
  Matrix lower;  // unit lower triangular
  Matrix upper;
  int sign = 1;

  double determinant() const;
  /// Solves A x = b using the factors.
  Vector solve(std::span<const double> b) const;
  Matrix inverse() const;
};

/// Partial-pivoting LU. Returns nullopt (singular) when the support admits no
/// perfect matching or a pivot falls to n * 2^-52 * max|working entry| or below.
std::optional<LuFactorization> lu_factor(const Matrix& a);
std::optional<LuFactorization> lu_factor(const PatternedMatrix& a);

/// 0 for singular input; 1 for the empty matrix.
double determinant(const PatternedMatrix& a);
std::optional<Matrix> inverse(const PatternedMatrix& a);
/// Throws std::invalid_argument if b has the wrong length.
std::optional<Vector> solve(const PatternedMatrix& a, std::span<const double> b);

/// Deletes row i and column j; the result carries the induced pattern.
PatternedMatrix minor(const PatternedMatrix& a, std::size_t i, std::size_t j);
/// Replaces column k by b; column k of the pattern becomes fully populated.
PatternedMatrix replace_column(const PatternedMatrix& a, std::size_t k, std::span<const double> b);

}  // namespace smoothcond
