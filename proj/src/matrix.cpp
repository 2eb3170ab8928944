#include "smoothcond/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace smoothcond {

// ---------------------------------------------------------------- Matrix

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix product: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matrix-vector product: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

// ------------------------------------------------------- SparsityPattern

SparsityPattern::SparsityPattern(std::size_t n,
                                 std::span<const std::pair<std::size_t, std::size_t>> positions)
    : SparsityPattern(n) {
  for (auto [i, j] : positions) {
    if (i >= n || j >= n)
      throw std::invalid_argument("SparsityPattern: position (" + std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) + ") outside [n]x[n]");
    if (contains(i, j))
      throw std::invalid_argument("SparsityPattern: duplicate position (" + std::to_string(i + 1) +
                                  "," + std::to_string(j + 1) + ")");
    insert(i, j);
  }
}

SparsityPattern SparsityPattern::full(std::size_t n) {
  SparsityPattern s(n);
  std::fill(s.mask_.begin(), s.mask_.end(), true);
  s.count_ = n * n;
  return s;
}

SparsityPattern SparsityPattern::lower_triangular(std::size_t n) {
  SparsityPattern s(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) s.insert(i, j);
  return s;
}

SparsityPattern SparsityPattern::tridiagonal(std::size_t n) {
  SparsityPattern s(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) s.insert(i, i - 1);
    s.insert(i, i);
    if (i + 1 < n) s.insert(i, i + 1);
  }
  return s;
}

SparsityPattern SparsityPattern::diagonal(std::size_t n) {
  SparsityPattern s(n);
  for (std::size_t i = 0; i < n; ++i) s.insert(i, i);
  return s;
}

SparsityPattern SparsityPattern::support_of(const Matrix& a) {
  if (!a.square()) throw std::invalid_argument("support_of: matrix is not square");
  SparsityPattern s(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0) s.insert(i, j);
  return s;
}

void SparsityPattern::insert(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_) throw std::out_of_range("SparsityPattern::insert: index out of range");
  auto ref = mask_[i * n_ + j];
  if (!ref) {
    ref = true;
    ++count_;
  }
}

std::vector<std::pair<std::size_t, std::size_t>> SparsityPattern::positions() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (contains(i, j)) out.emplace_back(i, j);
  return out;
}

bool SparsityPattern::is_lower_triangular() const {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (contains(i, j)) return false;
  return true;
}

bool SparsityPattern::subset_of(const SparsityPattern& other) const {
  if (n_ != other.n_) return false;
  for (std::size_t k = 0; k < mask_.size(); ++k)
    if (mask_[k] && !other.mask_[k]) return false;
  return true;
}

SparsityPattern SparsityPattern::minor(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw std::out_of_range("SparsityPattern::minor: index out of range");
  SparsityPattern s(n_ - 1);
  for (std::size_t r = 0, rr = 0; r < n_; ++r) {
    if (r == i) continue;
    for (std::size_t c = 0, cc = 0; c < n_; ++c) {
      if (c == j) continue;
      if (contains(r, c)) s.insert(rr, cc);
      ++cc;
    }
    ++rr;
  }
  return s;
}

SparsityPattern SparsityPattern::with_full_column(std::size_t k) const {
  if (k >= n_) throw std::out_of_range("SparsityPattern::with_full_column: index out of range");
  SparsityPattern s = *this;
  for (std::size_t i = 0; i < n_; ++i) s.insert(i, k);
  return s;
}

// ------------------------------------------------------------- matching

namespace {

constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

bool augment(const SparsityPattern& s, std::size_t row, std::vector<std::size_t>& col_owner,
             std::vector<char>& visited) {
  for (std::size_t c = 0; c < s.dim(); ++c) {
    if (!s.contains(row, c) || visited[c]) continue;
    visited[c] = 1;
    if (col_owner[c] == kUnmatched || augment(s, col_owner[c], col_owner, visited)) {
      col_owner[c] = row;
      return true;
    }
  }
  return false;
}

}  // namespace

std::optional<std::vector<std::size_t>> perfect_matching(const SparsityPattern& pattern) {
  const std::size_t n = pattern.dim();
  std::vector<std::size_t> col_owner(n, kUnmatched);
  std::vector<char> visited(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(pattern, r, col_owner, visited)) return std::nullopt;
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t c = 0; c < n; ++c) row_to_col[col_owner[c]] = c;
  return row_to_col;
}

bool is_admissible(const SparsityPattern& pattern) { return perfect_matching(pattern).has_value(); }

std::vector<bool> structural_inverse_mask(const SparsityPattern& pattern) {
  const std::size_t n = pattern.dim();
  std::vector<bool> mask(n * n, false);
  const auto matching = perfect_matching(pattern);
  if (!matching) return mask;

  std::vector<std::size_t> col_owner(n);
  for (std::size_t r = 0; r < n; ++r) col_owner[(*matching)[r]] = r;

  // Row r reaches row col_owner[c] whenever (r,c) is in S. Removing row l and
  // column k leaves a perfect matching iff l is reachable from col_owner[k].
  std::vector<std::vector<std::size_t>> next(n);
  for (auto [r, c] : pattern.positions()) next[r].push_back(col_owner[c]);

  std::vector<char> seen(n);
  std::vector<std::size_t> stack;
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(seen.begin(), seen.end(), 0);
    const std::size_t start = col_owner[k];
    seen[start] = 1;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t r = stack.back();
      stack.pop_back();
      for (std::size_t q : next[r])
        if (!seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
    }
    for (std::size_t l = 0; l < n; ++l) mask[k * n + l] = seen[l] != 0;
  }
  return mask;
}

// ------------------------------------------------------- PatternedMatrix

PatternedMatrix::PatternedMatrix(SparsityPattern pattern, Matrix entries)
    : pattern_(std::move(pattern)), entries_(std::move(entries)) {
  const std::size_t n = pattern_.dim();
  if (entries_.rows() != n || entries_.cols() != n)
    throw std::invalid_argument("PatternedMatrix: entries must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (entries_(i, j) != 0.0 && !pattern_.contains(i, j))
        throw std::invalid_argument("PatternedMatrix: nonzero entry at (" + std::to_string(i + 1) +
                                    "," + std::to_string(j + 1) + ") outside the pattern");
}

PatternedMatrix::PatternedMatrix(Matrix entries)
    : PatternedMatrix(SparsityPattern::full(entries.rows()), std::move(entries)) {}

// ------------------------------------------------------------------- LU

double LuFactorization::determinant() const {
  double d = sign;
  for (std::size_t i = 0; i < upper.rows(); ++i) d *= upper(i, i);
  return d;
}

Vector LuFactorization::solve(std::span<const double> b) const {
  const std::size_t n = upper.rows();
  if (b.size() != n) throw std::invalid_argument("LuFactorization::solve: dimension mismatch");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[permutation[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lower(i, j) * y[j];
    y[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= upper(i, j) * y[j];
    y[i] = s / upper(i, i);
  }
  return y;
}

Matrix LuFactorization::inverse() const {
  const std::size_t n = upper.rows();
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = solve(e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

std::optional<LuFactorization> lu_factor(const Matrix& a) {
  if (!a.square()) throw std::invalid_argument("lu_factor: matrix is not square");
  const std::size_t n = a.rows();
  if (!is_admissible(SparsityPattern::support_of(a))) return std::nullopt;

  Matrix w = a;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  int sign = 1;
  const double scale = static_cast<double>(n) * std::ldexp(1.0, -52);
  const double original_max = a.max_abs();

  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    double working_max = original_max;
    for (std::size_t r = c; r < n; ++r) {
      if (std::abs(w(r, c)) > std::abs(w(p, c))) p = r;
      for (std::size_t j = c; j < n; ++j) working_max = std::max(working_max, std::abs(w(r, j)));
    }
    if (std::abs(w(p, c)) <= scale * working_max) return std::nullopt;
    if (p != c) {
      std::swap_ranges(w.row(p).begin(), w.row(p).end(), w.row(c).begin());
      std::swap(perm[p], perm[c]);
      sign = -sign;
    }
    const double pivot = w(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double m = w(r, c) / pivot;
      w(r, c) = m;
      if (m == 0.0) continue;
      for (std::size_t j = c + 1; j < n; ++j) w(r, j) -= m * w(c, j);
    }
  }

  LuFactorization f{std::move(perm), Matrix::identity(n), Matrix(n, n), sign};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j < i)
        f.lower(i, j) = w(i, j);
      else
        f.upper(i, j) = w(i, j);
    }
  return f;
}

std::optional<LuFactorization> lu_factor(const PatternedMatrix& a) { return lu_factor(a.entries()); }

double determinant(const PatternedMatrix& a) {
  const auto lu = lu_factor(a);
  return lu ? lu->determinant() : 0.0;
}

std::optional<Matrix> inverse(const PatternedMatrix& a) {
  const auto lu = lu_factor(a);
  if (!lu) return std::nullopt;
  Matrix inv = lu->inverse();
  // Entries that vanish for every matrix with this support are set to exact
  // zeros instead of keeping pivoting roundoff.
  const std::size_t n = a.dim();
  const auto mask = structural_inverse_mask(SparsityPattern::support_of(a.entries()));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      if (!mask[k * n + l]) inv(k, l) = 0.0;
  return inv;
}

std::optional<Vector> solve(const PatternedMatrix& a, std::span<const double> b) {
  if (b.size() != a.dim()) throw std::invalid_argument("solve: right-hand side has wrong length");
  const auto lu = lu_factor(a);
  if (!lu) return std::nullopt;
  return lu->solve(b);
}

PatternedMatrix minor(const PatternedMatrix& a, std::size_t i, std::size_t j) {
  const std::size_t n = a.dim();
  if (i >= n || j >= n) throw std::out_of_range("minor: index out of range");
  Matrix m(n - 1, n - 1);
  for (std::size_t r = 0, rr = 0; r < n; ++r) {
    if (r == i) continue;
    for (std::size_t c = 0, cc = 0; c < n; ++c) {
      if (c == j) continue;
      m(rr, cc++) = a(r, c);
    }
    ++rr;
  }
  return {a.pattern().minor(i, j), std::move(m)};
}

PatternedMatrix replace_column(const PatternedMatrix& a, std::size_t k, std::span<const double> b) {
  const std::size_t n = a.dim();
  if (k >= n) throw std::out_of_range("replace_column: index out of range");
  if (b.size() != n) throw std::invalid_argument("replace_column: vector has wrong length");
  Matrix m = a.entries();
  for (std::size_t i = 0; i < n; ++i) m(i, k) = b[i];
  return {a.pattern().with_full_column(k), std::move(m)};
}

}  // namespace smoothcond
