#pragma once

// Helpers shared by the unit and acceptance suites. The oracles here are
// written independently of the library's LU path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "smoothcond/matrix.hpp"
#include "smoothcond/rng.hpp"

namespace smoothcond::testing {

/// Leibniz-formula determinant (sum over all permutations). n <= 8.
inline double leibniz_det(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double total = 0.0;
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    double term = inversions % 2 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n && term != 0.0; ++i) term *= a(i, perm[i]);
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

/// True iff some permutation sigma has (i, sigma(i)) in S for all i.
inline bool brute_force_admissible(const SparsityPattern& s) {
  const std::size_t n = s.dim();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) ok = s.contains(i, perm[i]);
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

/// Standard Gaussian entries on the pattern.
inline PatternedMatrix random_patterned(const SparsityPattern& s, CounterRng& rng) {
  Matrix a(s.dim(), s.dim());
  for (auto [i, j] : s.positions()) a(i, j) = rng.normal();
  return {s, std::move(a)};
}

inline Vector random_vector(std::size_t n, CounterRng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

inline double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace smoothcond::testing
