#pragma once

// Componentwise condition numbers of det(A), A^{-1} and A^{-1}b, their upper
// bounds in terms of determinant conditions of minors and column-replaced
// matrices, and a derivative-free oracle that evaluates the definition at a
// finite perturbation size.
//
// All values are nonnegative reals; +inf marks singular data or an output
// component that is zero while its sensitivity is not.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "smoothcond/matrix.hpp"

namespace smoothcond {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// max_i |u_i - v_i| / |v_i| with 0/0 -> 0 and nonzero/0 -> +inf.
double comp_distance(std::span<const double> u, std::span<const double> v);

/// Sum over the support of |a_ij * gamma_ji|; +inf when singular; 0 for n = 0.
double cond_det(const PatternedMatrix& a);

double cond_inverse_entry(const PatternedMatrix& a, std::size_t k, std::size_t l);
/// All entries c_kl of the inversion condition; +inf everywhere when singular.
Matrix cond_inverse_entries(const PatternedMatrix& a);
double cond_inverse(const PatternedMatrix& a);

double cond_solve_entry(const PatternedMatrix& a, std::span<const double> b, std::size_t k);
Vector cond_solve_entries(const PatternedMatrix& a, std::span<const double> b);
double cond_solve(const PatternedMatrix& a, std::span<const double> b);

/// cond_det(A) + cond_det(A with row l and column k deleted).
double bound_inverse_entry(const PatternedMatrix& a, std::size_t k, std::size_t l);
/// cond_det(A) + cond_det(A with column k replaced by b).
double bound_solve_entry(const PatternedMatrix& a, std::span<const double> b, std::size_t k);

struct ConditionReport {
  std::size_t n = 0;
  std::size_t pattern_size = 0;
  bool singular = false;
  double c_det = 0.0;
  double c_inv = 0.0;
  Matrix c_inv_entries;
  Matrix bound_inv_entries;
  std::optional<double> c_solve;
  Vector c_solve_entries;
  Vector bound_solve_entries;

  /// max over entries of (c - bound) / bound; <= 0 when every entry is
  /// dominated by its bound. NaN when no entry is finite.
  double inverse_bound_slack() const;
  double solve_bound_slack() const;
};

ConditionReport condition_report(const PatternedMatrix& a,
                                 std::optional<std::span<const double>> b = std::nullopt);

/// Flat "key = value" lines, 1-based entry indices.
std::string to_record(const ConditionReport& r);
std::string condition_csv_header();
std::string to_csv_row(const ConditionReport& r);

/// Scalar output whose condition the oracle estimates.
struct OracleTarget {
  enum class Kind { Determinant, InverseEntry, SolveEntry };
  Kind kind = Kind::Determinant;
  std::size_t k = 0;
  std::size_t l = 0;

  static OracleTarget determinant() { return {Kind::Determinant, 0, 0}; }
  static OracleTarget inverse_entry(std::size_t k, std::size_t l) { return {Kind::InverseEntry, k, l}; }
  static OracleTarget solve_entry(std::size_t k) { return {Kind::SolveEntry, k, 0}; }
};

/// Largest ratio d(F(x), F(a)) / d(x, a) over relative perturbations of size
/// `delta` of the nonzero data entries (entries of A and, for SolveEntry, of b).
/// With m <= 12 perturbable entries every one of the 3^m patterns in
/// {-delta, 0, +delta}^m is tried; otherwise 10^4 random full-magnitude sign
/// patterns seeded by `seed`, followed by single-sign-flip hill climbing from
/// the best of them. Throws std::invalid_argument for delta <= 0 and
/// std::domain_error when F(a) is zero or A is singular.
double oracle_condition(const OracleTarget& target, const PatternedMatrix& a,
                        std::span<const double> b, double delta, std::uint64_t seed = 0x5eedULL);

}  // namespace smoothcond
