#pragma once

// Smoothed model N_S(A_bar, sigma^2 Id): Gaussian perturbations of a center
// matrix restricted to a zero pattern. Sampling, Monte Carlo estimates of
// condition-number tails and log-expectations, and closed-form evaluators of
// the theoretical tail and expectation bounds they are checked against.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smoothcond/matrix.hpp"

namespace smoothcond {

enum class Quantity { Determinant, Inversion, Solve };

std::string_view to_string(Quantity q);
/// Accepts "det", "inv", "solve". Throws std::invalid_argument.
Quantity parse_quantity(std::string_view name);

struct GaussianModel {
  PatternedMatrix center;            // A_bar; carries the pattern S
  std::optional<Vector> center_rhs;  // b_bar
  double sigma = 1.0;

  const SparsityPattern& pattern() const { return center.pattern(); }
  std::size_t dim() const { return center.dim(); }

  /// Throws std::invalid_argument unless sigma > 0, S is nonempty and
  /// admissible, ||A_bar||_max <= 1 and ||b_bar||_inf <= 1.
  void validate() const;
};

struct Sample {
  PatternedMatrix matrix;
  std::optional<Vector> rhs;
};

/// Entries in S drawn from N(a_bar_ij, sigma^2), entries off S exactly zero,
/// rhs (when the model has a center rhs) from N(b_bar_i, sigma^2). A pure
/// function of (model, seed).
Sample sample(const GaussianModel& model, std::uint64_t seed);

/// (1 + sigma) / sigma, and 1 in the limit sigma = +inf.
double sigma_factor(double sigma);

// Theoretical bounds. Arguments outside the stated domain throw
// std::invalid_argument.
double bound_prop4(double mu, double varsigma, double t);                           // t > 1
double bound_det_tail(std::size_t pattern_size, double sigma, double t);            // t > |S|
double bound_det_logexp(std::size_t pattern_size, double sigma, double beta);
double bound_inv_tail(std::size_t n, std::size_t pattern_size, double sigma, double t);    // t > 2|S|
double bound_inv_logexp(std::size_t n, std::size_t pattern_size, double sigma, double beta);
double bound_solve_tail(std::size_t n, std::size_t pattern_size, double sigma, double t);  // t > 2|S|
double bound_solve_logexp(std::size_t n, std::size_t pattern_size, double sigma, double beta);
double bound_triangular_tail(std::size_t n, double sigma, double t);                // t > n(n+1)
double bound_triangular_logexp(std::size_t n, double sigma, double beta);
double bound_prop2_logexp(double k, double h, double beta);

/// Smallest threshold (exclusive) for which the tail bound of `q` is stated.
double tail_validity_floor(Quantity q, const SparsityPattern& pattern);
double tail_bound(Quantity q, const SparsityPattern& pattern, double sigma, double t);
/// For Solve on a lower-triangular pattern this is the triangular bound.
double logexp_bound(Quantity q, const SparsityPattern& pattern, double sigma, double beta);

/// Condition number of the sample for `q`; +inf when singular.
double condition_of(Quantity q, const Sample& s);

inline constexpr double kWilsonZ99 = 2.5758293035489004;

/// Upper end of the Wilson score interval for `successes` out of `trials`.
double wilson_upper(std::size_t successes, std::size_t trials, double z = kWilsonZ99);

enum class Verdict { Pass, Vacuous, Fail };
std::string_view to_string(Verdict v);

struct TailEstimate {
  std::string label;  // quantity name, or "prop4"
  std::vector<double> thresholds;
  std::vector<std::size_t> exceedances;
  std::vector<double> empirical;
  std::vector<double> wilson_upper;
  std::vector<double> theoretical;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  /// Vacuous when the bound is >= 1, otherwise Pass iff wilson_upper <= bound.
  Verdict verdict(std::size_t i) const;
  bool all_pass_or_vacuous() const;

  friend bool operator==(const TailEstimate&, const TailEstimate&) = default;
};

struct LogExpectationEstimate {
  std::string label;
  double beta = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double theoretical = 0.0;
  std::size_t samples = 0;   // samples entering the mean
  std::size_t excluded = 0;  // singular samples left out of the mean
  std::uint64_t seed = 0;

  /// mean <= theoretical + 3 std_error.
  bool pass() const;

  friend bool operator==(const LogExpectationEstimate&, const LogExpectationEstimate&) = default;
};

/// Requires M >= 100 and every threshold above tail_validity_floor.
/// Singular samples exceed every threshold.
TailEstimate estimate_tail(const GaussianModel& model, Quantity q, std::span<const double> thresholds,
                           std::size_t samples, std::uint64_t seed, unsigned workers = 1);

/// Requires M >= 100 and beta > 1.
LogExpectationEstimate estimate_logexp(const GaussianModel& model, Quantity q, double beta,
                                       std::size_t samples, std::uint64_t seed, unsigned workers = 1);

/// Fraction of X ~ N(mu, varsigma^2) with |X| > t |X + 1|, against bound_prop4.
/// Requires every t > 1 and M >= 10^4.
TailEstimate verify_prop4(double mu, double varsigma, std::span<const double> thresholds,
                          std::size_t samples, std::uint64_t seed, unsigned workers = 1);

std::string tail_csv(const TailEstimate& e);
TailEstimate parse_tail_csv(std::string_view csv);
std::string logexp_csv(const LogExpectationEstimate& e);
LogExpectationEstimate parse_logexp_csv(std::string_view csv);

std::string tail_report(const TailEstimate& e);
std::string logexp_report(const LogExpectationEstimate& e);

}  // namespace smoothcond
