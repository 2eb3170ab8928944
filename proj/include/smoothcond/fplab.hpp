#pragma once

// Reduced-precision arithmetic and the forward-substitution accuracy lab.
//
// A PrecisionConfig with p significand bits models a machine with unit
// roundoff 2^-p and an unbounded exponent range. Every emulated operation is
// rounded once, to nearest with ties to even, from its exact real result: the
// hardware double result is corrected with the exactly representable error
// term (fma / TwoSum) whenever it lands on a rounding midpoint.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smoothcond/matrix.hpp"
#include "smoothcond/smoothed.hpp"

namespace smoothcond {

class PrecisionConfig {
 public:
  /// Throws std::invalid_argument unless 2 <= bits <= 52.
  explicit PrecisionConfig(int significand_bits);

  int significand_bits() const { return bits_; }
  double unit_roundoff() const { return unit_roundoff_; }
  double eps_mach() const { return unit_roundoff_; }

 private:
  int bits_;
  double unit_roundoff_;
};

/// z rounded to p significand bits, ties to even. Non-finite values pass through.
double round_p(double z, const PrecisionConfig& cfg);

/// Correctly rounded p-bit arithmetic on doubles.
double emulated_mul(double a, double b, const PrecisionConfig& cfg);
double emulated_sub(double a, double b, const PrecisionConfig& cfg);
double emulated_div(double a, double b, const PrecisionConfig& cfg);

/// x_i = (b_i - sum_{j<i} l_ij x_j) / l_ii with the running difference
/// accumulated for j = 1..i-1 and every multiply, subtract and divide rounded.
/// Throws std::invalid_argument on a zero diagonal entry or a nonzero above it.
Vector forward_substitution(const Matrix& lower, std::span<const double> b, const PrecisionConfig& cfg);
/// Same recurrence in plain double arithmetic.
Vector forward_substitution(const Matrix& lower, std::span<const double> b);

/// max_i |x_hat_i - x_ref_i| / |x_ref_i| with 0/0 -> 0 and nonzero/0 -> +inf.
double rel_error(std::span<const double> x_hat, std::span<const double> x_ref);

/// log10(rel / eps_mach); +inf for rel = +inf; 0 for rel = 0.
double loss_of_precision(double rel, const PrecisionConfig& cfg);

/// Componentwise backward error max_i |b - L x_hat|_i / (|L| |x_hat|)_i, with the
/// residual evaluated by a compensated dot product.
double backward_error_omega(const Matrix& lower, std::span<const double> b, std::span<const double> x_hat);

/// The factor B in the backward bound B * eps_mach: 2 log2 n, floored at 1 so
/// that the single rounding of a 1x1 solve is still covered.
double backward_error_factor(std::size_t n);

/// log10(B) + log10(cond_solve(L, b)); +inf when the condition is +inf.
double lop_prediction(const Matrix& lower, std::span<const double> b, const PrecisionConfig& cfg);

/// log10((1+sigma)/sigma) + 5 log10 n + log10(log2 n) + 1.452.
double bound_expected_lop(std::size_t n, double sigma);

struct SolveAccuracyReport {
  std::uint64_t seed = 0;
  Vector x_ref;
  Vector x_hat;
  double rel_error = 0.0;
  double lop = 0.0;
  double omega = 0.0;
  double backward_bound = 0.0;
  double lop_prediction = 0.0;
};

/// Solves L x = b in double and in emulated precision and compares.
SolveAccuracyReport analyze_solve(const Matrix& lower, std::span<const double> b, const PrecisionConfig& cfg);

inline constexpr double kLopSlackDigits = 0.5;

struct AccuracySummary {
  std::size_t n = 0;
  double sigma = 0.0;
  int precision_bits = 0;
  std::uint64_t seed = 0;
  std::vector<SolveAccuracyReport> samples;
  double mean_lop = 0.0;
  double mean_prediction = 0.0;
  double expected_lop_bound = 0.0;
  std::size_t infinite_lop = 0;            // samples with LoP = +inf (left out of the means)
  std::size_t prediction_violations = 0;   // lop > prediction + 0.5
  std::size_t backward_warnings = 0;       // bound < omega <= 2 * bound
  std::size_t backward_failures = 0;       // omega > 2 * bound

  bool backward_check_pass() const { return backward_failures == 0; }
  /// At most 0.1% prediction violations and mean LoP <= bound + 0.5.
  bool lop_check_pass() const;
};

/// Draws M samples (L, b) from a model with a lower-triangular pattern that
/// contains the diagonal. A missing center rhs is taken as zero. M >= 100.
AccuracySummary run_accuracy_experiment(const GaussianModel& model, const PrecisionConfig& cfg,
                                        std::size_t samples, std::uint64_t seed, unsigned workers = 1);

std::string accuracy_csv(const AccuracySummary& s);
std::string accuracy_report(const AccuracySummary& s);

}  // namespace smoothcond
