#include "smoothcond/fplab.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "smoothcond/cond.hpp"
#include "smoothcond/io.hpp"
#include "smoothcond/parallel.hpp"
#include "smoothcond/rng.hpp"

namespace smoothcond {

PrecisionConfig::PrecisionConfig(int significand_bits)
    : bits_(significand_bits), unit_roundoff_(std::ldexp(1.0, -significand_bits)) {
  if (significand_bits < 2 || significand_bits > 52)
    throw std::invalid_argument("precision must be between 2 and 52 significand bits, got " +
                                std::to_string(significand_bits));
}

namespace {

// Rounds the exact value d + tail to p bits, where d is a double and tail is
// smaller than half an ulp of d. Only the sign of tail matters: it decides the
// direction when d sits exactly on a midpoint of the p-bit grid.
double round_exact(double d, double tail, int p) {
  // A zero double result with a nonzero tail only arises from underflow,
  // which is not emulated.
  if (!std::isfinite(d) || d == 0.0) return d;
  int exponent = 0;
  const double scaled = std::ldexp(std::frexp(d, &exponent), p);
  const double below = std::floor(scaled);
  double rounded;
  if (tail != 0.0 && scaled - below == 0.5)
    rounded = tail > 0.0 ? below + 1.0 : below;
  else
    rounded = std::nearbyint(scaled);
  return std::ldexp(rounded, exponent - p);
}

}  // namespace

double round_p(double z, const PrecisionConfig& cfg) { return round_exact(z, 0.0, cfg.significand_bits()); }

double emulated_mul(double a, double b, const PrecisionConfig& cfg) {
  const double product = a * b;
  return round_exact(product, std::fma(a, b, -product), cfg.significand_bits());
}

double emulated_sub(double a, double b, const PrecisionConfig& cfg) {
  // TwoSum(a, -b): s + e == a - b exactly.
  const double s = a - b;
  const double bv = s - a;
  const double e = (a - (s - bv)) + (-b - bv);
  return round_exact(s, e, cfg.significand_bits());
}

double emulated_div(double a, double b, const PrecisionConfig& cfg) {
  const double q = a / b;
  if (!std::isfinite(q)) return q;
  // a - q b is exact; the true quotient is q + (a - q b) / b.
  const double r = std::fma(-q, b, a);
  const double tail = r == 0.0 ? 0.0 : ((r > 0.0) == (b > 0.0) ? 1.0 : -1.0);
  return round_exact(q, tail, cfg.significand_bits());
}

namespace {

void check_triangular_system(const Matrix& lower, std::span<const double> b) {
  const std::size_t n = lower.rows();
  if (!lower.square()) throw std::invalid_argument("forward_substitution: matrix is not square");
  if (b.size() != n) throw std::invalid_argument("forward_substitution: right-hand side has wrong length");
  for (std::size_t i = 0; i < n; ++i) {
    if (lower(i, i) == 0.0)
      throw std::invalid_argument("forward_substitution: zero diagonal entry at row " + std::to_string(i + 1));
    for (std::size_t j = i + 1; j < n; ++j)
      if (lower(i, j) != 0.0) throw std::invalid_argument("forward_substitution: matrix is not lower triangular");
  }
}

}  // namespace

Vector forward_substitution(const Matrix& lower, std::span<const double> b, const PrecisionConfig& cfg) {
  check_triangular_system(lower, b);
  const std::size_t n = lower.rows();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s = emulated_sub(s, emulated_mul(lower(i, j), x[j], cfg), cfg);
    x[i] = emulated_div(s, lower(i, i), cfg);
  }
  return x;
}

Vector forward_substitution(const Matrix& lower, std::span<const double> b) {
  check_triangular_system(lower, b);
  const std::size_t n = lower.rows();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= lower(i, j) * x[j];
    x[i] = s / lower(i, i);
  }
  return x;
}

double rel_error(std::span<const double> x_hat, std::span<const double> x_ref) {
  return comp_distance(x_hat, x_ref);
}

double loss_of_precision(double rel, const PrecisionConfig& cfg) {
  if (std::isinf(rel)) return kInf;
  if (rel == 0.0) return 0.0;
  return std::log10(rel / cfg.eps_mach());
}

double backward_error_omega(const Matrix& lower, std::span<const double> b, std::span<const double> x_hat) {
  const std::size_t n = lower.rows();
  if (b.size() != n || x_hat.size() != n) throw std::invalid_argument("backward_error_omega: dimension mismatch");
  double omega = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Compensated b_i - sum_j l_ij x_j (Ogita-Rump-Oishi Dot2).
    double sum = b[i];
    double err = 0.0;
    double scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double l = lower(i, j);
      if (l == 0.0) continue;
      const double p = -l * x_hat[j];
      const double pe = std::fma(-l, x_hat[j], -p);
      const double s = sum + p;
      const double bv = s - sum;
      err += ((sum - (s - bv)) + (p - bv)) + pe;
      sum = s;
      scale += std::abs(l * x_hat[j]);
    }
    const double residual = std::abs(sum + err);
    if (scale == 0.0) {
      if (residual != 0.0) return kInf;
      continue;
    }
    omega = std::max(omega, residual / scale);
  }
  return omega;
}

double backward_error_factor(std::size_t n) {
  return std::max(1.0, 2.0 * std::log2(static_cast<double>(n)));
}

double lop_prediction(const Matrix& lower, std::span<const double> b, const PrecisionConfig&) {
  const std::size_t n = lower.rows();
  const double c = cond_solve(PatternedMatrix(SparsityPattern::lower_triangular(n), lower), b);
  if (std::isinf(c)) return kInf;
  return std::log10(backward_error_factor(n)) + std::log10(c);
}

double bound_expected_lop(std::size_t n, double sigma) {
  const double nn = static_cast<double>(n);
  // log10(2 log2 n) + 2.65 / ln 10 == log10(log2 n) + 1.452 for n >= 2.
  return std::log10(sigma_factor(sigma)) + 5.0 * std::log10(nn) + std::log10(backward_error_factor(n) / 2.0) +
         1.452;
}

SolveAccuracyReport analyze_solve(const Matrix& lower, std::span<const double> b, const PrecisionConfig& cfg) {
  SolveAccuracyReport r;
  r.backward_bound = backward_error_factor(lower.rows()) * cfg.eps_mach();
  bool singular = false;
  for (std::size_t i = 0; i < lower.rows(); ++i) singular = singular || lower(i, i) == 0.0;
  if (singular) {
    r.rel_error = r.lop = r.omega = r.lop_prediction = kInf;
    return r;
  }
  r.x_ref = forward_substitution(lower, b);
  r.x_hat = forward_substitution(lower, b, cfg);
  r.rel_error = rel_error(r.x_hat, r.x_ref);
  r.lop = loss_of_precision(r.rel_error, cfg);
  r.omega = backward_error_omega(lower, b, r.x_hat);
  r.lop_prediction = lop_prediction(lower, b, cfg);
  return r;
}

bool AccuracySummary::lop_check_pass() const {
  const double allowed = 0.001 * static_cast<double>(samples.size());
  return static_cast<double>(prediction_violations) <= allowed && mean_lop <= expected_lop_bound + kLopSlackDigits;
}

AccuracySummary run_accuracy_experiment(const GaussianModel& model, const PrecisionConfig& cfg,
                                        std::size_t samples, std::uint64_t seed, unsigned workers) {
  model.validate();
  const std::size_t n = model.dim();
  const auto& pattern = model.pattern();
  if (!pattern.is_lower_triangular()) throw std::invalid_argument("accuracy experiment needs a lower-triangular pattern");
  for (std::size_t i = 0; i < n; ++i)
    if (!pattern.contains(i, i)) throw std::invalid_argument("accuracy experiment needs the diagonal in the pattern");
  if (samples < 100) throw std::invalid_argument("at least 100 samples are required");

  GaussianModel m = model;
  if (!m.center_rhs) m.center_rhs = Vector(n, 0.0);

  AccuracySummary s;
  s.n = n;
  s.sigma = model.sigma;
  s.precision_bits = cfg.significand_bits();
  s.seed = seed;
  s.expected_lop_bound = bound_expected_lop(n, model.sigma);
  s.samples = parallel_map<SolveAccuracyReport>(samples, workers, [&](std::size_t i) {
    const std::uint64_t sample_seed = stream_seed(seed, i);
    const Sample draw = sample(m, sample_seed);
    SolveAccuracyReport r = analyze_solve(draw.matrix.entries(), *draw.rhs, cfg);
    r.seed = sample_seed;
    return r;
  });

  double lop_sum = 0.0;
  double prediction_sum = 0.0;
  std::size_t finite = 0;
  for (const auto& r : s.samples) {
    if (r.omega > 2.0 * r.backward_bound)
      ++s.backward_failures;
    else if (r.omega > r.backward_bound)
      ++s.backward_warnings;
    if (!std::isfinite(r.lop) || !std::isfinite(r.lop_prediction)) {
      ++s.infinite_lop;
      continue;
    }
    if (r.lop > r.lop_prediction + kLopSlackDigits) ++s.prediction_violations;
    lop_sum += r.lop;
    prediction_sum += r.lop_prediction;
    ++finite;
  }
  s.mean_lop = finite ? lop_sum / static_cast<double>(finite) : kInf;
  s.mean_prediction = finite ? prediction_sum / static_cast<double>(finite) : kInf;
  return s;
}

std::string accuracy_csv(const AccuracySummary& s) {
  std::ostringstream out;
  out << "seed,n,sigma,p,rel_error,lop,omega,backward_bound,lop_prediction\n";
  for (const auto& r : s.samples)
    out << r.seed << ',' << s.n << ',' << format_real(s.sigma) << ',' << s.precision_bits << ','
        << format_real(r.rel_error) << ',' << format_real(r.lop) << ',' << format_real(r.omega) << ','
        << format_real(r.backward_bound) << ',' << format_real(r.lop_prediction) << '\n';
  return out.str();
}

std::string accuracy_report(const AccuracySummary& s) {
  std::ostringstream out;
  const std::size_t m = s.samples.size();
  out << "forward substitution accuracy  n=" << s.n << "  sigma=" << format_real(s.sigma)
      << "  p=" << s.precision_bits << "  samples=" << m << "  seed=" << s.seed << '\n';
  out << "  mean LoP=" << format_real(s.mean_lop) << "  mean prediction=" << format_real(s.mean_prediction)
      << "  expected-LoP bound=" << format_real(s.expected_lop_bound) << '\n';
  out << "  backward error: " << s.backward_warnings << " warnings (bound < omega <= 2 bound), "
      << s.backward_failures << " failures (omega > 2 bound)  "
      << (s.backward_check_pass() ? "PASS" : "FAIL") << '\n';
  out << "  LoP vs prediction + " << format_real(kLopSlackDigits) << ": " << s.prediction_violations
      << " violations, " << s.infinite_lop << " infinite  " << (s.lop_check_pass() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

}  // namespace smoothcond
