#include "smoothcond/smoothed.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "smoothcond/cond.hpp"
#include "smoothcond/io.hpp"
#include "smoothcond/parallel.hpp"
#include "smoothcond/rng.hpp"

namespace smoothcond {

namespace {

const double kSqrtTwoOverPi = std::sqrt(2.0 / std::numbers::pi);

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void require_sigma(double sigma) { require(sigma > 0.0, "sigma must be positive"); }
void require_beta(double beta) { require(beta > 1.0, "beta must be greater than 1"); }

double log_base(double x, double beta) { return std::log(x) / std::log(beta); }

std::string str(double x) { return format_real(x); }

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::vector<std::string>> csv_rows(std::string_view csv, std::string_view header) {
  std::vector<std::vector<std::string>> rows;
  bool seen_header = false;
  for (const auto& line : split(csv, '\n')) {
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) throw ParseError("unexpected CSV header: " + line);
      seen_header = true;
      continue;
    }
    rows.push_back(split(line, ','));
  }
  if (!seen_header) throw ParseError("missing CSV header");
  return rows;
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) throw ParseError("bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::Determinant: return "det";
    case Quantity::Inversion: return "inv";
    case Quantity::Solve: return "solve";
  }
  return "?";
}

Quantity parse_quantity(std::string_view name) {
  if (name == "det") return Quantity::Determinant;
  if (name == "inv") return Quantity::Inversion;
  if (name == "solve") return Quantity::Solve;
  throw std::invalid_argument("unknown quantity '" + std::string(name) + "' (expected det|inv|solve)");
}

void GaussianModel::validate() const {
  require_sigma(sigma);
  require(pattern().size() >= 1, "pattern must contain at least one position");
  require(is_admissible(pattern()), "pattern is not admissible (no perfect matching)");
  require(center.entries().max_abs() <= 1.0, "center must satisfy ||A_bar||_max <= 1");
  if (center_rhs) {
    require(center_rhs->size() == dim(), "center rhs has wrong length");
    for (double v : *center_rhs) require(std::abs(v) <= 1.0, "center rhs must satisfy ||b_bar||_inf <= 1");
  }
}

Sample sample(const GaussianModel& model, std::uint64_t seed) {
  CounterRng rng(seed);
  const std::size_t n = model.dim();
  Matrix a(n, n);
  for (auto [i, j] : model.pattern().positions()) a(i, j) = model.center(i, j) + model.sigma * rng.normal();
  std::optional<Vector> rhs;
  if (model.center_rhs) {
    rhs = Vector(n);
    for (std::size_t i = 0; i < n; ++i) (*rhs)[i] = (*model.center_rhs)[i] + model.sigma * rng.normal();
  }
  return {PatternedMatrix(model.pattern(), std::move(a)), std::move(rhs)};
}

// ---------------------------------------------------------------- bounds

double sigma_factor(double sigma) {
  require_sigma(sigma);
  if (std::isinf(sigma)) return 1.0;
  return (1.0 + sigma) / sigma;
}

double bound_prop4(double mu, double varsigma, double t) {
  require(varsigma > 0.0, "varsigma must be positive");
  require(t > 1.0, "t must exceed 1");
  return (std::abs(mu) + varsigma) / varsigma / (t - 1.0) * kSqrtTwoOverPi;
}

double bound_det_tail(std::size_t pattern_size, double sigma, double t) {
  const double s = static_cast<double>(pattern_size);
  require(t > s, "t must exceed |S| = " + std::to_string(pattern_size));
  return sigma_factor(sigma) * (s * s / (t - s)) * kSqrtTwoOverPi;
}

double bound_det_logexp(std::size_t pattern_size, double sigma, double beta) {
  require_beta(beta);
  return log_base(sigma_factor(sigma), beta) + 2.0 * log_base(static_cast<double>(pattern_size), beta) +
         1.03 / std::log(beta);
}

double bound_inv_tail(std::size_t n, std::size_t pattern_size, double sigma, double t) {
  const double s = static_cast<double>(pattern_size);
  const double nn = static_cast<double>(n);
  require(t > 2.0 * s, "t must exceed 2|S| = " + std::to_string(2 * pattern_size));
  return sigma_factor(sigma) * (4.0 * nn * nn * s * s / (t - 2.0 * s)) * kSqrtTwoOverPi;
}

double bound_inv_logexp(std::size_t n, std::size_t pattern_size, double sigma, double beta) {
  require_beta(beta);
  const double ns = static_cast<double>(n) * static_cast<double>(pattern_size);
  return log_base(sigma_factor(sigma), beta) + 2.0 * log_base(ns, beta) + 2.65 / std::log(beta);
}

double bound_solve_tail(std::size_t n, std::size_t pattern_size, double sigma, double t) {
  const double s = static_cast<double>(pattern_size);
  require(t > 2.0 * s, "t must exceed 2|S| = " + std::to_string(2 * pattern_size));
  return sigma_factor(sigma) * (4.0 * static_cast<double>(n) * s * s / (t - 2.0 * s)) * kSqrtTwoOverPi;
}

double bound_solve_logexp(std::size_t n, std::size_t pattern_size, double sigma, double beta) {
  require_beta(beta);
  return log_base(sigma_factor(sigma), beta) + 2.0 * log_base(static_cast<double>(pattern_size), beta) +
         log_base(static_cast<double>(n), beta) + 2.65 / std::log(beta);
}

double bound_triangular_tail(std::size_t n, double sigma, double t) {
  const double nn = static_cast<double>(n);
  const double floor = nn * (nn + 1.0);
  require(t > floor, "t must exceed n(n+1) = " + str(floor));
  return sigma_factor(sigma) * (nn * nn * nn * (nn + 1.0) * (nn + 1.0) / (t - floor)) * kSqrtTwoOverPi;
}

double bound_triangular_logexp(std::size_t n, double sigma, double beta) {
  require_beta(beta);
  return log_base(sigma_factor(sigma), beta) + 5.0 * log_base(static_cast<double>(n), beta) +
         2.65 / std::log(beta);
}

double bound_prop2_logexp(double k, double h, double beta) {
  require(k > 0.0, "k must be positive");
  require(h > 0.0, "H must be positive");
  require_beta(beta);
  return log_base(k + h, beta) + 1.0 / std::log(beta);
}

namespace {

bool is_full_lower_triangle(const SparsityPattern& s) {
  return s.is_lower_triangular() && s == SparsityPattern::lower_triangular(s.dim());
}

}  // namespace

double tail_validity_floor(Quantity q, const SparsityPattern& pattern) {
  const double s = static_cast<double>(pattern.size());
  return q == Quantity::Determinant ? s : 2.0 * s;
}

double tail_bound(Quantity q, const SparsityPattern& pattern, double sigma, double t) {
  switch (q) {
    case Quantity::Determinant: return bound_det_tail(pattern.size(), sigma, t);
    case Quantity::Inversion: return bound_inv_tail(pattern.dim(), pattern.size(), sigma, t);
    case Quantity::Solve: return bound_solve_tail(pattern.dim(), pattern.size(), sigma, t);
  }
  throw std::logic_error("tail_bound: bad quantity");
}

double logexp_bound(Quantity q, const SparsityPattern& pattern, double sigma, double beta) {
  switch (q) {
    case Quantity::Determinant: return bound_det_logexp(pattern.size(), sigma, beta);
    case Quantity::Inversion: return bound_inv_logexp(pattern.dim(), pattern.size(), sigma, beta);
    case Quantity::Solve:
      if (is_full_lower_triangle(pattern)) return bound_triangular_logexp(pattern.dim(), sigma, beta);
      return bound_solve_logexp(pattern.dim(), pattern.size(), sigma, beta);
  }
  throw std::logic_error("logexp_bound: bad quantity");
}

double condition_of(Quantity q, const Sample& s) {
  switch (q) {
    case Quantity::Determinant: return cond_det(s.matrix);
    case Quantity::Inversion: return cond_inverse(s.matrix);
    case Quantity::Solve:
      if (!s.rhs) throw std::invalid_argument("solve condition needs a right-hand side");
      return cond_solve(s.matrix, *s.rhs);
  }
  throw std::logic_error("condition_of: bad quantity");
}

// ------------------------------------------------------------ estimators

double wilson_upper(std::size_t successes, std::size_t trials, double z) {
  require(trials > 0, "wilson_upper: no trials");
  const double m = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / m;
  const double z2 = z * z;
  const double centre = p + z2 / (2.0 * m);
  const double spread = z * std::sqrt(p * (1.0 - p) / m + z2 / (4.0 * m * m));
  return std::min(1.0, (centre + spread) / (1.0 + z2 / m));
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Vacuous: return "VACUOUS";
    case Verdict::Fail: return "FAIL";
  }
  return "?";
}

Verdict TailEstimate::verdict(std::size_t i) const {
  if (theoretical[i] >= 1.0) return Verdict::Vacuous;
  return wilson_upper[i] <= theoretical[i] ? Verdict::Pass : Verdict::Fail;
}

bool TailEstimate::all_pass_or_vacuous() const {
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    if (verdict(i) == Verdict::Fail) return false;
  return true;
}

bool LogExpectationEstimate::pass() const { return mean <= theoretical + 3.0 * std_error; }

namespace {

TailEstimate tally(std::string label, std::span<const double> thresholds, std::span<const double> values,
                   std::uint64_t seed) {
  TailEstimate e;
  e.label = std::move(label);
  e.thresholds.assign(thresholds.begin(), thresholds.end());
  e.samples = values.size();
  e.seed = seed;
  for (double t : thresholds) {
    std::size_t count = 0;
    for (double v : values)
      if (v > t) ++count;
    e.exceedances.push_back(count);
    e.empirical.push_back(static_cast<double>(count) / static_cast<double>(values.size()));
    e.wilson_upper.push_back(wilson_upper(count, values.size()));
  }
  return e;
}

void require_rhs_for(const GaussianModel& model, Quantity q) {
  require(q != Quantity::Solve || model.center_rhs.has_value(),
          "quantity solve needs a model with a center right-hand side");
}

}  // namespace

TailEstimate estimate_tail(const GaussianModel& model, Quantity q, std::span<const double> thresholds,
                           std::size_t samples, std::uint64_t seed, unsigned workers) {
  model.validate();
  require_rhs_for(model, q);
  require(samples >= 100, "at least 100 samples are required");
  require(!thresholds.empty(), "no thresholds given");
  const double floor = tail_validity_floor(q, model.pattern());
  for (double t : thresholds)
    require(t > floor, "threshold " + str(t) + " is not above the validity floor " + str(floor) + " for " +
                           std::string(to_string(q)));

  const auto values = parallel_map<double>(samples, workers, [&](std::size_t i) {
    const double c = condition_of(q, sample(model, stream_seed(seed, i)));
    return std::isnan(c) ? kInf : c;
  });
  TailEstimate e = tally(std::string(to_string(q)), thresholds, values, seed);
  for (double t : thresholds) e.theoretical.push_back(tail_bound(q, model.pattern(), model.sigma, t));
  return e;
}

LogExpectationEstimate estimate_logexp(const GaussianModel& model, Quantity q, double beta,
                                       std::size_t samples, std::uint64_t seed, unsigned workers) {
  model.validate();
  require_rhs_for(model, q);
  require(samples >= 100, "at least 100 samples are required");
  require_beta(beta);

  const auto values = parallel_map<double>(samples, workers, [&](std::size_t i) {
    return condition_of(q, sample(model, stream_seed(seed, i)));
  });
  LogExpectationEstimate e;
  e.label = std::string(to_string(q));
  e.beta = beta;
  e.seed = seed;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double c : values) {
    if (!std::isfinite(c)) {
      ++e.excluded;
      continue;
    }
    const double v = log_base(c, beta);
    sum += v;
    sum_sq += v * v;
    ++e.samples;
  }
  if (e.samples > 0) {
    const double m = static_cast<double>(e.samples);
    e.mean = sum / m;
    const double var = e.samples > 1 ? std::max(0.0, (sum_sq - m * e.mean * e.mean) / (m - 1.0)) : 0.0;
    e.std_error = std::sqrt(var / m);
  } else {
    e.mean = kInf;
  }
  e.theoretical = logexp_bound(q, model.pattern(), model.sigma, beta);
  return e;
}

TailEstimate verify_prop4(double mu, double varsigma, std::span<const double> thresholds,
                          std::size_t samples, std::uint64_t seed, unsigned workers) {
  require(varsigma > 0.0, "varsigma must be positive");
  require(samples >= 10000, "at least 10^4 samples are required");
  require(!thresholds.empty(), "no thresholds given");
  for (double t : thresholds) require(t > 1.0, "threshold " + str(t) + " is not above 1");

  // |X| / |X + 1|, so that "> t" is the event |X| > t |X + 1|.
  const auto ratios = parallel_map<double>(samples, workers, [&](std::size_t i) {
    CounterRng rng(stream_seed(seed, i));
    const double x = mu + varsigma * rng.normal();
    const double denom = std::abs(x + 1.0);
    return denom == 0.0 ? kInf : std::abs(x) / denom;
  });
  TailEstimate e = tally("prop4", thresholds, ratios, seed);
  for (double t : thresholds) e.theoretical.push_back(bound_prop4(mu, varsigma, t));
  return e;
}

// ------------------------------------------------------------------- CSV

namespace {
constexpr std::string_view kTailHeader = "label,t,exceedances,empirical,wilson_upper,theoretical,verdict,samples,seed";
constexpr std::string_view kLogexpHeader = "label,beta,mean,std_error,theoretical,verdict,samples,excluded,seed";
}  // namespace

std::string tail_csv(const TailEstimate& e) {
  std::ostringstream out;
  out << kTailHeader << '\n';
  for (std::size_t i = 0; i < e.thresholds.size(); ++i)
    out << e.label << ',' << str(e.thresholds[i]) << ',' << e.exceedances[i] << ',' << str(e.empirical[i])
        << ',' << str(e.wilson_upper[i]) << ',' << str(e.theoretical[i]) << ',' << to_string(e.verdict(i))
        << ',' << e.samples << ',' << e.seed << '\n';
  return out.str();
}

TailEstimate parse_tail_csv(std::string_view csv) {
  TailEstimate e;
  for (const auto& f : csv_rows(csv, kTailHeader)) {
    if (f.size() != 9) throw ParseError("tail CSV: expected 9 fields");
    e.label = f[0];
    e.thresholds.push_back(parse_real(f[1]));
    e.exceedances.push_back(parse_u64(f[2]));
    e.empirical.push_back(parse_real(f[3]));
    e.wilson_upper.push_back(parse_real(f[4]));
    e.theoretical.push_back(parse_real(f[5]));
    e.samples = parse_u64(f[7]);
    e.seed = parse_u64(f[8]);
  }
  return e;
}

std::string logexp_csv(const LogExpectationEstimate& e) {
  std::ostringstream out;
  out << kLogexpHeader << '\n'
      << e.label << ',' << str(e.beta) << ',' << str(e.mean) << ',' << str(e.std_error) << ','
      << str(e.theoretical) << ',' << (e.pass() ? "PASS" : "FAIL") << ',' << e.samples << ',' << e.excluded
      << ',' << e.seed << '\n';
  return out.str();
}

LogExpectationEstimate parse_logexp_csv(std::string_view csv) {
  const auto rows = csv_rows(csv, kLogexpHeader);
  if (rows.size() != 1 || rows[0].size() != 9) throw ParseError("logexp CSV: expected one row of 9 fields");
  const auto& f = rows[0];
  LogExpectationEstimate e;
  e.label = f[0];
  e.beta = parse_real(f[1]);
  e.mean = parse_real(f[2]);
  e.std_error = parse_real(f[3]);
  e.theoretical = parse_real(f[4]);
  e.samples = parse_u64(f[6]);
  e.excluded = parse_u64(f[7]);
  e.seed = parse_u64(f[8]);
  return e;
}

std::string tail_report(const TailEstimate& e) {
  std::ostringstream out;
  out << "tail estimate [" << e.label << "]  samples=" << e.samples << "  seed=" << e.seed << '\n';
  for (std::size_t i = 0; i < e.thresholds.size(); ++i)
    out << "  t=" << str(e.thresholds[i]) << "  empirical=" << str(e.empirical[i])
        << "  wilson99_upper=" << str(e.wilson_upper[i]) << "  bound=" << str(e.theoretical[i]) << "  "
        << to_string(e.verdict(i)) << '\n';
  return out.str();
}

std::string logexp_report(const LogExpectationEstimate& e) {
  std::ostringstream out;
  out << "log-expectation estimate [" << e.label << "]  beta=" << str(e.beta) << "  samples=" << e.samples
      << "  excluded=" << e.excluded << "  seed=" << e.seed << '\n'
      << "  mean=" << str(e.mean) << "  std_error=" << str(e.std_error) << "  bound=" << str(e.theoretical)
      << "  " << (e.pass() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

}  // namespace smoothcond
