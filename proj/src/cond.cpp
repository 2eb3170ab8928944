#include "smoothcond/cond.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "smoothcond/io.hpp"
#include "smoothcond/rng.hpp"

namespace smoothcond {

namespace {

// Relative sensitivity divided by |output|, with the zero-output convention.
double ratio_or_inf(double numerator, double output) {
  if (output != 0.0) return numerator / std::abs(output);
  return numerator > 0.0 ? kInf : 0.0;
}

void check_index(std::size_t i, std::size_t n, const char* what) {
  if (i >= n) throw std::out_of_range(std::string(what) + ": index out of range");
}

void check_rhs(const PatternedMatrix& a, std::span<const double> b) {
  if (b.size() != a.dim()) throw std::invalid_argument("right-hand side has wrong length");
}

}  // namespace

double comp_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("comp_distance: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (v[i] != 0.0)
      d = std::max(d, std::abs(u[i] - v[i]) / std::abs(v[i]));
    else if (u[i] != 0.0)
      return kInf;
  }
  return d;
}

double cond_det(const PatternedMatrix& a) {
  const std::size_t n = a.dim();
  if (n == 0) return 0.0;
  const auto gamma = inverse(a);
  if (!gamma) return kInf;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sum += std::abs(a(i, j) * (*gamma)(j, i));
  return sum;
}

Matrix cond_inverse_entries(const PatternedMatrix& a) {
  const std::size_t n = a.dim();
  const auto gamma = inverse(a);
  if (!gamma) return Matrix(n, n, kInf);

  // d gamma_kl / d a_ij = -gamma_ki gamma_jl, so the numerator is (|G| |A| |G|)_kl.
  Matrix abs_gamma(n, n);
  Matrix abs_a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      abs_gamma(i, j) = std::abs((*gamma)(i, j));
      abs_a(i, j) = std::abs(a(i, j));
    }
  const Matrix numerator = abs_gamma * abs_a * abs_gamma;
  Matrix c(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) c(k, l) = ratio_or_inf(numerator(k, l), (*gamma)(k, l));
  return c;
}

double cond_inverse_entry(const PatternedMatrix& a, std::size_t k, std::size_t l) {
  check_index(k, a.dim(), "cond_inverse_entry");
  check_index(l, a.dim(), "cond_inverse_entry");
  const auto gamma = inverse(a);
  if (!gamma) return kInf;
  double numerator = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      numerator += std::abs(a(i, j) * (*gamma)(k, i) * (*gamma)(j, l));
  return ratio_or_inf(numerator, (*gamma)(k, l));
}

double cond_inverse(const PatternedMatrix& a) {
  const Matrix c = cond_inverse_entries(a);
  double m = 0.0;
  for (double v : c.data()) m = std::max(m, v);
  return m;
}

Vector cond_solve_entries(const PatternedMatrix& a, std::span<const double> b) {
  check_rhs(a, b);
  const std::size_t n = a.dim();
  const auto gamma = inverse(a);
  const auto x = solve(a, b);
  if (!gamma || !x) return Vector(n, kInf);

  // d x_k / d a_ij = -gamma_ki x_j and d x_k / d b_i = gamma_ki.
  Vector row_weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = std::abs(b[i]);
    for (std::size_t j = 0; j < n; ++j) s += std::abs(a(i, j) * (*x)[j]);
    row_weight[i] = s;
  }
  Vector c(n);
  for (std::size_t k = 0; k < n; ++k) {
    double numerator = 0.0;
    for (std::size_t i = 0; i < n; ++i) numerator += std::abs((*gamma)(k, i)) * row_weight[i];
    c[k] = ratio_or_inf(numerator, (*x)[k]);
  }
  return c;
}

double cond_solve_entry(const PatternedMatrix& a, std::span<const double> b, std::size_t k) {
  check_index(k, a.dim(), "cond_solve_entry");
  return cond_solve_entries(a, b)[k];
}

double cond_solve(const PatternedMatrix& a, std::span<const double> b) {
  const Vector c = cond_solve_entries(a, b);
  double m = 0.0;
  for (double v : c) m = std::max(m, v);
  return m;
}

double bound_inverse_entry(const PatternedMatrix& a, std::size_t k, std::size_t l) {
  check_index(k, a.dim(), "bound_inverse_entry");
  check_index(l, a.dim(), "bound_inverse_entry");
  return cond_det(a) + cond_det(minor(a, l, k));
}

double bound_solve_entry(const PatternedMatrix& a, std::span<const double> b, std::size_t k) {
  check_index(k, a.dim(), "bound_solve_entry");
  check_rhs(a, b);
  return cond_det(a) + cond_det(replace_column(a, k, b));
}

// ------------------------------------------------------------ report

namespace {

double max_slack(std::span<const double> values, std::span<const double> bounds) {
  double worst = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(bounds[i])) continue;
    const double slack = bounds[i] > 0.0 ? (values[i] - bounds[i]) / bounds[i] : values[i];
    if (std::isnan(worst) || slack > worst) worst = slack;
  }
  return worst;
}

}  // namespace

double ConditionReport::inverse_bound_slack() const {
  return max_slack(c_inv_entries.data(), bound_inv_entries.data());
}

double ConditionReport::solve_bound_slack() const {
  return max_slack(c_solve_entries, bound_solve_entries);
}

ConditionReport condition_report(const PatternedMatrix& a, std::optional<std::span<const double>> b) {
  const std::size_t n = a.dim();
  ConditionReport r;
  r.n = n;
  r.pattern_size = a.pattern().size();
  r.singular = !lu_factor(a).has_value();
  r.c_det = cond_det(a);
  r.c_inv_entries = cond_inverse_entries(a);
  r.c_inv = 0.0;
  for (double v : r.c_inv_entries.data()) r.c_inv = std::max(r.c_inv, v);

  r.bound_inv_entries = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      r.bound_inv_entries(k, l) = r.c_det + cond_det(minor(a, l, k));

  if (b) {
    check_rhs(a, *b);
    r.c_solve_entries = cond_solve_entries(a, *b);
    double m = 0.0;
    for (double v : r.c_solve_entries) m = std::max(m, v);
    r.c_solve = m;
    r.bound_solve_entries.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      r.bound_solve_entries[k] = r.c_det + cond_det(replace_column(a, k, *b));
  }
  return r;
}

std::string to_record(const ConditionReport& r) {
  std::ostringstream out;
  out << "n = " << r.n << '\n';
  out << "pattern_size = " << r.pattern_size << '\n';
  out << "singular = " << (r.singular ? "true" : "false") << '\n';
  out << "c_det = " << format_real(r.c_det) << '\n';
  out << "c_inv = " << format_real(r.c_inv) << '\n';
  for (std::size_t k = 0; k < r.n; ++k)
    for (std::size_t l = 0; l < r.n; ++l)
      out << "c_inv[" << k + 1 << "," << l + 1 << "] = " << format_real(r.c_inv_entries(k, l))
          << "  bound = " << format_real(r.bound_inv_entries(k, l)) << '\n';
  out << "inv_bound_slack = " << format_real(r.inverse_bound_slack()) << '\n';
  if (r.c_solve) {
    out << "c_solve = " << format_real(*r.c_solve) << '\n';
    for (std::size_t k = 0; k < r.n; ++k)
      out << "c_solve[" << k + 1 << "] = " << format_real(r.c_solve_entries[k])
          << "  bound = " << format_real(r.bound_solve_entries[k]) << '\n';
    out << "solve_bound_slack = " << format_real(r.solve_bound_slack()) << '\n';
  }
  return out.str();
}

std::string condition_csv_header() {
  return "n,pattern_size,c_det,c_inv,c_solve,inv_bound_slack,solve_bound_slack";
}

std::string to_csv_row(const ConditionReport& r) {
  std::ostringstream out;
  out << r.n << ',' << r.pattern_size << ',' << format_real(r.c_det) << ',' << format_real(r.c_inv)
      << ',' << (r.c_solve ? format_real(*r.c_solve) : "") << ','
      << format_real(r.inverse_bound_slack()) << ','
      << (r.c_solve ? format_real(r.solve_bound_slack()) : "");
  return out.str();
}

// ------------------------------------------------------------ oracle

namespace {

struct DataRef {
  bool in_rhs;
  std::size_t i;
  std::size_t j;
};

class OracleProblem {
 public:
  OracleProblem(const OracleTarget& target, const PatternedMatrix& a, std::span<const double> b,
                double delta)
      : target_(target), a_(a.entries()), b_(b.begin(), b.end()), delta_(delta) {
    const std::size_t n = a.dim();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (a(i, j) != 0.0) refs_.push_back({false, i, j});
    if (target.kind == OracleTarget::Kind::SolveEntry)
      for (std::size_t i = 0; i < n; ++i)
        if (b_[i] != 0.0) refs_.push_back({true, i, 0});
    for (const auto& r : refs_) base_data_.push_back(value(a_, b_, r));

    const auto f0 = evaluate(a_, b_);
    if (!f0) throw std::domain_error("oracle_condition: matrix is singular");
    if (*f0 == 0.0) throw std::domain_error("oracle_condition: output component is zero");
    f0_ = *f0;
  }

  std::size_t size() const { return refs_.size(); }

  /// signs[i] in {-1, 0, +1}; returns 0 for the unperturbed point.
  double ratio(std::span<const int> signs) {
    Matrix pa = a_;
    Vector pb = b_;
    Vector data(refs_.size());
    bool moved = false;
    for (std::size_t t = 0; t < refs_.size(); ++t) {
      const double v = base_data_[t] + signs[t] * delta_ * std::abs(base_data_[t]);
      moved = moved || signs[t] != 0;
      data[t] = v;
      if (refs_[t].in_rhs)
        pb[refs_[t].i] = v;
      else
        pa(refs_[t].i, refs_[t].j) = v;
    }
    if (!moved) return 0.0;
    const auto f = evaluate(pa, pb);
    if (!f) return 0.0;
    const double out = comp_distance(std::span<const double>(&*f, 1), std::span<const double>(&f0_, 1));
    return out / comp_distance(data, base_data_);
  }

 private:
  static double value(const Matrix& a, const Vector& b, const DataRef& r) {
    return r.in_rhs ? b[r.i] : a(r.i, r.j);
  }

  std::optional<double> evaluate(const Matrix& a, const Vector& b) const {
    const auto lu = lu_factor(a);
    if (!lu) return std::nullopt;
    switch (target_.kind) {
      case OracleTarget::Kind::Determinant:
        return lu->determinant();
      case OracleTarget::Kind::InverseEntry: {
        Vector e(a.rows(), 0.0);
        e[target_.l] = 1.0;
        return lu->solve(e)[target_.k];
      }
      case OracleTarget::Kind::SolveEntry:
        return lu->solve(b)[target_.k];
    }
    return std::nullopt;
  }

  OracleTarget target_;
  Matrix a_;
  Vector b_;
  double delta_;
  std::vector<DataRef> refs_;
  Vector base_data_;
  double f0_ = 0.0;
};

constexpr std::size_t kExhaustiveLimit = 12;
constexpr int kRandomPatterns = 10000;
constexpr int kMaxClimbPasses = 64;

}  // namespace

double oracle_condition(const OracleTarget& target, const PatternedMatrix& a,
                        std::span<const double> b, double delta, std::uint64_t seed) {
  if (!(delta > 0.0)) throw std::invalid_argument("oracle_condition: delta must be positive");
  const std::size_t n = a.dim();
  if (target.kind == OracleTarget::Kind::SolveEntry && b.size() != n)
    throw std::invalid_argument("oracle_condition: right-hand side has wrong length");
  if (target.k >= n || (target.kind == OracleTarget::Kind::InverseEntry && target.l >= n))
    throw std::out_of_range("oracle_condition: index out of range");

  OracleProblem problem(target, a, b, delta);
  const std::size_t m = problem.size();
  std::vector<int> signs(m, 0);
  double best = 0.0;

  if (m <= kExhaustiveLimit) {
    // Base-3 odometer over {-1, 0, +1}^m.
    std::fill(signs.begin(), signs.end(), -1);
    while (true) {
      best = std::max(best, problem.ratio(signs));
      std::size_t t = 0;
      while (t < m && signs[t] == 1) signs[t++] = -1;
      if (t == m) break;
      ++signs[t];
    }
    return best;
  }

  CounterRng rng(seed);
  std::vector<int> best_signs(m, 1);
  for (int trial = 0; trial < kRandomPatterns; ++trial) {
    for (auto& s : signs) s = rng.sign();
    const double r = problem.ratio(signs);
    if (r > best) {
      best = r;
      best_signs = signs;
    }
  }
  // Flip single signs while that increases the ratio. For an output that is
  // linear in the perturbation this ends at the global maximum over the box.
  signs = best_signs;
  for (int pass = 0; pass < kMaxClimbPasses; ++pass) {
    bool improved = false;
    for (std::size_t t = 0; t < m; ++t) {
      signs[t] = -signs[t];
      const double r = problem.ratio(signs);
      if (r > best) {
        best = r;
        improved = true;
      } else {
        signs[t] = -signs[t];
      }
    }
    if (!improved) break;
  }
  return best;
}

}  // namespace smoothcond
