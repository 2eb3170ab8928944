#include <doctest.h>

#include <gmpxx.h>

#include <cmath>

#include "smoothcond/cond.hpp"
#include "smoothcond/fplab.hpp"
#include "test_support.hpp"

using namespace smoothcond;

namespace {

// p-bit round-to-nearest-even of an exact rational, independent of the
// floating-point tricks used by the library.
mpq_class pow2(long k) {
  mpq_class r = 1;
  if (k >= 0)
    mpz_mul_2exp(r.get_num_mpz_t(), r.get_num_mpz_t(), static_cast<mp_bitcnt_t>(k));
  else
    mpz_mul_2exp(r.get_den_mpz_t(), r.get_den_mpz_t(), static_cast<mp_bitcnt_t>(-k));
  r.canonicalize();
  return r;
}

mpq_class round_rational(const mpq_class& q, int p) {
  if (q == 0) return q;
  const mpq_class a = abs(q);
  long e = static_cast<long>(mpz_sizeinbase(a.get_num_mpz_t(), 2)) -
           static_cast<long>(mpz_sizeinbase(a.get_den_mpz_t(), 2));
  while (a < pow2(e)) --e;
  while (a >= pow2(e + 1)) ++e;
  // a = m * 2^(e - p + 1) with m in [2^(p-1), 2^p).
  const mpq_class m = a * pow2(p - 1 - e);
  mpz_class lo;
  mpz_fdiv_q(lo.get_mpz_t(), m.get_num_mpz_t(), m.get_den_mpz_t());
  const mpq_class frac = m - mpq_class(lo);
  if (frac > mpq_class(1, 2) || (frac == mpq_class(1, 2) && mpz_odd_p(lo.get_mpz_t()))) ++lo;
  mpq_class r = mpq_class(lo) * pow2(e - p + 1);
  return q < 0 ? mpq_class(-r) : r;
}

Vector rational_forward_substitution(const Matrix& l, const Vector& b, int p) {
  const std::size_t n = b.size();
  std::vector<mpq_class> x(n);
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    mpq_class s = b[i];
    for (std::size_t j = 0; j < i; ++j) {
      const mpq_class prod = round_rational(mpq_class(l(i, j)) * x[j], p);
      s = round_rational(s - prod, p);
    }
    x[i] = round_rational(s / mpq_class(l(i, i)), p);
    out[i] = x[i].get_d();
  }
  return out;
}

}  // namespace

TEST_CASE("precision config") {
  CHECK(PrecisionConfig(24).unit_roundoff() == std::ldexp(1.0, -24));
  CHECK(PrecisionConfig(24).eps_mach() == std::ldexp(1.0, -24));
  CHECK_THROWS_AS(PrecisionConfig(1), std::invalid_argument);
  CHECK_THROWS_AS(PrecisionConfig(53), std::invalid_argument);
}

TEST_CASE("round_p examples") {
  const PrecisionConfig p24(24);
  CHECK(round_p(1.0, p24) == 1.0);
  CHECK(round_p(1.0 + std::ldexp(1.0, -30), p24) == 1.0);
  // Ties go to even: 1 + 2^-24 is halfway between 1 and 1 + 2^-23.
  CHECK(round_p(1.0 + std::ldexp(1.0, -24), p24) == 1.0);
  CHECK(round_p(1.0 + 3 * std::ldexp(1.0, -24), p24) == 1.0 + std::ldexp(1.0, -22));
  CHECK(round_p(-0.1, p24) == static_cast<double>(-0.1f));
  CHECK(std::isinf(round_p(kInf, p24)));
  CHECK(round_p(0.0, p24) == 0.0);
}

TEST_CASE("round_p matches float conversion at p = 24") {
  CounterRng rng(71);
  const PrecisionConfig p24(24);
  for (int i = 0; i < 100000; ++i) {
    const double z = rng.normal() * std::ldexp(1.0, static_cast<int>(rng() % 40) - 20);
    CHECK(round_p(z, p24) == static_cast<double>(static_cast<float>(z)));
  }
}

TEST_CASE("round_p error bound and idempotence on 10^6 values") {
  CounterRng rng(73);
  bool ok = true;
  for (int i = 0; i < 1000000; ++i) {
    const PrecisionConfig cfg(2 + static_cast<int>(rng() % 51));
    const double z = rng.normal() * std::ldexp(1.0, static_cast<int>(rng() % 200) - 100);
    const double r = round_p(z, cfg);
    ok = ok && std::abs(r - z) <= cfg.unit_roundoff() * std::abs(z) && round_p(r, cfg) == r;
  }
  CHECK(ok);
}

TEST_CASE("emulated operations are correctly rounded") {
  CounterRng rng(79);
  bool ok = true;
  for (int i = 0; i < 20000; ++i) {
    const int p = 2 + static_cast<int>(rng() % 51);
    const PrecisionConfig cfg(p);
    const double a = round_p(rng.normal(), cfg);
    double b = round_p(rng.normal() * (i % 3 ? 1.0 : std::ldexp(1.0, -p)), cfg);
    if (b == 0.0) b = 1.0;
    ok = ok && emulated_mul(a, b, cfg) == round_rational(mpq_class(a) * mpq_class(b), p).get_d();
    ok = ok && emulated_sub(a, b, cfg) == round_rational(mpq_class(a) - mpq_class(b), p).get_d();
    ok = ok && emulated_div(a, b, cfg) == round_rational(mpq_class(a) / mpq_class(b), p).get_d();
  }
  CHECK(ok);
}

TEST_CASE("forward_substitution examples") {
  CounterRng rng(83);
  // The quotient b_i / 1 is still rounded, so b must be representable.
  Vector b = smoothcond::testing::random_vector(4, rng);
  for (double& v : b) v = round_p(v, PrecisionConfig(11));
  CHECK(forward_substitution(Matrix::identity(4), b, PrecisionConfig(11)) == b);
  CHECK(forward_substitution(Matrix::from_rows({{2}}), Vector{1}, PrecisionConfig(3)) == Vector{0.5});
  CHECK_THROWS_AS(forward_substitution(Matrix::from_rows({{1, 0}, {1, 0}}), Vector{1, 1}, PrecisionConfig(24)),
                  std::invalid_argument);
  CHECK_THROWS_AS(forward_substitution(Matrix::from_rows({{1, 1}, {1, 1}}), Vector{1, 1}, PrecisionConfig(24)),
                  std::invalid_argument);
  CHECK_THROWS_AS(forward_substitution(Matrix::identity(2), Vector{1}), std::invalid_argument);
}

TEST_CASE("emulated forward substitution equals the rational oracle") {
  CounterRng rng(89);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 50;
    const auto l = smoothcond::testing::random_patterned(SparsityPattern::lower_triangular(n), rng);
    const Vector b = smoothcond::testing::random_vector(n, rng);
    const int p = trial < 8 ? 24 : 11 + 20 * (trial - 8);
    CHECK(forward_substitution(l.entries(), b, PrecisionConfig(p)) ==
          rational_forward_substitution(l.entries(), b, p));
  }
}

TEST_CASE("rel_error and loss_of_precision examples") {
  CHECK(rel_error(Vector{1, 2}, Vector{1, 2}) == 0.0);
  CHECK(rel_error(Vector{1.01, 2}, Vector{1, 2}) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(rel_error(Vector{1, 1}, Vector{1, 0}) == kInf);

  const PrecisionConfig cfg(24);
  CHECK(loss_of_precision(cfg.eps_mach(), cfg) == 0.0);
  CHECK(loss_of_precision(100 * cfg.eps_mach(), cfg) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(loss_of_precision(kInf, cfg) == kInf);
  CHECK(loss_of_precision(0.0, cfg) == 0.0);
}

TEST_CASE("backward error examples") {
  const Matrix two = Matrix::from_rows({{2}});
  CHECK(backward_error_omega(two, Vector{1}, Vector{0.5}) == 0.0);
  const double d = 1e-7;
  CHECK(backward_error_omega(two, Vector{1}, Vector{0.5 + d}) == doctest::Approx(d / (0.5 + d)).epsilon(1e-9));
  CHECK(backward_error_factor(64) == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(backward_error_factor(2) == 2.0);
  CHECK(backward_error_factor(1) == 1.0);

  // Representable exact solution: L = [[1,0],[1,2]], b = (1,3), x = (1,1).
  const Matrix l = Matrix::from_rows({{1, 0}, {1, 2}});
  CHECK(backward_error_omega(l, Vector{1, 3}, forward_substitution(l, Vector{1, 3}, PrecisionConfig(24))) == 0.0);
}

TEST_CASE("backward error of emulated solves at n = 64, p = 24") {
  CounterRng rng(97);
  const PrecisionConfig cfg(24);
  const double bound = backward_error_factor(64) * cfg.eps_mach();
  std::size_t over = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto l = smoothcond::testing::random_patterned(SparsityPattern::lower_triangular(64), rng).entries();
    for (std::size_t i = 0; i < 64; ++i)
      while (std::abs(l(i, i)) < 1e-3) l(i, i) = rng.normal();
    const Vector b = smoothcond::testing::random_vector(64, rng);
    if (backward_error_omega(l, b, forward_substitution(l, b, cfg)) > bound) ++over;
  }
  CHECK(over == 0);
}

TEST_CASE("lop_prediction examples") {
  const PrecisionConfig cfg(24);
  const Vector ones(16, 1.0);
  CHECK(lop_prediction(Matrix::identity(16), ones, cfg) == doctest::Approx(std::log10(8.0) + std::log10(2.0)).epsilon(1e-14));
  CHECK(lop_prediction(Matrix::identity(16), ones, cfg) == doctest::Approx(1.204).epsilon(1e-3));
  // b = (1, 1) gives x_2 = 0 while x_2 still depends on b_1 and b_2.
  const Matrix l = Matrix::from_rows({{1, 0}, {1, 1}});
  CHECK(lop_prediction(l, Vector{1, 1}, cfg) == kInf);
  const Vector b{1, 3};
  CHECK(lop_prediction(l, b, cfg) ==
        doctest::Approx(std::log10(2.0) +
                        std::log10(cond_solve(PatternedMatrix(SparsityPattern::lower_triangular(2), l), b)))
            .epsilon(1e-14));
}

TEST_CASE("accuracy experiment examples") {
  CHECK(bound_expected_lop(10, 1) == doctest::Approx(7.274).epsilon(1e-3));

  // Degenerate sigma around the identity: exact operations, no loss.
  const std::size_t n = 6;
  const auto lt = SparsityPattern::lower_triangular(n);
  GaussianModel near{PatternedMatrix(lt, Matrix::identity(n)), Vector(n, 1.0), 1e-12};
  const AccuracySummary s = run_accuracy_experiment(near, PrecisionConfig(24), 200, 5);
  for (const auto& r : s.samples) CHECK(r.lop <= 0.5);
  CHECK(s.backward_check_pass());

  GaussianModel unit{PatternedMatrix(lt, Matrix(n, n)), std::nullopt, 1.0};
  const AccuracySummary a = run_accuracy_experiment(unit, PrecisionConfig(24), 300, 5, 1);
  const AccuracySummary b = run_accuracy_experiment(unit, PrecisionConfig(24), 300, 5, 4);
  CHECK(accuracy_csv(a) == accuracy_csv(b));
  CHECK(a.samples.size() == 300);
  CHECK(accuracy_csv(a).rfind("seed,n,sigma,p,rel_error,lop,omega,backward_bound,lop_prediction\n", 0) == 0);
  CHECK_FALSE(accuracy_report(a).empty());

  GaussianModel full{PatternedMatrix(SparsityPattern::full(3), Matrix(3, 3)), std::nullopt, 1.0};
  CHECK_THROWS_AS(run_accuracy_experiment(full, PrecisionConfig(24), 300, 5), std::invalid_argument);
  CHECK_THROWS_AS(run_accuracy_experiment(unit, PrecisionConfig(24), 50, 5), std::invalid_argument);
}

TEST_CASE("loss of precision grows as the precision drops") {
  const std::size_t n = 12;
  GaussianModel unit{PatternedMatrix(SparsityPattern::lower_triangular(n), Matrix(n, n)), std::nullopt, 1.0};
  // Mean log10 RelError is roughly -p log10 2 + const: lower p, larger error.
  double previous = -kInf;
  for (int p : {40, 24, 16}) {
    const AccuracySummary s = run_accuracy_experiment(unit, PrecisionConfig(p), 500, 21);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : s.samples)
      if (r.rel_error > 0.0 && std::isfinite(r.rel_error)) {
        sum += std::log10(r.rel_error);
        ++count;
      }
    const double mean = sum / static_cast<double>(count);
    CHECK(mean > previous);
    previous = mean;
  }
}
