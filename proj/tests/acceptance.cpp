// Acceptance suite: one PASS/FAIL line per criterion; exits 1 if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "smoothcond/cli.hpp"
#include "smoothcond/cond.hpp"
#include "smoothcond/fplab.hpp"
#include "smoothcond/parallel.hpp"
#include "smoothcond/smoothed.hpp"
#include "test_support.hpp"

using namespace smoothcond;
using smoothcond::testing::random_patterned;
using smoothcond::testing::random_vector;
using smoothcond::testing::rel_diff;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const unsigned kWorkers = std::max(1u, std::thread::hardware_concurrency());

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

GaussianModel zero_model(const SparsityPattern& s, double sigma, bool rhs) {
  GaussianModel m{PatternedMatrix(s, Matrix(s.dim(), s.dim())), std::nullopt, sigma};
  if (rhs) m.center_rhs = Vector(s.dim(), 0.0);
  return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// 1. Closed forms against the finite-perturbation oracle.
Outcome oracle_equivalence() {
  CounterRng rng(0xacce55'01);
  const double tol = 1e-3;
  double worst = 0.0;
  std::size_t checked = 0, structural = 0, bad_structural = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial / 3) % 4;
    const SparsityPattern s = trial % 3 == 0   ? SparsityPattern::full(n)
                              : trial % 3 == 1 ? SparsityPattern::lower_triangular(n)
                                               : SparsityPattern::tridiagonal(n);
    PatternedMatrix a = random_patterned(s, rng);
    while (!lu_factor(a)) a = random_patterned(s, rng);
    const Vector b = random_vector(n, rng);
    const std::uint64_t seed = stream_seed(0x0dac1e, static_cast<std::uint64_t>(trial));

    worst = std::max(worst, rel_diff(oracle_condition(OracleTarget::determinant(), a, {}, 1e-6, seed), cond_det(a)));
    ++checked;
    const auto mask = structural_inverse_mask(s);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        const double c = cond_inverse_entry(a, k, l);
        if (!mask[k * n + l]) {
          // gamma_kl vanishes identically on the pattern: 0/0 -> 0 and no oracle is defined.
          ++structural;
          if (c != 0.0) ++bad_structural;
          continue;
        }
        worst = std::max(worst, rel_diff(oracle_condition(OracleTarget::inverse_entry(k, l), a, {}, 1e-6, seed), c));
        ++checked;
      }
    for (std::size_t k = 0; k < n; ++k) {
      worst = std::max(worst, rel_diff(oracle_condition(OracleTarget::solve_entry(k), a, b, 1e-6, seed),
                                       cond_solve_entry(a, b, k)));
      ++checked;
    }
  }
  return {worst <= tol && bad_structural == 0,
          fmt("%zu comparisons, max rel diff %.3g (tol 1e-3); %zu structural zeros of the inverse, %zu nonzero",
              checked, worst, structural, bad_structural)};
}

// 2. Entrywise dominance by the determinant-condition bounds.
Outcome bound_dominance() {
  const double slack = 1e-9;
  std::size_t violations = 0, entries = 0, singular = 0;
  for (const auto& s : {SparsityPattern::lower_triangular(4), SparsityPattern::full(4)}) {
    const GaussianModel m = zero_model(s, 1.0, true);
    const auto counts = parallel_map<std::array<std::size_t, 3>>(10000, kWorkers, [&](std::size_t i) {
      const Sample x = sample(m, stream_seed(0xacce55'02, i));
      const ConditionReport r = condition_report(x.matrix, std::span<const double>(*x.rhs));
      std::array<std::size_t, 3> c{0, 0, r.singular ? 1u : 0u};
      for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t l = 0; l < 4; ++l) {
          ++c[1];
          if (r.c_inv_entries(k, l) > r.bound_inv_entries(k, l) * (1.0 + slack)) ++c[0];
        }
        ++c[1];
        if (r.c_solve_entries[k] > r.bound_solve_entries[k] * (1.0 + slack)) ++c[0];
      }
      return c;
    });
    for (const auto& c : counts) {
      violations += c[0];
      entries += c[1];
      singular += c[2];
    }
  }
  return {violations == 0,
          fmt("2 x 10^4 samples, %zu entry checks, %zu violations, %zu singular", entries, violations, singular)};
}

// 3. Gaussian ratio tail against its bound and the exact probability.
Outcome prop4_tail() {
  const std::vector<double> ts{2, 5, 10, 50};
  const std::size_t m = 1000000;
  bool ok = true;
  std::size_t over_bound = 0, off_exact = 0;
  double worst_z = 0.0;
  int config = 0;
  for (double mu : {0.0, 1.0, -1.0})
    for (double vs : {0.5, 1.0}) {
      const TailEstimate e = verify_prop4(mu, vs, ts, m, stream_seed(0xacce55'03, config++), kWorkers);
      for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        // |X| > t|X+1|  <=>  -t/(t-1) < X < -t/(t+1).
        const double exact = normal_cdf((-t / (t + 1.0) - mu) / vs) - normal_cdf((-t / (t - 1.0) - mu) / vs);
        const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(m));
        const double z = std::abs(e.empirical[i] - exact) / se;
        worst_z = std::max(worst_z, z);
        if (e.empirical[i] > e.theoretical[i]) ++over_bound;
        if (z > 3.0) ++off_exact;
      }
    }
  ok = over_bound == 0 && off_exact == 0;
  return {ok, fmt("24 cases, %zu above bound, %zu beyond 3 SE of the exact probability (max %.2f SE)", over_bound,
                  off_exact, worst_z)};
}

// 4. Determinant tail, triangular pattern.
Outcome det_tail() {
  const std::vector<double> ts{300, 500, 1000, 5000};
  const std::size_t n = 4;
  const auto s = SparsityPattern::lower_triangular(n);
  bool ok = true;
  std::string detail;
  for (bool identity : {false, true}) {
    GaussianModel m = zero_model(s, 1.0, false);
    if (identity) m.center = PatternedMatrix(s, Matrix::identity(n));
    const TailEstimate e = estimate_tail(m, Quantity::Determinant, ts, 100000, identity ? 0xacce55'41 : 0xacce55'40,
                                         kWorkers);
    for (std::size_t i = 0; i < ts.size(); ++i) ok = ok && e.verdict(i) == Verdict::Pass;
    detail += fmt("%s: max wilson %.3g vs min bound %.3g; ", identity ? "identity" : "zero", e.wilson_upper.front(),
                  e.theoretical.back());
  }
  return {ok, detail + "all thresholds non-vacuous PASS required"};
}

// 5. Triangular linear-system tail and log-expectation.
Outcome triangular_solve() {
  const std::vector<double> ts{1e6, 1e7};
  const GaussianModel m = zero_model(SparsityPattern::lower_triangular(10), 1.0, true);
  const TailEstimate e = estimate_tail(m, Quantity::Solve, ts, 10000, 0xacce55'05, kWorkers);
  bool ok = true;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ok = ok && e.verdict(i) == Verdict::Pass;
    ok = ok && e.theoretical[i] == bound_triangular_tail(10, 1.0, ts[i]);
  }
  const LogExpectationEstimate l = estimate_logexp(m, Quantity::Solve, std::numbers::e, 10000, 0xacce55'05, kWorkers);
  ok = ok && l.pass() && std::abs(l.theoretical - 14.856) < 5e-4;
  return {ok, fmt("P{c>1e6}: wilson %.4g <= %.4g; P{c>1e7}: wilson %.4g <= %.4g; mean ln c %.4f (se %.3g) vs %.4f",
                  e.wilson_upper[0], e.theoretical[0], e.wilson_upper[1], e.theoretical[1], l.mean, l.std_error,
                  l.theoretical)};
}

// 6. Inversion tail, full pattern.
Outcome inversion_tail() {
  const std::vector<double> ts{1e5, 1e6};
  const GaussianModel m = zero_model(SparsityPattern::full(4), 1.0, false);
  const TailEstimate e = estimate_tail(m, Quantity::Inversion, ts, 10000, 0xacce55'06, kWorkers);
  bool ok = true;
  for (std::size_t i = 0; i < ts.size(); ++i)
    ok = ok && e.verdict(i) == Verdict::Pass && e.theoretical[i] == bound_inv_tail(4, 16, 1.0, ts[i]);
  return {ok, fmt("P{c>1e5}: wilson %.4g <= %.4g; P{c>1e6}: wilson %.4g <= %.4g", e.wilson_upper[0],
                  e.theoretical[0], e.wilson_upper[1], e.theoretical[1])};
}

// 7. Backward error of emulated forward substitution.
Outcome backward_error() {
  bool ok = true;
  std::string detail;
  std::size_t cell = 0;
  for (std::size_t n : {8u, 32u, 128u})
    for (int p : {16, 24, 40}) {
      const PrecisionConfig cfg(p);
      const double unit = std::log2(static_cast<double>(n)) * cfg.eps_mach();
      const auto omegas = parallel_map<double>(1000, kWorkers, [&](std::size_t i) {
        CounterRng rng(stream_seed(0xacce55'07 + cell, i));
        Matrix l(n, n);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c <= r; ++c) l(r, c) = rng.normal();
        for (std::size_t r = 0; r < n; ++r)
          while (std::abs(l(r, r)) < 1e-3) l(r, r) = rng.normal();
        Vector b(n);
        for (double& v : b) v = rng.normal();
        return backward_error_omega(l, b, forward_substitution(l, b, cfg));
      });
      ++cell;
      std::size_t over2 = 0, over4 = 0;
      double worst = 0.0;
      for (double w : omegas) {
        worst = std::max(worst, w / unit);
        if (!(w <= 2.0 * unit)) ++over2;
        if (!(w <= 4.0 * unit)) ++over4;
      }
      ok = ok && over2 <= 1 && over4 == 0;
      detail += fmt("n=%zu p=%d max %.2f log2(n) eps, %zu>2x; ", n, p, worst, over2);
    }
  return {ok, "1000 solves per cell: " + detail};
}

// 8. Loss of precision of forward substitution at p = 24.
Outcome accuracy() {
  const GaussianModel m = zero_model(SparsityPattern::lower_triangular(10), 1.0, true);
  const AccuracySummary s = run_accuracy_experiment(m, PrecisionConfig(24), 10000, 0xacce55'08, kWorkers);
  std::size_t violations = 0;
  for (const auto& r : s.samples)
    if (!(r.lop <= r.lop_prediction + 0.5)) ++violations;
  const bool ok = violations <= 10 && s.mean_lop <= 7.274 + 0.5 && std::abs(s.expected_lop_bound - 7.274) < 5e-4;
  return {ok, fmt("%zu / 10000 samples above prediction + 0.5; mean LoP %.4f vs %.4f + 0.5 (%zu infinite)", violations,
                  s.mean_lop, s.expected_lop_bound, s.infinite_lop)};
}

// 9. Degree-0 homogeneity of the three condition numbers.
Outcome homogeneity() {
  CounterRng rng(0xacce55'09);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial) % 4;
    const SparsityPattern s = trial % 3 == 0   ? SparsityPattern::full(n)
                              : trial % 3 == 1 ? SparsityPattern::lower_triangular(n)
                                               : SparsityPattern::tridiagonal(n);
    const PatternedMatrix a = random_patterned(s, rng);
    const Vector b = random_vector(n, rng);
    const double cd = cond_det(a), ci = cond_inverse(a), cs = cond_solve(a, b);
    for (double lambda : {-3.0, 0.25, 10.0}) {
      Matrix scaled = a.entries();
      for (auto [i, j] : s.positions()) scaled(i, j) *= lambda;
      Vector lb = b;
      for (double& v : lb) v *= lambda;
      const PatternedMatrix la(s, scaled);
      worst = std::max({worst, rel_diff(cond_det(la), cd), rel_diff(cond_inverse(la), ci),
                        rel_diff(cond_solve(la, lb), cs)});
    }
  }
  return {worst <= 1e-12, fmt("300 scalings, max rel diff %.3g (tol 1e-12)", worst)};
}

// 10. Byte-identical CSV across reruns and worker counts.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("smoothcond_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const auto slurp = [&](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  struct Case {
    std::string command, spec;
  };
  const std::vector<Case> cases{
      {"tail", write("tail.spec", "pattern = full\nn = 4\nsigma = 0.5\nquantity = inv\nthresholds = 1e3, 1e4, 1e5\n"
                                  "samples = 3000\nseed = 11\n")},
      {"tail", write("tail_solve.spec", "pattern = tridiagonal\nn = 5\nrhs_center = ones\nquantity = solve\n"
                                        "thresholds = 1e3, 1e5\nsamples = 3000\nseed = 12\n")},
      {"logexp", write("logexp.spec", "pattern = lower_triangular\nn = 8\nquantity = solve\nbeta = 10\n"
                                      "samples = 3000\nseed = 13\n")},
      {"prop4", write("prop4.spec", "mu = -1\nvarsigma = 0.5\nthresholds = 2, 5, 10, 50\nsamples = 50000\nseed = 14\n")},
      {"accuracy", write("accuracy.spec", "pattern = lower_triangular\nn = 12\nprecision_bits = 16\nsamples = 2000\n"
                                          "seed = 15\n")},
  };
  bool ok = true;
  std::size_t runs = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    std::string reference;
    for (const char* workers : {"1", "1", "2", "4", "7"}) {
      const fs::path out = dir / ("out_" + std::to_string(c) + "_" + workers + "_" + std::to_string(runs) + ".csv");
      std::ostringstream sink, err;
      const int code = run_cli({"smoothcond", cases[c].command, "--spec", cases[c].spec, "--out", out.string(),
                                "--workers", workers},
                               sink, err);
      const std::string csv = slurp(out);
      ++runs;
      ok = ok && (code == kExitOk || code == kExitInconsistent) && !csv.empty();
      if (reference.empty())
        reference = csv;
      else
        ok = ok && csv == reference;
    }
  }
  fs::remove_all(dir);
  return {ok, fmt("%zu CLI runs over 5 stochastic specs, workers 1/1/2/4/7", runs)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", 60, oracle_equivalence},
      {2, "minor-bound dominance", 60, bound_dominance},
      {3, "gaussian ratio tail", 60, prop4_tail},
      {4, "determinant tail", 120, det_tail},
      {5, "triangular solve tail and log-expectation", 120, triangular_solve},
      {6, "inversion tail", 120, inversion_tail},
      {7, "forward substitution backward error", 60, backward_error},
      {8, "forward substitution loss of precision", 120, accuracy},
      {9, "homogeneity", 60, homogeneity},
      {10, "determinism", 120, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %2d %s  %s  [%.1fs / %.0fs%s]  %s\n", c.id, pass ? "PASS" : "FAIL", c.name, secs,
                c.limit_seconds, in_time ? "" : " EXCEEDED", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
