#include "smoothcond/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "smoothcond/cond.hpp"
#include "smoothcond/fplab.hpp"
#include "smoothcond/io.hpp"

namespace smoothcond {

// ------------------------------------------------------------ spec files

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double spec_real(const std::string& key, const std::string& value) {
  try {
    return parse_real(value);
  } catch (const ParseError&) {
    throw SpecError("key '" + key + "': not a real number: '" + value + "'");
  }
}

std::uint64_t spec_unsigned(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
    throw SpecError("key '" + key + "': not a nonnegative integer: '" + value + "'");
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw SpecError("key '" + key + "': integer out of range: '" + value + "'");
  }
}

std::vector<double> spec_list(const std::string& key, std::string value) {
  for (char& c : value)
    if (c == ',') c = ' ';
  std::istringstream in(value);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(spec_real(key, token));
  if (out.empty()) throw SpecError("key '" + key + "': empty list");
  return out;
}

std::filesystem::path resolve(const ExperimentSpec& spec, const std::string& path) {
  std::filesystem::path p(path);
  return p.is_relative() && !spec.base_dir.empty() ? spec.base_dir / p : p;
}

bool has_prefix(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

ExperimentSpec parse_spec(std::istream& in, const std::filesystem::path& base_dir) {
  ExperimentSpec spec;
  spec.base_dir = base_dir;
  std::map<std::string, bool> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SpecError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (seen[key]) throw SpecError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    seen[key] = true;

    if (key == "pattern") {
      spec.pattern = value;
    } else if (key == "n") {
      spec.n = spec_unsigned(key, value);
    } else if (key == "center") {
      spec.center = value;
    } else if (key == "rhs_center") {
      spec.rhs_center = value;
    } else if (key == "sigma") {
      spec.sigma = spec_real(key, value);
    } else if (key == "quantity") {
      try {
        spec.quantity = parse_quantity(value);
      } catch (const std::invalid_argument& e) {
        throw SpecError(e.what());
      }
    } else if (key == "thresholds") {
      spec.thresholds = spec_list(key, value);
    } else if (key == "samples") {
      spec.samples = spec_unsigned(key, value);
    } else if (key == "seed") {
      spec.seed = spec_unsigned(key, value);
    } else if (key == "beta") {
      spec.beta = spec_real(key, value);
    } else if (key == "precision_bits") {
      spec.precision_bits = static_cast<int>(std::min<std::uint64_t>(spec_unsigned(key, value), 1000));
    } else if (key == "mu") {
      spec.mu = spec_real(key, value);
    } else if (key == "varsigma") {
      spec.varsigma = spec_real(key, value);
    } else {
      throw SpecError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return spec;
}

ExperimentSpec parse_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file '" + path.string() + "'");
  return parse_spec(in, path.parent_path());
}

namespace {

SparsityPattern build_pattern(const ExperimentSpec& spec) {
  if (has_prefix(spec.pattern, "file:")) {
    try {
      return read_pattern_file(resolve(spec, spec.pattern.substr(5)));
    } catch (const ParseError& e) {
      throw SpecError(std::string("pattern file: ") + e.what());
    }
  }
  if (!spec.n || *spec.n == 0) throw SpecError("key 'n' (positive) is required for named patterns");
  const std::size_t n = *spec.n;
  if (spec.pattern == "full") return SparsityPattern::full(n);
  if (spec.pattern == "lower_triangular") return SparsityPattern::lower_triangular(n);
  if (spec.pattern == "tridiagonal") return SparsityPattern::tridiagonal(n);
  if (spec.pattern == "diagonal") return SparsityPattern::diagonal(n);
  throw SpecError("unknown pattern '" + spec.pattern + "'");
}

}  // namespace

GaussianModel build_model(const ExperimentSpec& spec) {
  const SparsityPattern pattern = build_pattern(spec);
  const std::size_t n = pattern.dim();
  if (spec.n && *spec.n != n) throw SpecError("key 'n' disagrees with the pattern file dimension");

  Matrix center(n, n);
  if (spec.center == "identity") {
    for (std::size_t i = 0; i < n; ++i)
      if (pattern.contains(i, i)) center(i, i) = 1.0;
  } else if (has_prefix(spec.center, "file:")) {
    try {
      center = read_matrix_file(resolve(spec, spec.center.substr(5)));
    } catch (const ParseError& e) {
      throw SpecError(std::string("center file: ") + e.what());
    }
  } else if (spec.center != "zero") {
    throw SpecError("unknown center '" + spec.center + "'");
  }

  Vector rhs(n, 0.0);
  if (spec.rhs_center == "ones") {
    rhs.assign(n, 1.0);
  } else if (has_prefix(spec.rhs_center, "file:")) {
    try {
      rhs = read_vector_file(resolve(spec, spec.rhs_center.substr(5)));
    } catch (const ParseError& e) {
      throw SpecError(std::string("rhs_center file: ") + e.what());
    }
  } else if (spec.rhs_center != "zero") {
    throw SpecError("unknown rhs_center '" + spec.rhs_center + "'");
  }

  try {
    GaussianModel model{PatternedMatrix(pattern, std::move(center)), std::move(rhs), spec.sigma};
    model.validate();
    return model;
  } catch (const std::invalid_argument& e) {
    throw SpecError(e.what());
  }
}

// ------------------------------------------------------------------ CLI

namespace {

struct StochasticOptions {
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

void add_stochastic_options(CLI::App* cmd, StochasticOptions& o) {
  cmd->add_option("--spec", o.spec_path, "experiment spec file")->required();
  cmd->add_option("--seed", o.seed, "RNG seed (overrides the spec)");
  cmd->add_option("--out", o.out_path, "CSV output path (default: standard output)");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
}

template <class T>
T required(const std::optional<T>& v, const char* key) {
  if (!v) throw SpecError(std::string("key '") + key + "' is required");
  return *v;
}

std::uint64_t resolve_seed(const StochasticOptions& o, const ExperimentSpec& spec) {
  if (o.seed) return *o.seed;
  if (spec.seed) return *spec.seed;
  throw SpecError("a seed is required (spec key 'seed' or --seed)");
}

void emit(const StochasticOptions& o, const std::string& csv, const std::string& report, std::ostream& out) {
  if (o.out_path.empty()) {
    out << csv << '\n' << report;
    return;
  }
  std::ofstream file(o.out_path, std::ios::binary);
  if (!file) throw SpecError("cannot write '" + o.out_path + "'");
  file << csv;
  out << report;
}

int cmd_tail(const StochasticOptions& o, std::ostream& out) {
  const ExperimentSpec spec = parse_spec_file(o.spec_path);
  const GaussianModel model = build_model(spec);
  const Quantity q = required(spec.quantity, "quantity");
  if (spec.thresholds.empty()) throw SpecError("key 'thresholds' is required");
  const std::size_t m = required(spec.samples, "samples");
  const double floor = tail_validity_floor(q, model.pattern());
  for (double t : spec.thresholds)
    if (!(t > floor))
      throw SpecError("threshold " + format_real(t) + " is not above the validity floor " + format_real(floor) +
                      " (t must exceed " + (q == Quantity::Determinant ? "|S|" : "2|S|") + ")");
  TailEstimate e;
  try {
    e = estimate_tail(model, q, spec.thresholds, m, resolve_seed(o, spec), o.workers);
  } catch (const std::invalid_argument& ex) {
    throw SpecError(ex.what());
  }
  emit(o, tail_csv(e), tail_report(e), out);
  return e.all_pass_or_vacuous() ? kExitOk : kExitInconsistent;
}

int cmd_logexp(const StochasticOptions& o, std::ostream& out) {
  const ExperimentSpec spec = parse_spec_file(o.spec_path);
  const GaussianModel model = build_model(spec);
  const Quantity q = required(spec.quantity, "quantity");
  LogExpectationEstimate e;
  try {
    e = estimate_logexp(model, q, spec.beta.value_or(std::numbers::e), required(spec.samples, "samples"),
                        resolve_seed(o, spec), o.workers);
  } catch (const std::invalid_argument& ex) {
    throw SpecError(ex.what());
  }
  emit(o, logexp_csv(e), logexp_report(e), out);
  return e.pass() ? kExitOk : kExitInconsistent;
}

int cmd_prop4(const StochasticOptions& o, std::ostream& out) {
  const ExperimentSpec spec = parse_spec_file(o.spec_path);
  if (spec.thresholds.empty()) throw SpecError("key 'thresholds' is required");
  TailEstimate e;
  try {
    e = verify_prop4(required(spec.mu, "mu"), required(spec.varsigma, "varsigma"), spec.thresholds,
                     required(spec.samples, "samples"), resolve_seed(o, spec), o.workers);
  } catch (const std::invalid_argument& ex) {
    throw SpecError(ex.what());
  }
  emit(o, tail_csv(e), tail_report(e), out);
  return e.all_pass_or_vacuous() ? kExitOk : kExitInconsistent;
}

int cmd_accuracy(const StochasticOptions& o, std::ostream& out) {
  const ExperimentSpec spec = parse_spec_file(o.spec_path);
  const GaussianModel model = build_model(spec);
  AccuracySummary s;
  try {
    const PrecisionConfig cfg(spec.precision_bits);
    s = run_accuracy_experiment(model, cfg, required(spec.samples, "samples"), resolve_seed(o, spec), o.workers);
  } catch (const std::invalid_argument& ex) {
    throw SpecError(ex.what());
  }
  emit(o, accuracy_csv(s), accuracy_report(s), out);
  return s.backward_check_pass() && s.lop_check_pass() ? kExitOk : kExitInconsistent;
}

struct CondOptions {
  std::string matrix_path;
  std::string rhs_path;
  std::string pattern_path;
  bool csv = false;
};

int cmd_cond(const CondOptions& o, std::ostream& out, std::ostream& err) {
  Matrix a;
  std::optional<Vector> b;
  std::optional<SparsityPattern> pattern;
  try {
    a = read_matrix_file(o.matrix_path);
    if (!o.rhs_path.empty()) b = read_vector_file(o.rhs_path);
    if (!o.pattern_path.empty()) pattern = read_pattern_file(o.pattern_path);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  if (a.rows() == 0) {
    err << "error: empty matrix\n";
    return kExitInvalid;
  }
  if ((b && b->size() != a.rows()) || (pattern && pattern->dim() != a.rows())) {
    err << "error: dimension mismatch\n";
    return kExitInconsistent;
  }
  PatternedMatrix pa;
  try {
    pa = PatternedMatrix(pattern ? *pattern : SparsityPattern::support_of(a), a);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  const ConditionReport r = b ? condition_report(pa, std::span<const double>(*b)) : condition_report(pa);
  if (o.csv)
    out << condition_csv_header() << '\n' << to_csv_row(r) << '\n';
  else
    out << to_record(r);
  return r.singular ? kExitDegenerate : kExitOk;
}

struct BoundsOptions {
  std::size_t n = 0;
  std::string sigma = "1";
  double beta = std::numbers::e;
  std::vector<double> t;
  std::string pattern = "lower_triangular";
};

int cmd_bounds(const BoundsOptions& o, std::ostream& out) {
  ExperimentSpec spec;
  spec.n = o.n;
  spec.pattern = o.pattern;
  const SparsityPattern s = build_pattern(spec);
  double sigma = 0.0;
  try {
    sigma = parse_real(o.sigma);
  } catch (const ParseError& e) {
    throw SpecError(e.what());
  }
  if (!(sigma > 0.0)) throw SpecError("sigma must be positive (use 'inf' for the sigma -> infinity limit)");
  if (!(o.beta > 1.0)) throw SpecError("beta must be greater than 1");
  const std::size_t n = s.dim();
  const double size = static_cast<double>(s.size());
  const double nn = static_cast<double>(n);
  const double floor = std::max(2.0 * size, nn * (nn + 1.0));
  for (double t : o.t)
    if (!(t > floor))
      throw SpecError("t = " + format_real(t) + " is outside the domain of the tail bounds (needs t > " +
                      format_real(floor) + ")");

  out << "n = " << n << "  |S| = " << s.size() << " (" << o.pattern << ")  sigma = " << format_real(sigma)
      << "  beta = " << format_real(o.beta) << "  sigma_factor = " << format_real(sigma_factor(sigma)) << '\n';
  out << "logexp_det = " << format_real(bound_det_logexp(s.size(), sigma, o.beta)) << '\n';
  out << "logexp_inv = " << format_real(bound_inv_logexp(n, s.size(), sigma, o.beta)) << '\n';
  out << "logexp_solve = " << format_real(bound_solve_logexp(n, s.size(), sigma, o.beta)) << '\n';
  out << "logexp_triangular = " << format_real(bound_triangular_logexp(n, sigma, o.beta)) << '\n';
  out << "expected_lop_triangular = " << format_real(bound_expected_lop(n, sigma)) << '\n';
  if (!o.t.empty()) {
    out << "t,det_tail,inv_tail,solve_tail,triangular_tail\n";
    for (double t : o.t)
      out << format_real(t) << ',' << format_real(bound_det_tail(s.size(), sigma, t)) << ','
          << format_real(bound_inv_tail(n, s.size(), sigma, t)) << ','
          << format_real(bound_solve_tail(n, s.size(), sigma, t)) << ','
          << format_real(bound_triangular_tail(n, sigma, t)) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Componentwise condition numbers of sparse matrices and smoothed-analysis experiments",
               "smoothcond"};
  app.require_subcommand(1);

  CondOptions cond_opts;
  auto* cond = app.add_subcommand("cond", "condition numbers of a matrix (and right-hand side)");
  cond->add_option("matrix", cond_opts.matrix_path, "matrix file")->required();
  cond->add_option("rhs", cond_opts.rhs_path, "right-hand side vector file");
  cond->add_option("--pattern", cond_opts.pattern_path, "pattern file (default: support of the matrix)");
  cond->add_flag("--csv", cond_opts.csv, "print one CSV row instead of the key-value record");

  StochasticOptions tail_opts, logexp_opts, prop4_opts, accuracy_opts;
  auto* tail = app.add_subcommand("tail", "Monte Carlo tail probabilities against the tail bounds");
  add_stochastic_options(tail, tail_opts);
  auto* logexp = app.add_subcommand("logexp", "Monte Carlo log-expectation against the expectation bounds");
  add_stochastic_options(logexp, logexp_opts);
  auto* prop4 = app.add_subcommand("prop4", "Gaussian ratio tail P{|X| > t|X+1|} against its bound");
  add_stochastic_options(prop4, prop4_opts);
  auto* accuracy = app.add_subcommand("accuracy", "reduced-precision forward substitution accuracy lab");
  add_stochastic_options(accuracy, accuracy_opts);

  BoundsOptions bounds_opts;
  auto* bounds = app.add_subcommand("bounds", "print theoretical bounds");
  bounds->add_option("--n", bounds_opts.n, "dimension")->required();
  bounds->add_option("--sigma", bounds_opts.sigma, "sigma, or 'inf'");
  bounds->add_option("--beta", bounds_opts.beta, "logarithm base");
  bounds->add_option("--t", bounds_opts.t, "thresholds")->delimiter(',');
  bounds->add_option("--pattern", bounds_opts.pattern, "full | lower_triangular | tridiagonal | diagonal");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalid;
  }

  try {
    if (cond->parsed()) return cmd_cond(cond_opts, out, err);
    if (tail->parsed()) return cmd_tail(tail_opts, out);
    if (logexp->parsed()) return cmd_logexp(logexp_opts, out);
    if (prop4->parsed()) return cmd_prop4(prop4_opts, out);
    if (accuracy->parsed()) return cmd_accuracy(accuracy_opts, out);
    if (bounds->parsed()) return cmd_bounds(bounds_opts, out);
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace smoothcond
