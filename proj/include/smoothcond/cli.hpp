#pragma once

// Experiment spec files and the command-line driver.
//
// Spec files are flat "key = value" lines; '#' starts a comment. Keys:
//   pattern        full | lower_triangular | tridiagonal | diagonal | file:<path>
//   n              dimension (not needed with pattern=file:)
//   center         zero | identity | file:<path>          (identity is restricted to the pattern)
//   rhs_center     zero | ones | file:<path>              (default zero)
//   sigma          positive real
//   quantity       det | inv | solve
//   thresholds     comma- or space-separated reals
//   samples        Monte Carlo sample count
//   seed           unsigned 64-bit integer
//   beta           logarithm base, > 1 (default e)
//   precision_bits significand bits for the accuracy lab (default 24)
//   mu, varsigma   Gaussian parameters for prop4
// Relative file paths are resolved against the spec file's directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothcond/smoothed.hpp"

namespace smoothcond {

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
  std::string pattern = "lower_triangular";
  std::optional<std::size_t> n;
  std::string center = "zero";
  std::string rhs_center = "zero";
  double sigma = 1.0;
  std::optional<Quantity> quantity;
  std::vector<double> thresholds;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  int precision_bits = 24;
  std::optional<double> mu;
  std::optional<double> varsigma;
  std::filesystem::path base_dir;
};

/// Throws SpecError on unknown keys, duplicate keys or malformed values.
ExperimentSpec parse_spec(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentSpec parse_spec_file(const std::filesystem::path& path);

/// Builds the Gaussian model described by the spec. Throws SpecError.
GaussianModel build_model(const ExperimentSpec& spec);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDegenerate = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitInconsistent = 3;

/// Runs the command line `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smoothcond
