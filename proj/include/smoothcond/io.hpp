#pragma once

// Text formats.
//   matrix:  first line "n", then n rows of n whitespace-separated reals
//   vector:  first line "n", then n whitespace-separated reals
//   pattern: first line "n", then one 1-based "i j" pair per line

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "smoothcond/matrix.hpp"

namespace smoothcond {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Matrix read_matrix(std::istream& in);
Vector read_vector(std::istream& in);
SparsityPattern read_pattern(std::istream& in);

Matrix read_matrix_file(const std::filesystem::path& path);
Vector read_vector_file(const std::filesystem::path& path);
SparsityPattern read_pattern_file(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const Matrix& m);
void write_vector(std::ostream& out, const Vector& v);
void write_pattern(std::ostream& out, const SparsityPattern& s);

/// Shortest-round-trip-safe decimal: "%.17g", with "inf"/"-inf"/"nan" spelled out.
std::string format_real(double x);
/// Parses a decimal real; accepts "inf", "+inf", "-inf", "nan". Throws ParseError.
double parse_real(const std::string& token);

}  // namespace smoothcond
