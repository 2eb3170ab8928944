#include "smoothcond/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

namespace smoothcond {

namespace {

std::size_t read_dimension(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw ParseError(std::string(what) + ": missing dimension line");
  char* end = nullptr;
  errno = 0;
  const long long n = std::strtoll(token.c_str(), &end, 10);
  if (errno != 0 || end == token.c_str() || *end != '\0' || n < 0)
    throw ParseError(std::string(what) + ": bad dimension '" + token + "'");
  return static_cast<std::size_t>(n);
}

double read_real(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw ParseError(std::string(what) + ": unexpected end of input");
  return parse_real(token);
}

void expect_end(std::istream& in, const char* what) {
  std::string token;
  if (in >> token) throw ParseError(std::string(what) + ": trailing data '" + token + "'");
}

template <class F>
auto with_file(const std::filesystem::path& path, F&& read) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return read(in);
}

}  // namespace

double parse_real(const std::string& token) {
  if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError("not a real number: '" + token + "'");
  return v;
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Matrix read_matrix(std::istream& in) {
  const std::size_t n = read_dimension(in, "matrix");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = read_real(in, "matrix");
  expect_end(in, "matrix");
  return m;
}

Vector read_vector(std::istream& in) {
  const std::size_t n = read_dimension(in, "vector");
  Vector v(n);
  for (double& x : v) x = read_real(in, "vector");
  expect_end(in, "vector");
  return v;
}

SparsityPattern read_pattern(std::istream& in) {
  const std::size_t n = read_dimension(in, "pattern");
  std::vector<std::pair<std::size_t, std::size_t>> positions;
  long long i = 0;
  long long j = 0;
  while (in >> i) {
    if (!(in >> j)) throw ParseError("pattern: incomplete index pair");
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > n || static_cast<std::size_t>(j) > n)
      throw ParseError("pattern: pair (" + std::to_string(i) + "," + std::to_string(j) +
                       ") outside [n]x[n]");
    positions.emplace_back(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));
  }
  if (!in.eof()) throw ParseError("pattern: non-integer index");
  if (positions.empty()) throw ParseError("pattern: no positions");
  try {
    return SparsityPattern(n, positions);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

Matrix read_matrix_file(const std::filesystem::path& path) {
  return with_file(path, [](std::istream& in) { return read_matrix(in); });
}

Vector read_vector_file(const std::filesystem::path& path) {
  return with_file(path, [](std::istream& in) { return read_vector(in); });
}

SparsityPattern read_pattern_file(const std::filesystem::path& path) {
  return with_file(path, [](std::istream& in) { return read_pattern(in); });
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_real(m(i, j));
    out << '\n';
  }
}

void write_vector(std::ostream& out, const Vector& v) {
  out << v.size() << '\n';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_real(v[i]);
  out << '\n';
}

void write_pattern(std::ostream& out, const SparsityPattern& s) {
  out << s.dim() << '\n';
  for (auto [i, j] : s.positions()) out << i + 1 << ' ' << j + 1 << '\n';
}

}  // namespace smoothcond
