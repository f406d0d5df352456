#include "iops/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "iops/error.hpp"
#include "iops/format.hpp"

namespace iops {

namespace {

enum class Field { kReal, kInteger, kPattern };
enum class Symmetry { kGeneral, kSymmetric, kSkew };

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

TripletMatrix load_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw ParseError(1, "empty input, expected %%MatrixMarket banner");
  ++lineno;
  std::istringstream banner(lower(line));
  std::string tag, object, format, field_s, symmetry_s;
  banner >> tag >> object >> format >> field_s >> symmetry_s;
  if (tag != "%%matrixmarket") throw ParseError(lineno, "missing %%MatrixMarket banner");
  if (object != "matrix") throw ParseError(lineno, "unsupported object '" + object + "'");
  if (format != "coordinate") throw ParseError(lineno, "only coordinate format is supported");

  Field field;
  if (field_s == "real" || field_s == "double") {
    field = Field::kReal;
  } else if (field_s == "integer") {
    field = Field::kInteger;
  } else if (field_s == "pattern") {
    field = Field::kPattern;
  } else {
    throw ParseError(lineno, "unsupported field '" + field_s + "'");
  }

  Symmetry symmetry;
  if (symmetry_s == "general") {
    symmetry = Symmetry::kGeneral;
  } else if (symmetry_s == "symmetric") {
    symmetry = Symmetry::kSymmetric;
  } else if (symmetry_s == "skew-symmetric") {
    symmetry = Symmetry::kSkew;
  } else {
    throw ParseError(lineno, "unsupported symmetry '" + symmetry_s + "'");
  }

  // Size line: first non-comment, non-blank line.
  std::vector<std::string_view> tok;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '%') continue;
    tok = split_ws(t);
    break;
  }
  unsigned long long rows = 0, cols = 0, declared = 0;
  if (tok.size() != 3 || !parse_index(tok[0], rows) || !parse_index(tok[1], cols) ||
      !parse_index(tok[2], declared)) {
    throw ParseError(lineno, "malformed size line, expected '<rows> <cols> <entries>'");
  }

  TripletMatrix t{static_cast<Index>(rows), static_cast<Index>(cols), {}};
  t.entries.reserve(symmetry == Symmetry::kGeneral ? declared : 2 * declared);
  const std::size_t expected_fields = field == Field::kPattern ? 2 : 3;

  unsigned long long seen = 0;
  while (seen < declared && std::getline(in, line)) {
    ++lineno;
    const auto t_line = trim(line);
    if (t_line.empty() || t_line.front() == '%') continue;
    tok = split_ws(t_line);
    unsigned long long r = 0, c = 0;
    if (tok.size() < expected_fields || !parse_index(tok[0], r) || !parse_index(tok[1], c)) {
      throw ParseError(lineno, "malformed entry");
    }
    double v = 1.0;
    if (field != Field::kPattern && !parse_real(tok[2], v)) throw ParseError(lineno, "malformed value");
    if (r == 0 || c == 0 || r > rows || c > cols) {
      throw BoundsError("line " + std::to_string(lineno) + ": entry (" + std::to_string(r) + ", " +
                        std::to_string(c) + ") outside declared " + std::to_string(rows) + "x" +
                        std::to_string(cols));
    }
    const Index ri = static_cast<Index>(r - 1), ci = static_cast<Index>(c - 1);
    t.entries.push_back({ri, ci, v});
    if (symmetry != Symmetry::kGeneral && ri != ci) {
      t.entries.push_back({ci, ri, symmetry == Symmetry::kSkew ? -v : v});
    }
    ++seen;
  }
  if (seen < declared) {
    throw ParseError(lineno, "expected " + std::to_string(declared) + " entries, found " + std::to_string(seen));
  }
  return canonicalize(std::move(t));
}

TripletMatrix load_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return load_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const CscMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.n_rows << ' ' << m.n_cols << ' ' << m.nnz() << '\n';
  for (Index c = 0; c < m.n_cols; ++c) {
    for (Index i = m.col_ptr[c]; i < m.col_ptr[c + 1]; ++i) {
      out << m.row_idx[i] + 1 << ' ' << c + 1 << ' ' << format_real(m.value[i]) << '\n';
    }
  }
}

void write_matrix_market(const std::filesystem::path& path, const CscMatrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_matrix_market(out, m);
}

}  // namespace iops
