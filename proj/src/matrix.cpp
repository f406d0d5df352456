#include "iops/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "iops/error.hpp"
#include "iops/format.hpp"

namespace iops {

namespace {

void check_bounds(const TripletMatrix& t) {
  for (const auto& e : t.entries) {
    if (e.row >= t.n_rows || e.col >= t.n_cols) {
      throw BoundsError("entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                        ") outside " + std::to_string(t.n_rows) + "x" + std::to_string(t.n_cols));
    }
  }
}

// Counting sort on the major index; `major` / `minor` pick the axis.
template <typename Major, typename Minor>
void compress(const TripletMatrix& t, Index n_major, Major major, Minor minor, std::vector<Index>& ptr,
              std::vector<Index>& idx, std::vector<double>& value) {
  check_bounds(t);
  ptr.assign(n_major + 1, 0);
  for (const auto& e : t.entries) ++ptr[major(e) + 1];
  for (Index i = 0; i < n_major; ++i) ptr[i + 1] += ptr[i];

  idx.resize(t.entries.size());
  value.resize(t.entries.size());
  std::vector<Index> cursor(ptr.begin(), ptr.end() - 1);
  for (const auto& e : t.entries) {
    const Index at = cursor[major(e)]++;
    idx[at] = minor(e);
    value[at] = e.value;
  }

  // Canonical (row-major) input already yields sorted minor indices for CSR;
  // for CSC a stable per-segment sort restores order for any input order.
  std::vector<std::pair<Index, double>> seg;
  for (Index m = 0; m < n_major; ++m) {
    const Index lo = ptr[m], hi = ptr[m + 1];
    if (std::is_sorted(idx.begin() + lo, idx.begin() + hi)) continue;
    seg.clear();
    for (Index i = lo; i < hi; ++i) seg.emplace_back(idx[i], value[i]);
    std::stable_sort(seg.begin(), seg.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (Index i = lo; i < hi; ++i) {
      idx[i] = seg[i - lo].first;
      value[i] = seg[i - lo].second;
    }
  }
  for (Index m = 0; m < n_major; ++m) {
    for (Index i = ptr[m] + 1; i < ptr[m + 1]; ++i) {
      if (idx[i] == idx[i - 1]) throw MalformedBlockError("duplicate coordinate; canonicalize first");
    }
  }
}

template <typename Ptr, typename Idx>
void validate_compressed(Index n_major, Index n_minor, const Ptr& ptr, const Idx& idx, std::size_t n_values,
                         const char* kind) {
  auto fail = [&](const std::string& what) { throw MalformedBlockError(std::string(kind) + ": " + what); };
  if (ptr.size() != n_major + 1) fail("pointer array has wrong length");
  if (ptr.front() != 0) fail("first pointer is not 0");
  if (ptr.back() != n_values || idx.size() != n_values) fail("pointer/value length mismatch");
  for (Index m = 0; m < n_major; ++m) {
    if (ptr[m + 1] < ptr[m]) fail("pointers decrease");
    for (Index i = ptr[m]; i < ptr[m + 1]; ++i) {
      if (idx[i] >= n_minor) fail("index out of range");
      if (i > ptr[m] && idx[i] <= idx[i - 1]) fail("indices not strictly increasing");
    }
  }
}

}  // namespace

DenseMatrix DenseMatrix::identity(Index n) {
  DenseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

TripletMatrix canonicalize(TripletMatrix t) {
  check_bounds(t);
  std::stable_sort(t.entries.begin(), t.entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<Triplet> out;
  out.reserve(t.entries.size());
  for (const auto& e : t.entries) {
    if (!out.empty() && out.back().row == e.row && out.back().col == e.col) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  t.entries = std::move(out);
  return t;
}

CscMatrix to_csc(const TripletMatrix& t) {
  CscMatrix m;
  m.n_rows = t.n_rows;
  m.n_cols = t.n_cols;
  compress(
      t, t.n_cols, [](const Triplet& e) { return e.col; }, [](const Triplet& e) { return e.row; }, m.col_ptr,
      m.row_idx, m.value);
  return m;
}

CsrMatrix to_csr(const TripletMatrix& t) {
  CsrMatrix m;
  m.n_rows = t.n_rows;
  m.n_cols = t.n_cols;
  compress(
      t, t.n_rows, [](const Triplet& e) { return e.row; }, [](const Triplet& e) { return e.col; }, m.row_ptr,
      m.col_idx, m.value);
  return m;
}

CscMatrix to_csc(const CsrMatrix& m) { return to_csc(to_triplets(m)); }
CsrMatrix to_csr(const CscMatrix& m) { return to_csr(to_triplets(m)); }

TripletMatrix to_triplets(const CscMatrix& m) {
  TripletMatrix t{m.n_rows, m.n_cols, {}};
  t.entries.reserve(m.nnz());
  for (Index c = 0; c < m.n_cols; ++c) {
    for (Index i = m.col_ptr[c]; i < m.col_ptr[c + 1]; ++i) t.entries.push_back({m.row_idx[i], c, m.value[i]});
  }
  return canonicalize(std::move(t));
}

TripletMatrix to_triplets(const CsrMatrix& m) {
  TripletMatrix t{m.n_rows, m.n_cols, {}};
  t.entries.reserve(m.nnz());
  for (Index r = 0; r < m.n_rows; ++r) {
    for (Index i = m.row_ptr[r]; i < m.row_ptr[r + 1]; ++i) t.entries.push_back({r, m.col_idx[i], m.value[i]});
  }
  return t;
}

TripletMatrix to_triplets(const DenseMatrix& m) {
  TripletMatrix t{m.n_rows, m.n_cols, {}};
  for (Index r = 0; r < m.n_rows; ++r) {
    for (Index c = 0; c < m.n_cols; ++c) {
      if (m(r, c) != 0.0) t.entries.push_back({r, c, m(r, c)});
    }
  }
  return t;
}

DenseMatrix to_dense(const TripletMatrix& t) {
  check_bounds(t);
  DenseMatrix d(t.n_rows, t.n_cols);
  for (const auto& e : t.entries) d(e.row, e.col) += e.value;
  return d;
}

DenseMatrix to_dense(const CscMatrix& m) {
  DenseMatrix d(m.n_rows, m.n_cols);
  for (Index c = 0; c < m.n_cols; ++c) {
    for (Index i = m.col_ptr[c]; i < m.col_ptr[c + 1]; ++i) d(m.row_idx[i], c) = m.value[i];
  }
  return d;
}

DenseMatrix to_dense(const CsrMatrix& m) {
  DenseMatrix d(m.n_rows, m.n_cols);
  for (Index r = 0; r < m.n_rows; ++r) {
    for (Index i = m.row_ptr[r]; i < m.row_ptr[r + 1]; ++i) d(r, m.col_idx[i]) = m.value[i];
  }
  return d;
}

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.n_cols != b.n_rows) {
    throw DimensionError("dimension mismatch: " + std::to_string(a.n_rows) + "x" + std::to_string(a.n_cols) +
                         " times " + std::to_string(b.n_rows) + "x" + std::to_string(b.n_cols));
  }
  DenseMatrix c(a.n_rows, b.n_cols);
  // i-x-j loop order keeps the per-entry sum ordered by x.
  for (Index i = 0; i < a.n_rows; ++i) {
    double* crow = &c.data[i * c.n_cols];
    for (Index x = 0; x < a.n_cols; ++x) {
      const double av = a(i, x);
      const double* brow = &b.data[x * b.n_cols];
      for (Index j = 0; j < b.n_cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

void validate(const CscMatrix& m) {
  validate_compressed(m.n_cols, m.n_rows, m.col_ptr, m.row_idx, m.value.size(), "csc");
}

void validate(const CsrMatrix& m) {
  validate_compressed(m.n_rows, m.n_cols, m.row_ptr, m.col_idx, m.value.size(), "csr");
}

double density(Index nnz, Index rows, Index cols) {
  if (rows == 0 || cols == 0) return 0.0;
  return static_cast<double>(nnz) / (static_cast<double>(rows) * static_cast<double>(cols));
}

DenseMatrix abs(const DenseMatrix& m) {
  DenseMatrix out = m;
  for (auto& v : out.data) v = std::fabs(v);
  return out;
}

double max_relative_error(const DenseMatrix& x, const DenseMatrix& ref, const DenseMatrix& scale) {
  if (x.n_rows != ref.n_rows || x.n_cols != ref.n_cols || scale.n_rows != ref.n_rows ||
      scale.n_cols != ref.n_cols) {
    throw DimensionError("dimension mismatch in error comparison");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const double diff = std::fabs(x.data[i] - ref.data[i]);
    if (diff == 0.0) continue;
    if (scale.data[i] == 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, diff / scale.data[i]);
  }
  return worst;
}

void write_csv(std::ostream& out, const DenseMatrix& m) {
  for (Index r = 0; r < m.n_rows; ++r) {
    for (Index c = 0; c < m.n_cols; ++c) {
      if (c) out << ',';
      out << format_real(m(r, c));
    }
    out << '\n';
  }
}

DenseMatrix read_csv(std::istream& in) {
  DenseMatrix m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      double v = 0.0;
      if (!parse_real(rest.substr(0, comma), v)) throw ParseError(lineno, "bad number in csv row");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (m.n_rows == 0) {
      m.n_cols = row.size();
    } else if (row.size() != m.n_cols) {
      throw ParseError(lineno, "csv row has " + std::to_string(row.size()) + " fields, expected " +
                                   std::to_string(m.n_cols));
    }
    m.data.insert(m.data.end(), row.begin(), row.end());
    ++m.n_rows;
  }
  return m;
}

}  // namespace iops
