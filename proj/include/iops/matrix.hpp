#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace iops {

using Index = std::size_t;

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Coordinate-list matrix. Canonical form: entries sorted row-major with no
/// repeated coordinate.
struct TripletMatrix {
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<Triplet> entries;

  Index nnz() const { return entries.size(); }
};

/// Compressed sparse column storage. `col_ptr` has n_cols + 1 offsets and row
/// indices are strictly increasing inside each column.
struct CscMatrix {
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<double> value;
  std::vector<Index> row_idx;
  std::vector<Index> col_ptr{0};

  Index nnz() const { return value.size(); }
  Index col_nnz(Index c) const { return col_ptr[c + 1] - col_ptr[c]; }
};

/// Compressed sparse row storage, the mirror of CscMatrix.
struct CsrMatrix {
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<double> value;
  std::vector<Index> col_idx;
  std::vector<Index> row_ptr{0};

  Index nnz() const { return value.size(); }
  Index row_nnz(Index r) const { return row_ptr[r + 1] - row_ptr[r]; }
};

/// Row-major dense matrix.
struct DenseMatrix {
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols) : n_rows(rows), n_cols(cols), data(rows * cols, 0.0) {}

  double& operator()(Index r, Index c) { return data[r * n_cols + c]; }
  double operator()(Index r, Index c) const { return data[r * n_cols + c]; }

  static DenseMatrix identity(Index n);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

/// Sorts row-major and sums repeated coordinates in their input order.
/// Entries that sum to 0.0 are kept. Throws BoundsError on out-of-range indices.
TripletMatrix canonicalize(TripletMatrix t);

CscMatrix to_csc(const TripletMatrix& t);
CsrMatrix to_csr(const TripletMatrix& t);
CscMatrix to_csc(const CsrMatrix& m);
CsrMatrix to_csr(const CscMatrix& m);

TripletMatrix to_triplets(const CscMatrix& m);
TripletMatrix to_triplets(const CsrMatrix& m);
/// Stores every entry that is not exactly 0.0.
TripletMatrix to_triplets(const DenseMatrix& m);

DenseMatrix to_dense(const TripletMatrix& t);
DenseMatrix to_dense(const CscMatrix& m);
DenseMatrix to_dense(const CsrMatrix& m);

/// C[i,j] = sum_x a[i,x] * b[x,j], accumulated left to right over x.
DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b);

/// Checks structural invariants, throwing MalformedBlockError on violation.
void validate(const CscMatrix& m);
void validate(const CsrMatrix& m);

double density(Index nnz, Index rows, Index cols);

/// Element-wise absolute value; used to bound accumulation error.
DenseMatrix abs(const DenseMatrix& m);

/// Largest |x - ref| / magnitude over all entries, where magnitude is taken
/// from `scale` (typically |A|*|B|). Entries with zero scale must match exactly;
/// a mismatch there yields +inf.
double max_relative_error(const DenseMatrix& x, const DenseMatrix& ref, const DenseMatrix& scale);

/// One row per line, comma separated, shortest round-trip decimal text.
void write_csv(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_csv(std::istream& in);

}  // namespace iops
