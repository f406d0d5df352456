#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "iops/matrix.hpp"
#include "iops/planner.hpp"

namespace iops {

/// One bit per group; bit g is group g. Grids are limited to 64 groups.
using GroupMask = std::uint64_t;
inline constexpr Index kMaxGroups = 64;

/// Two-level tiling of C = A*B. A is cut into blocks_m x blocks_k blocks of
/// groups_a row groups (tile_m rows each, tile_k columns); B into
/// blocks_k x blocks_n blocks of groups_b column groups (tile_n columns each).
/// The last block or group along an axis may be ragged.
struct TilingGeometry {
  Index m = 0, k = 0, n = 0;
  Index tile_m = 1, tile_k = 1, tile_n = 1;
  Index groups_a = 1, groups_b = 1;
  Index blocks_m = 1, blocks_k = 1, blocks_n = 1;

  Index block_rows() const { return groups_a * tile_m; }
  Index block_cols() const { return groups_b * tile_n; }
  Index row_origin(Index block_row) const { return block_row * block_rows(); }
  Index col_origin(Index block_col) const { return block_col * block_cols(); }
  Index depth_origin(Index block_k) const { return block_k * tile_k; }
};

TilingGeometry make_geometry(const PartitionPlan& plan, Index m, Index k, Index n, Index groups_a, Index groups_b);
TilingGeometry make_geometry(Index m, Index k, Index n, Index tile_m, Index tile_k, Index tile_n, Index groups_a,
                             Index groups_b);

/// Row-partitioned CSC block of A. Per-group streams hold values, group-local
/// row indices and one length per column the group participates in; the
/// shared streams list the non-empty block-local columns with their group
/// bitmaps.
struct RpCscBlock {
  Index block_row = 0;
  Index block_k = 0;
  Index group_rows = 0;  // M_t

  std::vector<std::vector<double>> value;
  std::vector<std::vector<Index>> row_idx;
  std::vector<std::vector<Index>> col_len;

  std::vector<Index> col_idx;
  std::vector<GroupMask> group_bitmap;
  Index col_all_len = 0;

  Index groups() const { return value.size(); }
  Index nnz() const;
  Index group_nnz(Index g) const { return value[g].size(); }
};

/// Column-partitioned CSR block of B, the mirror of RpCscBlock over rows.
struct CpCsrBlock {
  Index block_k = 0;
  Index block_col = 0;
  Index group_cols = 0;  // N_t

  std::vector<std::vector<double>> value;
  std::vector<std::vector<Index>> col_idx;
  std::vector<std::vector<Index>> row_len;

  std::vector<Index> row_idx;
  std::vector<GroupMask> group_bitmap;
  Index row_all_len = 0;

  Index groups() const { return value.size(); }
  Index nnz() const;
  Index group_nnz(Index h) const { return value[h].size(); }
};

RpCscBlock encode_rp_csc(const CscMatrix& a, const TilingGeometry& g, Index block_row, Index block_k);
CpCsrBlock encode_cp_csr(const CsrMatrix& b, const TilingGeometry& g, Index block_k, Index block_col);

/// Throws MalformedBlockError if any stream invariant is broken.
void validate(const RpCscBlock& blk, const TilingGeometry& g);
void validate(const CpCsrBlock& blk, const TilingGeometry& g);

/// Entries of the block in global coordinates (m x k for A, k x n for B),
/// canonical order.
TripletMatrix decode_rp_csc(const RpCscBlock& blk, const TilingGeometry& g);
TripletMatrix decode_cp_csr(const CpCsrBlock& blk, const TilingGeometry& g);

/// Debug dump, one key=value line per stream:
///   rp_csc block=<row>,<k> group_rows=<M_t> groups=<G>
///   col_all_len=<n>
///   col_idx=<i,...>
///   group_bitmap=<hex,...>
///   group<g>.value=<v,...>
///   group<g>.row_idx=<i,...>
///   group<g>.col_len=<n,...>
/// CP-CSR blocks use the mirrored names.
void dump(std::ostream& out, const RpCscBlock& blk);
void dump(std::ostream& out, const CpCsrBlock& blk);

}  // namespace iops
