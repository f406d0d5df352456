#include "iops/encoding.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <string>

#include "iops/error.hpp"
#include "iops/format.hpp"

namespace iops {

namespace {

Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

template <typename Seq, typename Fmt>
void join(std::ostream& out, const Seq& seq, Fmt fmt) {
  bool first = true;
  for (const auto& x : seq) {
    if (!first) out << ',';
    first = false;
    out << fmt(x);
  }
}

std::string hex(GroupMask m) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof(buf), m, 16);
  return std::string(buf, res.ptr);
}

// Shared structure of both block kinds: major-axis stream with per-group
// minor streams. `major_limit` bounds the block-local major index,
// `minor_limit` the group-local minor index.
struct StreamView {
  const std::vector<std::vector<double>>& value;
  const std::vector<std::vector<Index>>& minor;
  const std::vector<std::vector<Index>>& lens;
  const std::vector<Index>& major;
  const std::vector<GroupMask>& bitmap;
  Index all_len;
};

void validate_streams(const StreamView& s, Index groups, Index major_limit, Index minor_limit, const char* kind) {
  auto fail = [&](const std::string& what) { throw MalformedBlockError(std::string(kind) + ": " + what); };
  if (s.value.size() != groups || s.minor.size() != groups || s.lens.size() != groups) {
    fail("group stream count does not match geometry");
  }
  if (s.major.size() != s.all_len || s.bitmap.size() != s.all_len) fail("shared stream lengths disagree");
  for (Index p = 0; p < s.all_len; ++p) {
    if (s.major[p] >= major_limit) fail("block-local index out of range");
    if (p > 0 && s.major[p] <= s.major[p - 1]) fail("shared index stream not strictly increasing");
    if (s.bitmap[p] == 0) fail("empty group bitmap for a listed line");
    if (groups < kMaxGroups && (s.bitmap[p] >> groups) != 0) fail("bitmap names a nonexistent group");
  }
  for (Index g = 0; g < groups; ++g) {
    if (s.value[g].size() != s.minor[g].size()) fail("value/index stream lengths differ");
    Index consumed = 0;
    Index participations = 0;
    for (Index p = 0; p < s.all_len; ++p) {
      if ((s.bitmap[p] >> g) & 1U) ++participations;
    }
    if (participations != s.lens[g].size()) fail("length stream does not match bitmap participation");
    for (Index len : s.lens[g]) {
      if (len == 0) fail("zero-length entry in length stream");
      consumed += len;
    }
    if (consumed != s.value[g].size()) fail("length stream does not cover value stream");
    for (Index i : s.minor[g]) {
      if (i >= minor_limit) fail("group-local index out of range");
    }
  }
}

}  // namespace

TilingGeometry make_geometry(Index m, Index k, Index n, Index tile_m, Index tile_k, Index tile_n, Index groups_a,
                             Index groups_b) {
  if (m == 0 || k == 0 || n == 0) throw DegenerateInputError("matrix dimensions must be positive");
  if (tile_m == 0 || tile_k == 0 || tile_n == 0) throw DegenerateInputError("tile sizes must be positive");
  if (groups_a == 0 || groups_b == 0) throw DegenerateInputError("group counts must be positive");
  if (groups_a > kMaxGroups || groups_b > kMaxGroups) {
    throw DegenerateInputError("group counts are limited to " + std::to_string(kMaxGroups));
  }
  TilingGeometry g;
  g.m = m;
  g.k = k;
  g.n = n;
  g.tile_m = tile_m;
  g.tile_k = tile_k;
  g.tile_n = tile_n;
  g.groups_a = groups_a;
  g.groups_b = groups_b;
  g.blocks_m = ceil_div(m, groups_a * tile_m);
  g.blocks_k = ceil_div(k, tile_k);
  g.blocks_n = ceil_div(n, groups_b * tile_n);
  return g;
}

TilingGeometry make_geometry(const PartitionPlan& plan, Index m, Index k, Index n, Index groups_a, Index groups_b) {
  return make_geometry(m, k, n, plan.tile_m, plan.tile_k, plan.tile_n, groups_a, groups_b);
}

Index RpCscBlock::nnz() const {
  Index total = 0;
  for (const auto& v : value) total += v.size();
  return total;
}

Index CpCsrBlock::nnz() const {
  Index total = 0;
  for (const auto& v : value) total += v.size();
  return total;
}

RpCscBlock encode_rp_csc(const CscMatrix& a, const TilingGeometry& g, Index block_row, Index block_k) {
  if (a.n_rows != g.m || a.n_cols != g.k) throw DimensionError("matrix A does not match tiling geometry");
  if (block_row >= g.blocks_m || block_k >= g.blocks_k) {
    throw BoundsError("A block (" + std::to_string(block_row) + ", " + std::to_string(block_k) + ") outside " +
                      std::to_string(g.blocks_m) + "x" + std::to_string(g.blocks_k));
  }
  RpCscBlock blk;
  blk.block_row = block_row;
  blk.block_k = block_k;
  blk.group_rows = g.tile_m;
  blk.value.resize(g.groups_a);
  blk.row_idx.resize(g.groups_a);
  blk.col_len.resize(g.groups_a);

  const Index row_lo = g.row_origin(block_row);
  const Index row_hi = std::min(g.m, row_lo + g.block_rows());
  const Index col_lo = g.depth_origin(block_k);
  const Index col_hi = std::min(g.k, col_lo + g.tile_k);

  std::vector<Index> count(g.groups_a);
  for (Index c = col_lo; c < col_hi; ++c) {
    const auto first = a.row_idx.begin() + static_cast<std::ptrdiff_t>(a.col_ptr[c]);
    const auto last = a.row_idx.begin() + static_cast<std::ptrdiff_t>(a.col_ptr[c + 1]);
    auto it = std::lower_bound(first, last, row_lo);
    std::fill(count.begin(), count.end(), 0);
    GroupMask mask = 0;
    for (; it != last && *it < row_hi; ++it) {
      const Index local = *it - row_lo;
      const Index grp = local / g.tile_m;
      blk.value[grp].push_back(a.value[static_cast<Index>(it - a.row_idx.begin())]);
      blk.row_idx[grp].push_back(local % g.tile_m);
      ++count[grp];
      mask |= GroupMask{1} << grp;
    }
    if (mask == 0) continue;
    for (Index grp = 0; grp < g.groups_a; ++grp) {
      if (count[grp]) blk.col_len[grp].push_back(count[grp]);
    }
    blk.col_idx.push_back(c - col_lo);
    blk.group_bitmap.push_back(mask);
  }
  blk.col_all_len = blk.col_idx.size();
  return blk;
}

CpCsrBlock encode_cp_csr(const CsrMatrix& b, const TilingGeometry& g, Index block_k, Index block_col) {
  if (b.n_rows != g.k || b.n_cols != g.n) throw DimensionError("matrix B does not match tiling geometry");
  if (block_k >= g.blocks_k || block_col >= g.blocks_n) {
    throw BoundsError("B block (" + std::to_string(block_k) + ", " + std::to_string(block_col) + ") outside " +
                      std::to_string(g.blocks_k) + "x" + std::to_string(g.blocks_n));
  }
  CpCsrBlock blk;
  blk.block_k = block_k;
  blk.block_col = block_col;
  blk.group_cols = g.tile_n;
  blk.value.resize(g.groups_b);
  blk.col_idx.resize(g.groups_b);
  blk.row_len.resize(g.groups_b);

  const Index col_lo = g.col_origin(block_col);
  const Index col_hi = std::min(g.n, col_lo + g.block_cols());
  const Index row_lo = g.depth_origin(block_k);
  const Index row_hi = std::min(g.k, row_lo + g.tile_k);

  std::vector<Index> count(g.groups_b);
  for (Index r = row_lo; r < row_hi; ++r) {
    const auto first = b.col_idx.begin() + static_cast<std::ptrdiff_t>(b.row_ptr[r]);
    const auto last = b.col_idx.begin() + static_cast<std::ptrdiff_t>(b.row_ptr[r + 1]);
    auto it = std::lower_bound(first, last, col_lo);
    std::fill(count.begin(), count.end(), 0);
    GroupMask mask = 0;
    for (; it != last && *it < col_hi; ++it) {
      const Index local = *it - col_lo;
      const Index grp = local / g.tile_n;
      blk.value[grp].push_back(b.value[static_cast<Index>(it - b.col_idx.begin())]);
      blk.col_idx[grp].push_back(local % g.tile_n);
      ++count[grp];
      mask |= GroupMask{1} << grp;
    }
    if (mask == 0) continue;
    for (Index grp = 0; grp < g.groups_b; ++grp) {
      if (count[grp]) blk.row_len[grp].push_back(count[grp]);
    }
    blk.row_idx.push_back(r - row_lo);
    blk.group_bitmap.push_back(mask);
  }
  blk.row_all_len = blk.row_idx.size();
  return blk;
}

void validate(const RpCscBlock& blk, const TilingGeometry& g) {
  if (blk.group_rows != g.tile_m) throw MalformedBlockError("rp_csc: group row count differs from geometry");
  if (blk.block_row >= g.blocks_m || blk.block_k >= g.blocks_k) {
    throw MalformedBlockError("rp_csc: block coordinates outside geometry");
  }
  const Index depth = std::min(g.tile_k, g.k - g.depth_origin(blk.block_k));
  validate_streams({blk.value, blk.row_idx, blk.col_len, blk.col_idx, blk.group_bitmap, blk.col_all_len},
                   g.groups_a, depth, g.tile_m, "rp_csc");
  const Index row_lo = g.row_origin(blk.block_row);
  for (Index grp = 0; grp < g.groups_a; ++grp) {
    for (Index r : blk.row_idx[grp]) {
      if (row_lo + grp * g.tile_m + r >= g.m) throw MalformedBlockError("rp_csc: row beyond matrix edge");
    }
  }
}

void validate(const CpCsrBlock& blk, const TilingGeometry& g) {
  if (blk.group_cols != g.tile_n) throw MalformedBlockError("cp_csr: group column count differs from geometry");
  if (blk.block_k >= g.blocks_k || blk.block_col >= g.blocks_n) {
    throw MalformedBlockError("cp_csr: block coordinates outside geometry");
  }
  const Index depth = std::min(g.tile_k, g.k - g.depth_origin(blk.block_k));
  validate_streams({blk.value, blk.col_idx, blk.row_len, blk.row_idx, blk.group_bitmap, blk.row_all_len},
                   g.groups_b, depth, g.tile_n, "cp_csr");
  const Index col_lo = g.col_origin(blk.block_col);
  for (Index grp = 0; grp < g.groups_b; ++grp) {
    for (Index c : blk.col_idx[grp]) {
      if (col_lo + grp * g.tile_n + c >= g.n) throw MalformedBlockError("cp_csr: column beyond matrix edge");
    }
  }
}

TripletMatrix decode_rp_csc(const RpCscBlock& blk, const TilingGeometry& g) {
  validate(blk, g);
  TripletMatrix t{g.m, g.k, {}};
  t.entries.reserve(blk.nnz());
  std::vector<Index> len_cursor(blk.groups()), val_cursor(blk.groups());
  const Index row_lo = g.row_origin(blk.block_row);
  const Index col_lo = g.depth_origin(blk.block_k);
  for (Index p = 0; p < blk.col_all_len; ++p) {
    for (Index grp = 0; grp < blk.groups(); ++grp) {
      if (!((blk.group_bitmap[p] >> grp) & 1U)) continue;
      const Index len = blk.col_len[grp][len_cursor[grp]++];
      for (Index i = 0; i < len; ++i, ++val_cursor[grp]) {
        t.entries.push_back({row_lo + grp * g.tile_m + blk.row_idx[grp][val_cursor[grp]], col_lo + blk.col_idx[p],
                             blk.value[grp][val_cursor[grp]]});
      }
    }
  }
  return canonicalize(std::move(t));
}

TripletMatrix decode_cp_csr(const CpCsrBlock& blk, const TilingGeometry& g) {
  validate(blk, g);
  TripletMatrix t{g.k, g.n, {}};
  t.entries.reserve(blk.nnz());
  std::vector<Index> len_cursor(blk.groups()), val_cursor(blk.groups());
  const Index row_lo = g.depth_origin(blk.block_k);
  const Index col_lo = g.col_origin(blk.block_col);
  for (Index p = 0; p < blk.row_all_len; ++p) {
    for (Index grp = 0; grp < blk.groups(); ++grp) {
      if (!((blk.group_bitmap[p] >> grp) & 1U)) continue;
      const Index len = blk.row_len[grp][len_cursor[grp]++];
      for (Index i = 0; i < len; ++i, ++val_cursor[grp]) {
        t.entries.push_back({row_lo + blk.row_idx[p], col_lo + grp * g.tile_n + blk.col_idx[grp][val_cursor[grp]],
                             blk.value[grp][val_cursor[grp]]});
      }
    }
  }
  return canonicalize(std::move(t));
}

void dump(std::ostream& out, const RpCscBlock& blk) {
  const auto num = [](auto x) { return std::to_string(x); };
  out << "rp_csc block=" << blk.block_row << ',' << blk.block_k << " group_rows=" << blk.group_rows
      << " groups=" << blk.groups() << '\n';
  out << "col_all_len=" << blk.col_all_len << '\n';
  out << "col_idx=";
  join(out, blk.col_idx, num);
  out << "\ngroup_bitmap=";
  join(out, blk.group_bitmap, hex);
  out << '\n';
  for (Index grp = 0; grp < blk.groups(); ++grp) {
    out << "group" << grp << ".value=";
    join(out, blk.value[grp], format_real);
    out << "\ngroup" << grp << ".row_idx=";
    join(out, blk.row_idx[grp], num);
    out << "\ngroup" << grp << ".col_len=";
    join(out, blk.col_len[grp], num);
    out << '\n';
  }
}

void dump(std::ostream& out, const CpCsrBlock& blk) {
  const auto num = [](auto x) { return std::to_string(x); };
  out << "cp_csr block=" << blk.block_k << ',' << blk.block_col << " group_cols=" << blk.group_cols
      << " groups=" << blk.groups() << '\n';
  out << "row_all_len=" << blk.row_all_len << '\n';
  out << "row_idx=";
  join(out, blk.row_idx, num);
  out << "\ngroup_bitmap=";
  join(out, blk.group_bitmap, hex);
  out << '\n';
  for (Index grp = 0; grp < blk.groups(); ++grp) {
    out << "group" << grp << ".value=";
    join(out, blk.value[grp], format_real);
    out << "\ngroup" << grp << ".col_idx=";
    join(out, blk.col_idx[grp], num);
    out << "\ngroup" << grp << ".row_len=";
    join(out, blk.row_len[grp], num);
    out << '\n';
  }
}

}  // namespace iops
