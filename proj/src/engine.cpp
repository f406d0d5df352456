#include "iops/engine.hpp"

#include <algorithm>
#include <ostream>
#include <queue>
#include <string>
#include <tuple>

#include "iops/error.hpp"
#include "iops/format.hpp"

namespace iops {

EngineConfig engine_config_for(const HardwareConfig& hw) {
  EngineConfig cfg;
  cfg.psum_capacity = hw.buffer_psum;
  return cfg;
}

// ---------------------------------------------------------------------------
// PsumStore

PsumStore::PsumStore(Index rows, Index segment_slots, Index capacity)
    : segment_slots_(segment_slots), capacity_(capacity), vc_addr_(rows * segment_slots), row_len_(rows, 0) {
  if (segment_slots == 0 || capacity == 0) throw DegenerateInputError("psum store needs at least one slot");
}

bool PsumStore::can_append(Index row) const {
  return row_len_[row] < segment_slots_ && value_.size() < capacity_;
}

void PsumStore::append(Index row, Index col, double value) {
  if (row >= rows()) throw BoundsError("psum row " + std::to_string(row) + " outside store");
  if (row_len_[row] >= segment_slots_) {
    throw OverflowError("row " + std::to_string(row) + " segment full (" + std::to_string(segment_slots_) + " slots)");
  }
  if (value_.size() >= capacity_) {
    throw OverflowError("psum store full (" + std::to_string(capacity_) + " entries)");
  }
  vc_addr_[row * segment_slots_ + row_len_[row]] = value_.size();
  ++row_len_[row];
  value_.push_back(value);
  col_idx_.push_back(col);
}

void PsumStore::clear() {
  value_.clear();
  col_idx_.clear();
  std::fill(row_len_.begin(), row_len_.end(), 0);
}

std::span<const Index> PsumStore::row_addresses(Index row) const {
  return std::span<const Index>(vc_addr_).subspan(row * segment_slots_, row_len_[row]);
}

void PsumStore::check_invariants() const {
  if (value_.size() != col_idx_.size()) throw MalformedBlockError("psum value/col streams differ in length");
  Index total = 0;
  std::vector<char> seen(value_.size(), 0);
  for (Index r = 0; r < rows(); ++r) {
    if (row_len_[r] > segment_slots_) throw MalformedBlockError("psum row length exceeds its segment");
    total += row_len_[r];
    for (Index addr : row_addresses(r)) {
      if (addr >= value_.size()) throw MalformedBlockError("psum address beyond store");
      if (seen[addr]) throw MalformedBlockError("psum address listed twice");
      seen[addr] = 1;
    }
  }
  if (total != value_.size()) throw MalformedBlockError("psum row lengths do not sum to store size");
}

// ---------------------------------------------------------------------------
// Psum computation

Index PsumGrid::total_products() const {
  Index n = 0;
  for (const auto& pe : pes) n += pe.products;
  return n;
}

Index PsumGrid::spill_events() const {
  Index n = 0;
  for (const auto& pe : pes) n += pe.spill_events;
  return n;
}

PsumGrid compute_psums(const RpCscBlock& a_blk, const CpCsrBlock& b_blk, const EngineConfig& cfg) {
  if (a_blk.block_k != b_blk.block_k) {
    throw DimensionError("A block k=" + std::to_string(a_blk.block_k) + " paired with B block k=" +
                         std::to_string(b_blk.block_k));
  }
  const Index ga = a_blk.groups(), gb = b_blk.groups();
  const Index slots = cfg.segment_slots ? cfg.segment_slots : b_blk.group_cols;

  PsumGrid grid;
  grid.groups_a = ga;
  grid.groups_b = gb;
  grid.block_row = a_blk.block_row;
  grid.block_k = a_blk.block_k;
  grid.block_col = b_blk.block_col;
  grid.pes.reserve(ga * gb);
  for (Index i = 0; i < ga * gb; ++i) {
    grid.pes.push_back(PeState{PsumStore(a_blk.group_rows, slots, cfg.psum_capacity), {}, {}, 0, 0, 0, 0});
  }

  auto emit = [&](Index g, Index h, Index row, Index col, double v) {
    PeState& pe = grid.at(g, h);
    if (!pe.store.can_append(row)) {
      if (cfg.overflow_policy == OverflowPolicy::kFail) {
        throw OverflowError("psum overflow in PE(" + std::to_string(g) + "," + std::to_string(h) + ") at local row " +
                            std::to_string(row));
      }
      pe.spilled.push_back(address_map(pe.store));
      pe.spilled_row_len.emplace_back(pe.store.row_lengths().begin(), pe.store.row_lengths().end());
      pe.spilled_entries += pe.store.size();
      ++pe.spill_events;
      pe.store.clear();
    }
    pe.store.append(row, col, v);
    ++pe.products;
    pe.peak_occupancy = std::max(pe.peak_occupancy, pe.store.size());
  };

  // Per-group cursors into the length and value streams.
  std::vector<Index> a_len(ga, 0), a_val(ga, 0), b_len(gb, 0), b_val(gb, 0);
  auto advance_a = [&](Index p) {
    for (Index g = 0; g < ga; ++g) {
      if ((a_blk.group_bitmap[p] >> g) & 1U) a_val[g] += a_blk.col_len[g][a_len[g]++];
    }
  };
  auto advance_b = [&](Index q) {
    for (Index h = 0; h < gb; ++h) {
      if ((b_blk.group_bitmap[q] >> h) & 1U) b_val[h] += b_blk.row_len[h][b_len[h]++];
    }
  };

  Index p = 0, q = 0;
  while (p < a_blk.col_all_len && q < b_blk.row_all_len) {
    const Index ka = a_blk.col_idx[p], kb = b_blk.row_idx[q];
    if (ka < kb) {
      advance_a(p++);
      continue;
    }
    if (kb < ka) {
      advance_b(q++);
      continue;
    }
    const GroupMask amask = a_blk.group_bitmap[p], bmask = b_blk.group_bitmap[q];
    for (Index g = 0; g < ga; ++g) {
      if (!((amask >> g) & 1U)) continue;
      const Index alen = a_blk.col_len[g][a_len[g]];
      for (Index h = 0; h < gb; ++h) {
        if (!((bmask >> h) & 1U)) continue;
        const Index blen = b_blk.row_len[h][b_len[h]];
        for (Index i = 0; i < alen; ++i) {
          const double av = a_blk.value[g][a_val[g] + i];
          const Index row = a_blk.row_idx[g][a_val[g] + i];
          for (Index j = 0; j < blen; ++j) {
            emit(g, h, row, b_blk.col_idx[h][b_val[h] + j], av * b_blk.value[h][b_val[h] + j]);
          }
        }
      }
    }
    advance_a(p++);
    advance_b(q++);
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Address mapping and merging

std::vector<Index> sorted_row_addresses(const PsumStore& ps, Index row) {
  const auto addrs = ps.row_addresses(row);
  std::vector<Index> out(addrs.begin(), addrs.end());
  const auto cols = ps.col_indices();
  std::stable_sort(out.begin(), out.end(), [&](Index x, Index y) { return cols[x] < cols[y]; });
  return out;
}

OutputBlock address_map(const PsumStore& ps) {
  OutputBlock out;
  const auto cols = ps.col_indices();
  const auto vals = ps.values();
  for (Index r = 0; r < ps.rows(); ++r) {
    if (ps.row_lengths()[r] == 0) continue;
    const auto order = sorted_row_addresses(ps, r);
    Index cur = cols[order.front()];
    double sum = vals[order.front()];
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (cols[order[i]] == cur) {
        sum += vals[order[i]];
      } else {
        out.entries.push_back({r, cur, sum});
        cur = cols[order[i]];
        sum = vals[order[i]];
      }
    }
    out.entries.push_back({r, cur, sum});
  }
  return out;
}

OutputBlock merge_output_blocks(std::span<const OutputBlock> parts) {
  using Head = std::tuple<Index, Index, std::size_t>;  // row, col, part
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heap;
  std::vector<std::size_t> cursor(parts.size(), 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    total += parts[i].entries.size();
    if (!parts[i].entries.empty()) heap.emplace(parts[i].entries[0].row, parts[i].entries[0].col, i);
  }
  OutputBlock out;
  out.entries.reserve(total);
  while (!heap.empty()) {
    const auto [row, col, part] = heap.top();
    heap.pop();
    const double v = parts[part].entries[cursor[part]].value;
    if (!out.entries.empty() && out.entries.back().row == row && out.entries.back().col == col) {
      out.entries.back().value += v;
    } else {
      out.entries.push_back({row, col, v});
    }
    if (++cursor[part] < parts[part].entries.size()) {
      const auto& e = parts[part].entries[cursor[part]];
      heap.emplace(e.row, e.col, part);
    }
  }
  return out;
}

OutputBlock drain(const PeState& pe) {
  if (pe.spilled.empty()) return address_map(pe.store);
  std::vector<OutputBlock> parts = pe.spilled;
  parts.push_back(address_map(pe.store));
  return merge_output_blocks(parts);
}

CscMatrix assemble_output(std::span<const PlacedOutput> parts, const TilingGeometry& g) {
  TripletMatrix t{g.m, g.n, {}};
  for (const auto& part : parts) {
    const Index row_lo = g.row_origin(part.block_row) + part.group_a * g.tile_m;
    const Index col_lo = g.col_origin(part.block_col) + part.group_b * g.tile_n;
    for (const auto& e : part.block.entries) {
      t.entries.push_back({row_lo + e.row, col_lo + e.col, e.value});
    }
  }
  std::sort(t.entries.begin(), t.entries.end(), [](const Triplet& x, const Triplet& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  for (std::size_t i = 1; i < t.entries.size(); ++i) {
    if (t.entries[i].row == t.entries[i - 1].row && t.entries[i].col == t.entries[i - 1].col) {
      throw Error("internal error: output blocks collide at (" + std::to_string(t.entries[i].row) + ", " +
                  std::to_string(t.entries[i].col) + ")");
    }
  }
  return to_csc(t);
}

// ---------------------------------------------------------------------------
// SDMM

GatheredRows gather_dense_rows(const DenseMatrix& b, const RpCscBlock& a_blk, const TilingGeometry& g,
                               Index block_col) {
  if (b.n_cols != g.n) throw DimensionError("dense B does not match tiling geometry");
  GatheredRows out;
  out.block_k = a_blk.block_k;
  out.block_col = block_col;
  const Index col_lo = g.col_origin(block_col);
  const Index col_hi = std::min(g.n, col_lo + g.block_cols());
  out.width = col_hi > col_lo ? col_hi - col_lo : 0;
  const Index k_lo = g.depth_origin(a_blk.block_k);
  for (Index p = 0; p < a_blk.col_all_len; ++p) {
    const Index k = k_lo + a_blk.col_idx[p];
    if (k >= b.n_rows) {
      throw GatherError("dense B has no row " + std::to_string(k) + " (has " + std::to_string(b.n_rows) + ")");
    }
    const double* row = &b.data[k * b.n_cols];
    out.rows.emplace(a_blk.col_idx[p], std::vector<double>(row + col_lo, row + col_hi));
  }
  return out;
}

SdmmGrid sdmm_compute(const RpCscBlock& a_blk, const GatheredRows& rows, const TilingGeometry& g) {
  if (rows.block_k != a_blk.block_k) throw GatherError("gathered rows belong to a different inner block");
  SdmmGrid grid;
  grid.groups_a = a_blk.groups();
  grid.groups_b = g.groups_b;
  grid.block_row = a_blk.block_row;
  grid.block_k = a_blk.block_k;
  grid.block_col = rows.block_col;
  grid.banks.assign(grid.groups_a * grid.groups_b, DensePsumBank(g.tile_m, g.tile_n));

  std::vector<Index> len_cur(grid.groups_a, 0), val_cur(grid.groups_a, 0);
  for (Index p = 0; p < a_blk.col_all_len; ++p) {
    const auto it = rows.rows.find(a_blk.col_idx[p]);
    if (it == rows.rows.end()) {
      throw GatherError("no dense row gathered for block column " + std::to_string(a_blk.col_idx[p]));
    }
    const std::vector<double>& brow = it->second;
    for (Index gi = 0; gi < grid.groups_a; ++gi) {
      if (!((a_blk.group_bitmap[p] >> gi) & 1U)) continue;
      const Index len = a_blk.col_len[gi][len_cur[gi]];
      for (Index h = 0; h < grid.groups_b; ++h) {
        DensePsumBank& bank = grid.at(gi, h);
        const Index c_lo = h * g.tile_n;
        const Index c_hi = std::min(c_lo + g.tile_n, static_cast<Index>(brow.size()));
        for (Index i = 0; i < len; ++i) {
          const double av = a_blk.value[gi][val_cur[gi] + i];
          const Index r = a_blk.row_idx[gi][val_cur[gi] + i];
          for (Index c = c_lo; c < c_hi; ++c) {
            bank.at(r, c - c_lo) += av * brow[c];
            ++grid.products;
          }
        }
      }
      val_cur[gi] += len;
      ++len_cur[gi];
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

void check_dims(const CscMatrix& a, Index b_rows, Index b_cols, const TilingGeometry& g) {
  if (a.n_cols != b_rows) {
    throw DimensionError("dimension mismatch: A is " + std::to_string(a.n_rows) + "x" + std::to_string(a.n_cols) +
                         ", B is " + std::to_string(b_rows) + "x" + std::to_string(b_cols));
  }
  if (a.n_rows != g.m || a.n_cols != g.k || b_cols != g.n) {
    throw DimensionError("tiling geometry does not cover the operands");
  }
}

std::string tile_name(Index br, Index bc, Index bk) {
  return "tile (" + std::to_string(br) + "," + std::to_string(bc) + "," + std::to_string(bk) + ")";
}

SpmmResult run_ssmm(const CscMatrix& a, const CsrMatrix& b, const TilingGeometry& g, const EngineConfig& cfg,
                    const TileObserver& observer) {
  check_dims(a, b.n_rows, b.n_cols, g);
  std::vector<CpCsrBlock> b_blocks;
  b_blocks.reserve(g.blocks_k * g.blocks_n);
  for (Index bk = 0; bk < g.blocks_k; ++bk) {
    for (Index bc = 0; bc < g.blocks_n; ++bc) b_blocks.push_back(encode_cp_csr(b, g, bk, bc));
  }

  SpmmResult result;
  std::vector<PlacedOutput> placed;
  std::vector<RpCscBlock> a_blocks(g.blocks_k);
  std::vector<std::vector<OutputBlock>> parts(g.groups_a * g.groups_b);
  for (Index br = 0; br < g.blocks_m; ++br) {
    for (Index bk = 0; bk < g.blocks_k; ++bk) a_blocks[bk] = encode_rp_csc(a, g, br, bk);
    for (Index bc = 0; bc < g.blocks_n; ++bc) {
      for (auto& p : parts) p.clear();
      for (Index bk = 0; bk < g.blocks_k; ++bk) {
        const CpCsrBlock& b_blk = b_blocks[bk * g.blocks_n + bc];
        PsumGrid grid;
        try {
          grid = compute_psums(a_blocks[bk], b_blk, cfg);
        } catch (const OverflowError& e) {
          throw OverflowError(std::string(e.what()) + " in " + tile_name(br, bc, bk));
        }
        if (observer) observer(TilePass{br, bc, bk, &a_blocks[bk], &b_blk, &grid, nullptr});
        for (std::size_t i = 0; i < grid.pes.size(); ++i) {
          const PeState& pe = grid.pes[i];
          result.totals.products += pe.products;
          result.totals.spill_events += pe.spill_events;
          result.totals.spilled_entries += pe.spilled_entries;
          parts[i].push_back(drain(pe));
        }
      }
      for (Index ga = 0; ga < g.groups_a; ++ga) {
        for (Index gb = 0; gb < g.groups_b; ++gb) {
          OutputBlock merged = merge_output_blocks(parts[ga * g.groups_b + gb]);
          if (!merged.entries.empty()) placed.push_back({br, ga, bc, gb, std::move(merged)});
        }
      }
    }
  }
  result.output = assemble_output(placed, g);
  return result;
}

SpmmResult run_sdmm(const CscMatrix& a, const DenseMatrix& b, const TilingGeometry& g, const TileObserver& observer) {
  check_dims(a, b.n_rows, b.n_cols, g);
  SpmmResult result;
  DenseMatrix c(g.m, g.n);
  for (Index br = 0; br < g.blocks_m; ++br) {
    std::vector<RpCscBlock> a_blocks;
    a_blocks.reserve(g.blocks_k);
    for (Index bk = 0; bk < g.blocks_k; ++bk) a_blocks.push_back(encode_rp_csc(a, g, br, bk));
    for (Index bc = 0; bc < g.blocks_n; ++bc) {
      for (Index bk = 0; bk < g.blocks_k; ++bk) {
        const GatheredRows rows = gather_dense_rows(b, a_blocks[bk], g, bc);
        const SdmmGrid grid = sdmm_compute(a_blocks[bk], rows, g);
        if (observer) observer(TilePass{br, bc, bk, &a_blocks[bk], nullptr, nullptr, &grid});
        result.totals.products += grid.products;
        for (Index ga = 0; ga < g.groups_a; ++ga) {
          const Index row_lo = g.row_origin(br) + ga * g.tile_m;
          for (Index gb = 0; gb < g.groups_b; ++gb) {
            const Index col_lo = g.col_origin(bc) + gb * g.tile_n;
            const DensePsumBank& bank = grid.at(ga, gb);
            for (Index r = 0; r < bank.rows && row_lo + r < g.m; ++r) {
              for (Index cc = 0; cc < bank.cols && col_lo + cc < g.n; ++cc) c(row_lo + r, col_lo + cc) += bank.at(r, cc);
            }
          }
        }
      }
    }
  }
  result.output = std::move(c);
  return result;
}

}  // namespace

SpmmResult spmm(const CscMatrix& a, const RightOperand& b, ComputeMode mode, const TilingGeometry& g,
                const EngineConfig& cfg, const TileObserver& observer) {
  if (mode == ComputeMode::kSsmm) {
    if (const auto* csr = std::get_if<CsrMatrix>(&b)) return run_ssmm(a, *csr, g, cfg, observer);
    return run_ssmm(a, to_csr(to_triplets(std::get<DenseMatrix>(b))), g, cfg, observer);
  }
  if (const auto* dense = std::get_if<DenseMatrix>(&b)) return run_sdmm(a, *dense, g, observer);
  return run_sdmm(a, to_dense(std::get<CsrMatrix>(b)), g, observer);
}

void dump(std::ostream& out, const PsumStore& ps) {
  auto join = [&](auto seq, auto fmt) {
    bool first = true;
    for (const auto& x : seq) {
      if (!first) out << ',';
      first = false;
      out << fmt(x);
    }
  };
  const auto num = [](Index x) { return std::to_string(x); };
  out << "psum_store rows=" << ps.rows() << " segment_slots=" << ps.segment_slots() << " capacity=" << ps.capacity()
      << " size=" << ps.size() << '\n';
  out << "value=";
  join(ps.values(), format_real);
  out << "\ncol_idx=";
  join(ps.col_indices(), num);
  out << "\nrow_len=";
  join(ps.row_lengths(), num);
  out << '\n';
  for (Index r = 0; r < ps.rows(); ++r) {
    if (ps.row_lengths()[r] == 0) continue;
    out << "row" << r << ".vc_addr=";
    join(ps.row_addresses(r), num);
    out << '\n';
  }
}

}  // namespace iops
