#include "iops/cost_model.hpp"

#include <algorithm>
#include <ostream>

#include "iops/error.hpp"
#include "iops/format.hpp"

namespace iops {

Index peak_macs_per_cycle(const HardwareConfig& hw) { return hw.groups_a * hw.groups_b; }

namespace {

// Largest per-group length at each shared index of a block's streams.
std::vector<Index> max_lengths(const std::vector<std::vector<Index>>& lens, const std::vector<GroupMask>& bitmap) {
  std::vector<Index> cursor(lens.size(), 0);
  std::vector<Index> out(bitmap.size(), 0);
  for (std::size_t p = 0; p < bitmap.size(); ++p) {
    for (std::size_t g = 0; g < lens.size(); ++g) {
      if ((bitmap[p] >> g) & 1U) out[p] = std::max(out[p], lens[g][cursor[g]++]);
    }
  }
  return out;
}

std::uint64_t row_cycles(std::span<const Index> row_len) {
  std::uint64_t c = 0;
  for (Index len : row_len) {
    if (len) c += 2 * len + 1;
  }
  return c;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

Index count_nonzeros(const DenseMatrix& m) {
  return static_cast<Index>(std::count_if(m.data.begin(), m.data.end(), [](double v) { return v != 0.0; }));
}

}  // namespace

std::uint64_t compute_cycles(const RpCscBlock& a_blk, const CpCsrBlock& b_blk) {
  const auto a_max = max_lengths(a_blk.col_len, a_blk.group_bitmap);
  const auto b_max = max_lengths(b_blk.row_len, b_blk.group_bitmap);
  std::uint64_t cycles = 0;
  Index p = 0, q = 0;
  while (p < a_blk.col_all_len && q < b_blk.row_all_len) {
    if (a_blk.col_idx[p] < b_blk.row_idx[q]) {
      ++cycles;
      ++p;
    } else if (b_blk.row_idx[q] < a_blk.col_idx[p]) {
      ++cycles;
      ++q;
    } else {
      cycles += static_cast<std::uint64_t>(a_max[p]) * b_max[q];
      ++p;
      ++q;
    }
  }
  cycles += (a_blk.col_all_len - p) + (b_blk.row_all_len - q);
  return cycles;
}

std::uint64_t sdmm_compute_cycles(const RpCscBlock& a_blk, Index tile_n, Index width) {
  const auto a_max = max_lengths(a_blk.col_len, a_blk.group_bitmap);
  const Index w = std::min(tile_n, width);
  std::uint64_t cycles = 0;
  for (Index len : a_max) cycles += static_cast<std::uint64_t>(len) * w;
  return cycles;
}

std::uint64_t addrmap_cycles(const PsumGrid& grid) {
  std::uint64_t worst = 0;
  for (const auto& pe : grid.pes) {
    std::uint64_t c = row_cycles(pe.store.row_lengths());
    for (const auto& snap : pe.spilled_row_len) c += row_cycles(snap);
    worst = std::max(worst, c);
  }
  return worst;
}

double strategy_dram_bits(ReuseStrategy s, const PartitionPlan& plan, const WorkloadSpec& wl) {
  const double tm = static_cast<double>(plan.blocks_m), tn = static_cast<double>(plan.blocks_n);
  switch (s) {
    case ReuseStrategy::kRaf:
      return wl.storage_b_bits * tm + wl.storage_a_bits;
    case ReuseStrategy::kRbf:
      return wl.storage_a_bits * tn + wl.storage_b_bits;
    case ReuseStrategy::kRabe:
      return wl.storage_a_bits * tn + wl.storage_b_bits * tm;
  }
  return 0.0;
}

BaselineCounters baseline_counters(const CscMatrix& a, const CsrMatrix& b, Index groups_a, Index groups_b) {
  if (a.n_cols != b.n_rows) {
    throw DimensionError("dimension mismatch: A has " + std::to_string(a.n_cols) + " columns, B has " +
                         std::to_string(b.n_rows) + " rows");
  }
  BaselineCounters c;
  c.inner_macs = static_cast<std::uint64_t>(a.n_rows) * a.n_cols * b.n_cols;
  for (Index k = 0; k < a.n_cols; ++k) {
    c.iohp_macs += static_cast<std::uint64_t>(a.col_ptr[k + 1] - a.col_ptr[k]) * (b.row_ptr[k + 1] - b.row_ptr[k]);
  }
  c.inner_zero_macs = c.inner_macs - c.iohp_macs;
  const std::uint64_t nnz_a = a.value.size(), nnz_b = b.value.size();
  c.outer_input_loads = nnz_a * groups_b + nnz_b * groups_a;
  c.iohp_input_loads = nnz_a + nnz_b;
  return c;
}

namespace {

struct PassRecord {
  bool seen = false;
  Index a_nnz = 0;
  Index a_group_max = 0;
  std::vector<Index> a_group_nnz;
  Index b_nnz = 0;
  Index b_group_max = 0;
  std::vector<Index> b_group_nnz;
  std::uint64_t compute = 0;
  std::uint64_t addrmap = 0;
  Index spill_events = 0;
  Index spilled_entries = 0;
  Index peak_occupancy = 0;
};

}  // namespace

SimulationResult simulate(const CscMatrix& a, const RightOperand& b, const PartitionPlan& plan,
                          const HardwareConfig& hw, ComputeMode mode, const EngineConfig& cfg,
                          const std::string& workload) {
  hw.validate();
  const Index b_rows = std::visit([](const auto& m) { return m.n_rows; }, b);
  const Index b_cols = std::visit([](const auto& m) { return m.n_cols; }, b);
  if (a.n_cols != b_rows) {
    throw DimensionError("dimension mismatch: A is " + std::to_string(a.n_rows) + "x" + std::to_string(a.n_cols) +
                         ", B is " + std::to_string(b_rows) + "x" + std::to_string(b_cols));
  }
  const TilingGeometry g = make_geometry(plan, a.n_rows, a.n_cols, b_cols, hw.groups_a, hw.groups_b);
  if (g.blocks_m != plan.blocks_m || g.blocks_k != plan.blocks_k || g.blocks_n != plan.blocks_n) {
    throw DimensionError("plan block counts do not match the operands and grid");
  }
  const Index nnz_b = std::holds_alternative<CsrMatrix>(b) ? std::get<CsrMatrix>(b).value.size()
                                                           : count_nonzeros(std::get<DenseMatrix>(b));
  const WorkloadSpec wl = make_workload_exact(a.n_rows, a.n_cols, b_cols, a.value.size(), nnz_b, hw, mode);

  std::vector<PassRecord> records(g.blocks_m * g.blocks_n * g.blocks_k);
  auto slot = [&](Index br, Index bc, Index bk) -> PassRecord& {
    return records[(br * g.blocks_n + bc) * g.blocks_k + bk];
  };
  const auto observer = [&](const TilePass& pass) {
    PassRecord& r = slot(pass.block_row, pass.block_col, pass.block_k);
    r.seen = true;
    r.a_nnz = pass.a->nnz();
    for (Index gi = 0; gi < pass.a->groups(); ++gi) {
      r.a_group_nnz.push_back(pass.a->group_nnz(gi));
      r.a_group_max = std::max(r.a_group_max, pass.a->group_nnz(gi));
    }
    if (pass.psums) {
      r.b_nnz = pass.b->nnz();
      for (Index h = 0; h < pass.b->groups(); ++h) {
        r.b_group_nnz.push_back(pass.b->group_nnz(h));
        r.b_group_max = std::max(r.b_group_max, pass.b->group_nnz(h));
      }
      r.compute = compute_cycles(*pass.a, *pass.b);
      r.addrmap = addrmap_cycles(*pass.psums);
      for (const auto& pe : pass.psums->pes) {
        r.spill_events += pe.spill_events;
        r.spilled_entries += pe.spilled_entries;
        r.peak_occupancy = std::max(r.peak_occupancy, pe.peak_occupancy);
      }
    } else {
      const Index col_lo = g.col_origin(pass.block_col);
      const Index width = std::min(g.n, col_lo + g.block_cols()) - col_lo;
      r.compute = sdmm_compute_cycles(*pass.a, g.tile_n, width);
    }
  };

  SpmmResult run = spmm(a, b, mode, g, cfg, observer);

  SimStats s;
  s.workload = workload;
  s.mode = mode;
  s.plan = plan;
  s.predicted_dram_bits = strategy_dram_bits(plan.strategy, plan, wl);
  s.achieved_macs = run.totals.products;
  s.spill_events = run.totals.spill_events;
  s.peak_macs_per_cycle = peak_macs_per_cycle(hw);
  s.freq_hz = hw.freq_hz;

  const std::uint64_t entry_bits = hw.bits_value + hw.bits_index;
  const bool sdmm = mode == ComputeMode::kSdmm;
  Index resident_a = 0, resident_b = 0;  // largest per-group occupancy
  std::vector<Index> strip(std::max(g.groups_a, g.groups_b), 0);

  auto visit = [&](Index br, Index bc, Index bk) {
    const PassRecord& r = slot(br, bc, bk);
    if (!r.seen) throw Error("internal error: tile pass was not observed");
    const Index k_lo = g.depth_origin(bk);
    const Index k_width = std::min(g.k, k_lo + g.tile_k) - k_lo;
    const Index col_lo = g.col_origin(bc);
    const Index col_width = std::min(g.n, col_lo + g.block_cols()) - col_lo;

    const bool a_new = plan.strategy != ReuseStrategy::kRaf || bc == 0;
    const bool b_new = plan.strategy != ReuseStrategy::kRbf || br == 0;
    StageTrace t{br, bc, bk, 0, r.compute, r.addrmap, r.spill_events};
    if (a_new) {
      s.dram.a_read_bits += r.a_nnz * entry_bits + (br == 0 ? k_width * hw.bits_len : 0);
      t.encode_cycles += r.a_nnz;
    }
    if (b_new) {
      if (sdmm) {
        s.dram.b_read_bits += static_cast<std::uint64_t>(k_width) * col_width * hw.bits_value;
      } else {
        s.dram.b_read_bits += r.b_nnz * entry_bits + (bc == 0 ? k_width * hw.bits_len : 0);
        t.encode_cycles += r.b_nnz;
      }
    }
    s.dram.spill_bits += r.spilled_entries * entry_bits;
    resident_a = std::max(resident_a, r.a_group_max);
    if (sdmm) {
      resident_b = std::max(resident_b, k_width * std::min(g.tile_n, col_width));
    } else {
      resident_b = std::max(resident_b, r.b_group_max);
    }
    s.util_psum = std::max(s.util_psum, static_cast<double>(r.peak_occupancy) / cfg.psum_capacity);
    s.passes.push_back(t);
  };

  // Whole-strip residency for the reused operand.
  auto strip_peak = [&](bool a_side, Index outer) {
    std::fill(strip.begin(), strip.end(), 0);
    for (Index bk = 0; bk < g.blocks_k; ++bk) {
      const PassRecord& r = a_side ? slot(outer, 0, bk) : slot(0, outer, bk);
      const auto& per_group = a_side ? r.a_group_nnz : r.b_group_nnz;
      for (std::size_t i = 0; i < per_group.size(); ++i) strip[i] += per_group[i];
    }
    return *std::max_element(strip.begin(), strip.end());
  };

  if (plan.strategy == ReuseStrategy::kRbf) {
    for (Index bc = 0; bc < g.blocks_n; ++bc)
      for (Index br = 0; br < g.blocks_m; ++br)
        for (Index bk = 0; bk < g.blocks_k; ++bk) visit(br, bc, bk);
    if (!sdmm) {
      for (Index bc = 0; bc < g.blocks_n; ++bc) resident_b = std::max(resident_b, strip_peak(false, bc));
    } else {
      resident_b = std::max(resident_b, g.k * std::min(g.tile_n, g.n));
    }
  } else {
    for (Index br = 0; br < g.blocks_m; ++br)
      for (Index bc = 0; bc < g.blocks_n; ++bc)
        for (Index bk = 0; bk < g.blocks_k; ++bk) visit(br, bc, bk);
    if (plan.strategy == ReuseStrategy::kRaf) {
      for (Index br = 0; br < g.blocks_m; ++br) resident_a = std::max(resident_a, strip_peak(true, br));
    }
  }

  for (const auto& t : s.passes) {
    s.encode_cycles += t.encode_cycles;
    s.compute_cycles += t.compute_cycles;
    s.addrmap_cycles += t.addrmap_cycles;
    s.total_cycles += std::max({t.encode_cycles, t.compute_cycles, t.addrmap_cycles});
  }
  if (!s.passes.empty()) s.total_cycles += s.passes.front().encode_cycles + s.passes.back().addrmap_cycles;

  if (sdmm) {
    s.dram.c_write_bits = static_cast<std::uint64_t>(g.m) * g.n * hw.bits_value;
    s.util_psum = static_cast<double>(std::min(g.tile_m, g.m) * std::min(g.tile_n, g.n)) /
                  static_cast<double>(effective_psum_capacity(hw, mode));
  } else {
    const auto& c = std::get<CscMatrix>(run.output);
    s.dram.c_write_bits = c.value.size() * entry_bits + static_cast<std::uint64_t>(c.n_cols) * hw.bits_len;
  }
  s.util_a = clamp01(static_cast<double>(resident_a) / hw.buffer_a);
  s.util_b = clamp01(static_cast<double>(resident_b) / hw.buffer_b);
  s.util_psum = clamp01(s.util_psum);

  return {std::move(s), std::move(run.output)};
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {"workload", "mode",         "strategy", "T_M",     "T_K",
                                                "T_N",      "total_cycles", "bytes_A",  "bytes_B", "bytes_spill",
                                                "bytes_C",  "util_A",       "util_B",   "util_psum", "macs"};
  return cols;
}

void write_csv_header(std::ostream& out) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

void write_csv_row(std::ostream& out, const SimStats& s) {
  out << s.workload << ',' << to_string(s.mode) << ',' << to_string(s.plan.strategy) << ',' << s.plan.blocks_m << ','
      << s.plan.blocks_k << ',' << s.plan.blocks_n << ',' << s.total_cycles << ',' << format_real(s.dram.bytes_a())
      << ',' << format_real(s.dram.bytes_b()) << ',' << format_real(s.dram.bytes_spill()) << ','
      << format_real(s.dram.bytes_c()) << ',' << format_real(s.util_a) << ',' << format_real(s.util_b) << ','
      << format_real(s.util_psum) << ',' << s.achieved_macs << '\n';
}

void write_text(std::ostream& out, const SimStats& s) {
  out << "workload=" << s.workload << '\n'
      << "mode=" << to_string(s.mode) << '\n'
      << "strategy=" << to_string(s.plan.strategy) << '\n'
      << "T_M=" << s.plan.blocks_m << '\n'
      << "T_K=" << s.plan.blocks_k << '\n'
      << "T_N=" << s.plan.blocks_n << '\n'
      << "M_t=" << s.plan.tile_m << '\n'
      << "K_t=" << s.plan.tile_k << '\n'
      << "N_t=" << s.plan.tile_n << '\n'
      << "total_cycles=" << s.total_cycles << '\n'
      << "encode_cycles=" << s.encode_cycles << '\n'
      << "compute_cycles=" << s.compute_cycles << '\n'
      << "addrmap_cycles=" << s.addrmap_cycles << '\n'
      << "bytes_A=" << format_real(s.dram.bytes_a()) << '\n'
      << "bytes_B=" << format_real(s.dram.bytes_b()) << '\n'
      << "bytes_spill=" << format_real(s.dram.bytes_spill()) << '\n'
      << "bytes_C=" << format_real(s.dram.bytes_c()) << '\n'
      << "predicted_dram_bytes=" << format_real(s.predicted_dram_bits / 8.0) << '\n'
      << "util_A=" << format_real(s.util_a) << '\n'
      << "util_B=" << format_real(s.util_b) << '\n'
      << "util_psum=" << format_real(s.util_psum) << '\n'
      << "macs=" << s.achieved_macs << '\n'
      << "spill_events=" << s.spill_events << '\n'
      << "peak_macs_per_cycle=" << s.peak_macs_per_cycle << '\n'
      << "peak_gmacs_per_second=" << format_real(s.peak_gmacs_per_second()) << '\n';
}

}  // namespace iops
