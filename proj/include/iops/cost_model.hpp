#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "iops/encoding.hpp"
#include "iops/engine.hpp"
#include "iops/matrix.hpp"
#include "iops/planner.hpp"

namespace iops {

/// Stage cycles of one (block_row, block_col, block_k) pass.
struct StageTrace {
  Index block_row = 0;
  Index block_col = 0;
  Index block_k = 0;
  std::uint64_t encode_cycles = 0;
  std::uint64_t compute_cycles = 0;
  std::uint64_t addrmap_cycles = 0;
  Index spill_events = 0;
};

/// DRAM traffic in bits. Byte accessors divide by 8.
struct DramCounter {
  std::uint64_t a_read_bits = 0;
  std::uint64_t b_read_bits = 0;
  std::uint64_t spill_bits = 0;
  std::uint64_t c_write_bits = 0;

  std::uint64_t input_read_bits() const { return a_read_bits + b_read_bits; }
  double bytes_a() const { return a_read_bits / 8.0; }
  double bytes_b() const { return b_read_bits / 8.0; }
  double bytes_spill() const { return spill_bits / 8.0; }
  double bytes_c() const { return c_write_bits / 8.0; }
};

struct SimStats {
  std::string workload;
  ComputeMode mode = ComputeMode::kSsmm;
  PartitionPlan plan;
  std::uint64_t total_cycles = 0;
  std::uint64_t encode_cycles = 0;
  std::uint64_t compute_cycles = 0;
  std::uint64_t addrmap_cycles = 0;
  DramCounter dram;
  double predicted_dram_bits = 0.0;
  double util_a = 0.0;
  double util_b = 0.0;
  double util_psum = 0.0;
  Index achieved_macs = 0;
  Index spill_events = 0;
  Index peak_macs_per_cycle = 0;
  double freq_hz = 0.0;
  std::vector<StageTrace> passes;  // in the strategy's loop order

  double peak_gmacs_per_second() const { return peak_macs_per_cycle * freq_hz / 1e9; }
};

/// Peak MACs per cycle of the PE grid.
Index peak_macs_per_cycle(const HardwareConfig& hw);

/// Lockstep merge-join: a matched inner index costs the busiest PE's
/// col_len*row_len, every unmatched index one cycle.
std::uint64_t compute_cycles(const RpCscBlock& a_blk, const CpCsrBlock& b_blk);
/// Each A column scales a dense row segment of `width` columns per group.
std::uint64_t sdmm_compute_cycles(const RpCscBlock& a_blk, Index tile_n, Index width);
/// Max over PEs of the sum over non-empty rows of 2*len+1, spilled flushes
/// included.
std::uint64_t addrmap_cycles(const PsumGrid& grid);

/// DrA formula value of one strategy, whether or not its residency
/// condition holds.
double strategy_dram_bits(ReuseStrategy s, const PartitionPlan& plan, const WorkloadSpec& wl);

struct BaselineCounters {
  std::uint64_t inner_macs = 0;
  std::uint64_t inner_zero_macs = 0;
  std::uint64_t outer_input_loads = 0;
  std::uint64_t iohp_macs = 0;
  std::uint64_t iohp_input_loads = 0;
};

/// Dataflow counters for the same product under inner, outer and hybrid
/// execution on a groups_a x groups_b grid.
BaselineCounters baseline_counters(const CscMatrix& a, const CsrMatrix& b, Index groups_a, Index groups_b);

struct SimulationResult {
  SimStats stats;
  SpmmOutput output;
};

/// Runs the engine under `plan` and accounts cycles, DRAM traffic and
/// buffer occupancy. The workload used for the predicted cost is built from
/// exact nonzero counts of the operands.
SimulationResult simulate(const CscMatrix& a, const RightOperand& b, const PartitionPlan& plan,
                          const HardwareConfig& hw, ComputeMode mode, const EngineConfig& cfg,
                          const std::string& workload = "spmm");

const std::vector<std::string>& report_columns();
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const SimStats& s);
/// key=value lines, one field per line.
void write_text(std::ostream& out, const SimStats& s);

}  // namespace iops
