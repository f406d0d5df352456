#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "iops/matrix.hpp"

namespace iops {

enum class ComputeMode { kSsmm, kSdmm };

/// DRAM loop orders. RAF keeps an A row strip resident and streams B per
/// strip, RBF keeps a B column strip resident, RABE streams both.
enum class ReuseStrategy { kRaf, kRbf, kRabe };

const char* to_string(ComputeMode m);
const char* to_string(ReuseStrategy s);
ReuseStrategy parse_strategy(const std::string& s);
ComputeMode parse_mode(const std::string& s);

/// Buffer capacities are element slots of the value stream. Bit widths are
/// those of the original CSC/CSR streams and drive DRAM accounting.
struct HardwareConfig {
  Index buffer_a = 2048;
  Index buffer_b = 2048;
  Index buffer_psum = 256;  // per PE
  Index groups_a = 8;       // PE grid rows
  Index groups_b = 8;       // PE grid columns
  double reserve_ratio = 0.75;
  unsigned bits_value = 64;
  unsigned bits_index = 32;
  unsigned bits_len = 16;
  double freq_hz = 800e6;

  /// Throws DegenerateInputError on zero capacities or grid dims, or R_x outside (0, 1].
  void validate() const;
};

/// Psum capacity seen by the planner: SDMM merges the idle address-mapping
/// buffers into the value buffer, doubling it.
Index effective_psum_capacity(const HardwareConfig& hw, ComputeMode mode);

struct WorkloadSpec {
  Index m = 0, k = 0, n = 0;
  double density_a = 0.0;
  double density_b = 0.0;
  double storage_a_bits = 0.0;
  double storage_b_bits = 0.0;
};

enum class Orientation { kColumnMajor, kRowMajor };

/// rows*cols*density*(value+index bits) plus one length entry per major line.
double storage_size(Index rows, Index cols, double density, const HardwareConfig& hw,
                    Orientation orient = Orientation::kColumnMajor);
double dense_storage_size(Index rows, Index cols, const HardwareConfig& hw);

/// Density-based workload. In SDMM mode B is stored dense (density 1).
WorkloadSpec make_workload(Index m, Index k, Index n, double density_a, double density_b, const HardwareConfig& hw,
                           ComputeMode mode = ComputeMode::kSsmm);
/// Workload with storage sizes from exact nonzero counts.
WorkloadSpec make_workload_exact(Index m, Index k, Index n, Index nnz_a, Index nnz_b, const HardwareConfig& hw,
                                 ComputeMode mode = ComputeMode::kSsmm);

struct PartitionPlan {
  Index blocks_m = 1, blocks_k = 1, blocks_n = 1;  // T_M, T_K, T_N
  Index tile_m = 1, tile_k = 1, tile_n = 1;        // M_t, K_t, N_t
  ReuseStrategy strategy = ReuseStrategy::kRabe;
  double predicted_dram_bits = 0.0;

  Index total_blocks() const { return blocks_m * blocks_k * blocks_n; }
  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

/// Plan with block counts derived from tile sizes by ceiling division.
PartitionPlan plan_from_tiles(Index tile_m, Index tile_k, Index tile_n, const WorkloadSpec& wl,
                              const HardwareConfig& hw);

enum class Constraint { kBufferA, kBufferB, kBufferPsum };
const char* describe(Constraint c);

/// First violated capacity constraint, if any. Inequalities are strict.
/// In SDMM mode the psum constraint applies to the dense M_t x N_t bank.
std::optional<Constraint> violated_constraint(Index tile_m, Index tile_k, Index tile_n, const HardwareConfig& hw,
                                              const WorkloadSpec& wl, ComputeMode mode = ComputeMode::kSsmm);
bool feasible(const PartitionPlan& plan, const HardwareConfig& hw, const WorkloadSpec& wl,
              ComputeMode mode = ComputeMode::kSsmm);

struct StrategyCost {
  ReuseStrategy strategy;
  double dram_bits;
};

/// Candidate strategies in RAF, RBF, RABE order; RAF/RBF only when their
/// whole-strip residency condition holds.
std::vector<StrategyCost> dram_access(const PartitionPlan& plan, const HardwareConfig& hw, const WorkloadSpec& wl);

/// Exhaustive search over distinct tile sizes. Throws InfeasibleError naming
/// the violated constraint when even unit tiles do not fit.
PartitionPlan plan_partition(const HardwareConfig& hw, const WorkloadSpec& wl, ComputeMode mode = ComputeMode::kSsmm);

/// key=value record, one field per line.
std::string to_text(const PartitionPlan& plan);
PartitionPlan parse_plan(std::istream& in);

}  // namespace iops
