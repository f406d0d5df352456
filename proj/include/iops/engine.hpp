#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "iops/encoding.hpp"
#include "iops/matrix.hpp"
#include "iops/planner.hpp"

namespace iops {

enum class OverflowPolicy { kFail, kSpill };

struct EngineConfig {
  /// Address slots per row segment of the psum directory; 0 selects N_t.
  Index segment_slots = 0;
  /// Maximum psums held by one PE before it overflows.
  Index psum_capacity = 256;
  OverflowPolicy overflow_policy = OverflowPolicy::kSpill;
};

/// Engine settings matching a hardware configuration.
EngineConfig engine_config_for(const HardwareConfig& hw);

/// Irregular psum storage of one PE. Values and column indices are appended
/// in generation order; each local row owns a fixed segment of the address
/// directory listing where its psums live.
class PsumStore {
 public:
  PsumStore(Index rows, Index segment_slots, Index capacity);

  bool can_append(Index row) const;
  /// Throws OverflowError when the row segment or the store is full.
  void append(Index row, Index col, double value);
  void clear();

  Index rows() const { return row_len_.size(); }
  Index segment_slots() const { return segment_slots_; }
  Index capacity() const { return capacity_; }
  /// Next free address; equals the number of stored psums.
  Index size() const { return value_.size(); }
  bool empty() const { return value_.empty(); }

  std::span<const double> values() const { return value_; }
  std::span<const Index> col_indices() const { return col_idx_; }
  std::span<const Index> row_lengths() const { return row_len_; }
  /// Valid prefix of the row's directory segment.
  std::span<const Index> row_addresses(Index row) const;

  /// Throws MalformedBlockError if the directory is inconsistent.
  void check_invariants() const;

 private:
  Index segment_slots_;
  Index capacity_;
  std::vector<double> value_;
  std::vector<Index> col_idx_;
  std::vector<Index> vc_addr_;  // rows x segment_slots
  std::vector<Index> row_len_;
};

/// Address-mapped output of one PE: block-local (row, col) triplets in
/// strictly increasing order.
struct OutputBlock {
  std::vector<Triplet> entries;

  friend bool operator==(const OutputBlock&, const OutputBlock&) = default;
};

struct PeState {
  PsumStore store;
  std::vector<OutputBlock> spilled;
  /// Directory row lengths captured at each spill, for cycle accounting.
  std::vector<std::vector<Index>> spilled_row_len;
  Index products = 0;
  Index spill_events = 0;
  Index spilled_entries = 0;
  Index peak_occupancy = 0;
};

/// groups_a x groups_b PEs for one (A block, B block) pair.
struct PsumGrid {
  Index groups_a = 0;
  Index groups_b = 0;
  Index block_row = 0;
  Index block_k = 0;
  Index block_col = 0;
  std::vector<PeState> pes;

  PeState& at(Index g, Index h) { return pes[g * groups_b + h]; }
  const PeState& at(Index g, Index h) const { return pes[g * groups_b + h]; }
  Index total_products() const;
  Index spill_events() const;
};

/// Merge-join over the shared column/row index streams; every matched inner
/// index feeds each PE whose A and B groups are both present.
PsumGrid compute_psums(const RpCscBlock& a_blk, const CpCsrBlock& b_blk, const EngineConfig& cfg);

/// Psum addresses of one row in stable ascending column order.
std::vector<Index> sorted_row_addresses(const PsumStore& ps, Index row);

/// Sorts each row's psums by column through the address directory and sums
/// runs of equal columns.
OutputBlock address_map(const PsumStore& ps);

/// k-way merge by (row, col); coincident coordinates are summed in input order.
OutputBlock merge_output_blocks(std::span<const OutputBlock> parts);

/// Spilled partial outputs merged with the address-mapped final store.
OutputBlock drain(const PeState& pe);

struct PlacedOutput {
  Index block_row = 0;
  Index group_a = 0;
  Index block_col = 0;
  Index group_b = 0;
  OutputBlock block;
};

/// Offsets block-local coordinates to global ones and builds m x n CSC.
CscMatrix assemble_output(std::span<const PlacedOutput> parts, const TilingGeometry& g);

/// M_t x N_t dense accumulator of one PE in SDMM mode.
struct DensePsumBank {
  Index rows = 0;
  Index cols = 0;
  std::vector<double> data;

  DensePsumBank() = default;
  DensePsumBank(Index r, Index c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(Index r, Index c) { return data[r * cols + c]; }
  double at(Index r, Index c) const { return data[r * cols + c]; }
};

struct SdmmGrid {
  Index groups_a = 0;
  Index groups_b = 0;
  Index block_row = 0;
  Index block_k = 0;
  Index block_col = 0;
  Index products = 0;
  std::vector<DensePsumBank> banks;

  DensePsumBank& at(Index g, Index h) { return banks[g * groups_b + h]; }
  const DensePsumBank& at(Index g, Index h) const { return banks[g * groups_b + h]; }
};

/// Dense B rows gathered for the non-empty columns of one A block, keyed by
/// block-local inner index. Each row spans the block's column range.
struct GatheredRows {
  Index block_k = 0;
  Index block_col = 0;
  Index width = 0;
  std::map<Index, std::vector<double>> rows;
};

/// Throws GatherError if `b` lacks a row the block needs.
GatheredRows gather_dense_rows(const DenseMatrix& b, const RpCscBlock& a_blk, const TilingGeometry& g,
                               Index block_col);

/// Column-wise SDMM: each A entry scales its dense B row into the banks of
/// every column group.
SdmmGrid sdmm_compute(const RpCscBlock& a_blk, const GatheredRows& rows, const TilingGeometry& g);

using RightOperand = std::variant<CsrMatrix, DenseMatrix>;
using SpmmOutput = std::variant<CscMatrix, DenseMatrix>;

/// Everything known about one (block_row, block_col, block_k) step.
struct TilePass {
  Index block_row = 0;
  Index block_col = 0;
  Index block_k = 0;
  const RpCscBlock* a = nullptr;
  const CpCsrBlock* b = nullptr;    // SSMM only
  const PsumGrid* psums = nullptr;  // SSMM only
  const SdmmGrid* banks = nullptr;  // SDMM only
};

using TileObserver = std::function<void(const TilePass&)>;

struct SpmmTotals {
  Index products = 0;
  Index spill_events = 0;
  Index spilled_entries = 0;
};

struct SpmmResult {
  SpmmOutput output;
  SpmmTotals totals;
};

/// Runs encode, psum computation and accumulation over every tile. SSMM
/// returns CSC, SDMM returns dense. A dense B in SSMM mode is sparse-encoded
/// (zeros dropped); a sparse B in SDMM mode is densified.
SpmmResult spmm(const CscMatrix& a, const RightOperand& b, ComputeMode mode, const TilingGeometry& g,
                const EngineConfig& cfg, const TileObserver& observer = {});

void dump(std::ostream& out, const PsumStore& ps);

}  // namespace iops
