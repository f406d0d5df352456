#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "iops/cost_model.hpp"
#include "iops/engine.hpp"
#include "iops/error.hpp"
#include "iops/matrix.hpp"
#include "iops/planner.hpp"

namespace iops {

/// Error tagged with the pipeline stage that raised it (load, plan,
/// simulate, oracle, write, ...).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Runs `fn`, rethrowing any library error as a StageError for `stage`.
template <class Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

enum class ModeChoice { kSsmm, kSdmm, kAuto };
ModeChoice parse_mode_choice(const std::string& s);

struct RunConfig {
  HardwareConfig hw;
  EngineConfig engine = engine_config_for(HardwareConfig{});
  /// Auto mode switches to SDMM above this B density.
  double sdmm_threshold = 0.25;
  std::uint64_t seed = 1;
};

/// Flat key=value text; '#' starts a comment. Keys: buffer_a, buffer_b,
/// buffer_psum, groups_a, groups_b, reserve_ratio, bits_value, bits_index,
/// bits_len, freq_hz, segment_slots, psum_capacity, overflow_policy,
/// sdmm_threshold, seed. psum_capacity follows buffer_psum unless given.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
std::string to_text(const RunConfig& cfg);

ComputeMode resolve_mode(ModeChoice choice, double b_density, double threshold);

// ---------------------------------------------------------------------------
// Synthetic operands

/// round(rows*cols*density) distinct uniform coordinates. Values are drawn
/// uniformly from [lo, hi); `integers` rounds them to whole numbers and
/// replaces zeros by 1.
TripletMatrix random_sparse(Index rows, Index cols, double density, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0, bool integers = false);
DenseMatrix random_dense(Index rows, Index cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

struct DatasetPreset {
  std::string name;
  Index vertices = 0;
  Index features = 0;
  double density_a = 0.0;
  double density_x = 0.0;
  Index hidden = 0;   // columns of W1; 0 when the dataset has no GCN weights
  Index classes = 0;  // columns of W2
};

const std::vector<DatasetPreset>& dataset_presets();
/// Throws Error for an unknown name.
const DatasetPreset& find_preset(const std::string& name);

// ---------------------------------------------------------------------------
// Commands

struct SpmmRun {
  ComputeMode mode = ComputeMode::kSsmm;
  double b_density = 0.0;
  double threshold = 0.25;
  bool auto_mode = false;
  SimStats stats;
  SpmmOutput output;
};

/// Plans and simulates A*B. Stage errors: plan, simulate.
SpmmRun run_spmm(const CscMatrix& a, const CscMatrix& b, ModeChoice choice, const RunConfig& cfg,
                 const std::string& workload = "spmm");

/// Plan for the exact operands.
PartitionPlan plan_for(const CscMatrix& a, const CscMatrix& b, ComputeMode mode, const HardwareConfig& hw);

struct GcnWorkload {
  std::string name;
  CscMatrix a;  // adjacency, n x n
  CscMatrix x;  // features, n x f
  DenseMatrix w1;
  DenseMatrix w2;
};

/// Synthetic stand-in for a preset. Values are positive.
GcnWorkload make_gcn_workload(const DatasetPreset& preset, std::uint64_t seed);

struct GcnReport {
  std::vector<SimStats> steps;
  /// Dataflow counters of each step, its dense operand sparse-encoded.
  std::vector<BaselineCounters> baselines;
  DenseMatrix output;
  bool oracle_checked = false;
  double max_relative_error = 0.0;
  std::vector<std::string> notes;
};

/// A*((A*(X*W1))*W2), every step planned independently and run as SDMM.
/// The dense oracle runs when the chain fits `oracle_limit` dense cells.
GcnReport run_gcn(const GcnWorkload& w, const RunConfig& cfg, Index oracle_limit = 50'000'000);

struct SweepAxes {
  std::vector<Index> grids;   // square grid sides
  std::vector<double> scales;  // input buffer scale factors
};

struct SweepCell {
  std::string workload;
  Index grid = 0;
  double buffer_scale = 1.0;
  bool ok = false;
  std::string error;
  SimStats stats;
};

struct SweepWorkload {
  std::string name;
  CscMatrix a;
  CscMatrix b;
  ModeChoice mode = ModeChoice::kAuto;
};

/// One cell per workload x grid x scale, in that nesting order. A failing
/// cell is recorded and the sweep continues.
std::vector<SweepCell> run_sweep(const std::vector<SweepWorkload>& workloads, const SweepAxes& axes,
                                 const RunConfig& base);
void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells);

}  // namespace iops
