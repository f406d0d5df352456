#include "iops/planner.hpp"

#include <algorithm>
#include <istream>
#include <sstream>
#include <tuple>

#include "iops/error.hpp"
#include "iops/format.hpp"

namespace iops {

namespace {

Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

// Distinct values of ceil(extent / t) for t = 1..extent, descending.
std::vector<Index> tile_candidates(Index extent) {
  std::vector<Index> out;
  for (Index t = 1; t <= extent; ++t) {
    const Index v = ceil_div(extent, t);
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  return out;
}

int strategy_rank(ReuseStrategy s) {
  switch (s) {
    case ReuseStrategy::kRaf:
      return 0;
    case ReuseStrategy::kRbf:
      return 1;
    case ReuseStrategy::kRabe:
      return 2;
  }
  return 3;
}

// Total order used to pick among equal-cost plans.
bool better(const PartitionPlan& x, const PartitionPlan& y) {
  const auto key = [](const PartitionPlan& p) {
    return std::make_tuple(p.predicted_dram_bits, p.total_blocks(), strategy_rank(p.strategy),
                           -static_cast<long long>(p.tile_k), p.tile_m, p.tile_n);
  };
  return key(x) < key(y);
}

}  // namespace

const char* to_string(ComputeMode m) { return m == ComputeMode::kSsmm ? "SSMM" : "SDMM"; }

const char* to_string(ReuseStrategy s) {
  switch (s) {
    case ReuseStrategy::kRaf:
      return "RAF";
    case ReuseStrategy::kRbf:
      return "RBF";
    case ReuseStrategy::kRabe:
      return "RABE";
  }
  return "?";
}

ReuseStrategy parse_strategy(const std::string& s) {
  if (s == "RAF") return ReuseStrategy::kRaf;
  if (s == "RBF") return ReuseStrategy::kRbf;
  if (s == "RABE") return ReuseStrategy::kRabe;
  throw Error("unknown reuse strategy '" + s + "'");
}

ComputeMode parse_mode(const std::string& s) {
  if (s == "SSMM" || s == "ssmm") return ComputeMode::kSsmm;
  if (s == "SDMM" || s == "sdmm") return ComputeMode::kSdmm;
  throw Error("unknown compute mode '" + s + "'");
}

void HardwareConfig::validate() const {
  if (buffer_a == 0 || buffer_b == 0 || buffer_psum == 0) {
    throw DegenerateInputError("buffer capacities must be at least 1");
  }
  if (groups_a == 0 || groups_b == 0) throw DegenerateInputError("PE grid dimensions must be at least 1");
  if (groups_a > 64 || groups_b > 64) throw DegenerateInputError("PE grid dimensions are limited to 64");
  if (!(reserve_ratio > 0.0 && reserve_ratio <= 1.0)) {
    throw DegenerateInputError("reserve ratio must lie in (0, 1]");
  }
  if (!(freq_hz > 0.0)) throw DegenerateInputError("clock frequency must be positive");
}

Index effective_psum_capacity(const HardwareConfig& hw, ComputeMode mode) {
  return mode == ComputeMode::kSdmm ? 2 * hw.buffer_psum : hw.buffer_psum;
}

double storage_size(Index rows, Index cols, double density, const HardwareConfig& hw, Orientation orient) {
  const double entries = static_cast<double>(rows) * static_cast<double>(cols) * density;
  const Index major = orient == Orientation::kColumnMajor ? cols : rows;
  return entries * (hw.bits_value + hw.bits_index) + static_cast<double>(major) * hw.bits_len;
}

double dense_storage_size(Index rows, Index cols, const HardwareConfig& hw) {
  return static_cast<double>(rows) * static_cast<double>(cols) * hw.bits_value;
}

WorkloadSpec make_workload(Index m, Index k, Index n, double density_a, double density_b, const HardwareConfig& hw,
                           ComputeMode mode) {
  if (m == 0 || k == 0 || n == 0) throw DegenerateInputError("workload dimensions must be positive");
  if (density_a < 0.0 || density_a > 1.0 || density_b < 0.0 || density_b > 1.0) {
    throw DegenerateInputError("densities must lie in [0, 1]");
  }
  WorkloadSpec wl{m, k, n, density_a, density_b, 0.0, 0.0};
  wl.storage_a_bits = storage_size(m, k, density_a, hw, Orientation::kColumnMajor);
  if (mode == ComputeMode::kSdmm) {
    wl.density_b = 1.0;
    wl.storage_b_bits = dense_storage_size(k, n, hw);
  } else {
    wl.storage_b_bits = storage_size(k, n, density_b, hw, Orientation::kRowMajor);
  }
  return wl;
}

WorkloadSpec make_workload_exact(Index m, Index k, Index n, Index nnz_a, Index nnz_b, const HardwareConfig& hw,
                                 ComputeMode mode) {
  if (m == 0 || k == 0 || n == 0) throw DegenerateInputError("workload dimensions must be positive");
  WorkloadSpec wl{m, k, n, density(nnz_a, m, k), density(nnz_b, k, n), 0.0, 0.0};
  const double per_entry = hw.bits_value + hw.bits_index;
  wl.storage_a_bits = static_cast<double>(nnz_a) * per_entry + static_cast<double>(k) * hw.bits_len;
  if (mode == ComputeMode::kSdmm) {
    wl.density_b = 1.0;
    wl.storage_b_bits = dense_storage_size(k, n, hw);
  } else {
    wl.storage_b_bits = static_cast<double>(nnz_b) * per_entry + static_cast<double>(k) * hw.bits_len;
  }
  return wl;
}

PartitionPlan plan_from_tiles(Index tile_m, Index tile_k, Index tile_n, const WorkloadSpec& wl,
                              const HardwareConfig& hw) {
  if (tile_m == 0 || tile_k == 0 || tile_n == 0) throw DegenerateInputError("tile sizes must be positive");
  PartitionPlan p;
  p.tile_m = tile_m;
  p.tile_k = tile_k;
  p.tile_n = tile_n;
  p.blocks_m = ceil_div(wl.m, hw.groups_a * tile_m);
  p.blocks_k = ceil_div(wl.k, tile_k);
  p.blocks_n = ceil_div(wl.n, hw.groups_b * tile_n);
  return p;
}

const char* describe(Constraint c) {
  switch (c) {
    case Constraint::kBufferA:
      return "buffer A capacity (M_t*K_t*D_A < C_A*R_x)";
    case Constraint::kBufferB:
      return "buffer B capacity (K_t*N_t*D_B < C_B*R_x)";
    case Constraint::kBufferPsum:
      return "psum buffer capacity";
  }
  return "?";
}

std::optional<Constraint> violated_constraint(Index tile_m, Index tile_k, Index tile_n, const HardwareConfig& hw,
                                              const WorkloadSpec& wl, ComputeMode mode) {
  const double mt = static_cast<double>(tile_m), kt = static_cast<double>(tile_k), nt = static_cast<double>(tile_n);
  const double rx = hw.reserve_ratio;
  if (!(mt * kt * wl.density_a < static_cast<double>(hw.buffer_a) * rx)) return Constraint::kBufferA;
  if (!(kt * nt * wl.density_b < static_cast<double>(hw.buffer_b) * rx)) return Constraint::kBufferB;
  const double psum_cap = static_cast<double>(effective_psum_capacity(hw, mode)) * rx;
  const double psum_need =
      mode == ComputeMode::kSdmm ? mt * nt : mt * wl.density_a * nt * wl.density_b * kt;
  if (!(psum_need < psum_cap)) return Constraint::kBufferPsum;
  return std::nullopt;
}

bool feasible(const PartitionPlan& plan, const HardwareConfig& hw, const WorkloadSpec& wl, ComputeMode mode) {
  return !violated_constraint(plan.tile_m, plan.tile_k, plan.tile_n, hw, wl, mode).has_value();
}

std::vector<StrategyCost> dram_access(const PartitionPlan& plan, const HardwareConfig& hw, const WorkloadSpec& wl) {
  const double rx = hw.reserve_ratio;
  const double k = static_cast<double>(wl.k);
  const double tm = static_cast<double>(plan.blocks_m), tn = static_cast<double>(plan.blocks_n);
  std::vector<StrategyCost> out;
  if (static_cast<double>(plan.tile_m) * k * wl.density_a < static_cast<double>(hw.buffer_a) * rx) {
    out.push_back({ReuseStrategy::kRaf, wl.storage_b_bits * tm + wl.storage_a_bits});
  }
  if (static_cast<double>(plan.tile_n) * k * wl.density_b < static_cast<double>(hw.buffer_b) * rx) {
    out.push_back({ReuseStrategy::kRbf, wl.storage_a_bits * tn + wl.storage_b_bits});
  }
  out.push_back({ReuseStrategy::kRabe, wl.storage_a_bits * tn + wl.storage_b_bits * tm});
  return out;
}

PartitionPlan plan_partition(const HardwareConfig& hw, const WorkloadSpec& wl, ComputeMode mode) {
  hw.validate();
  if (wl.m == 0 || wl.k == 0 || wl.n == 0) throw DegenerateInputError("workload dimensions must be positive");

  if (auto v = violated_constraint(1, 1, 1, hw, wl, mode)) {
    throw InfeasibleError(std::string("no feasible partition: unit tiles violate ") + describe(*v));
  }

  const auto ms = tile_candidates(ceil_div(wl.m, hw.groups_a));
  const auto ks = tile_candidates(wl.k);
  const auto ns = tile_candidates(ceil_div(wl.n, hw.groups_b));

  std::optional<PartitionPlan> best;
  for (Index mt : ms) {
    for (Index nt : ns) {
      for (Index kt : ks) {
        if (violated_constraint(mt, kt, nt, hw, wl, mode)) continue;
        PartitionPlan p = plan_from_tiles(mt, kt, nt, wl, hw);
        const auto costs = dram_access(p, hw, wl);
        const auto cheapest = std::min_element(costs.begin(), costs.end(), [](const auto& x, const auto& y) {
          return x.dram_bits < y.dram_bits;
        });
        p.strategy = cheapest->strategy;
        p.predicted_dram_bits = cheapest->dram_bits;
        if (!best || better(p, *best)) best = p;
      }
    }
  }
  // Unit tiles are in the lattice and were checked above.
  return *best;
}

std::string to_text(const PartitionPlan& plan) {
  std::ostringstream out;
  out << "T_M=" << plan.blocks_m << '\n'
      << "T_K=" << plan.blocks_k << '\n'
      << "T_N=" << plan.blocks_n << '\n'
      << "M_t=" << plan.tile_m << '\n'
      << "K_t=" << plan.tile_k << '\n'
      << "N_t=" << plan.tile_n << '\n'
      << "strategy=" << to_string(plan.strategy) << '\n'
      << "predicted_dram_bits=" << format_real(plan.predicted_dram_bits) << '\n';
  return out.str();
}

PartitionPlan parse_plan(std::istream& in) {
  PartitionPlan p;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected key=value");
    const std::string key(trim(t.substr(0, eq)));
    const auto val = trim(t.substr(eq + 1));
    unsigned long long n = 0;
    auto index_field = [&](Index& field) {
      if (!parse_index(val, n) || n == 0) throw ParseError(lineno, "bad value for " + key);
      field = static_cast<Index>(n);
    };
    if (key == "T_M") {
      index_field(p.blocks_m);
    } else if (key == "T_K") {
      index_field(p.blocks_k);
    } else if (key == "T_N") {
      index_field(p.blocks_n);
    } else if (key == "M_t") {
      index_field(p.tile_m);
    } else if (key == "K_t") {
      index_field(p.tile_k);
    } else if (key == "N_t") {
      index_field(p.tile_n);
    } else if (key == "strategy") {
      try {
        p.strategy = parse_strategy(std::string(val));
      } catch (const Error&) {
        throw ParseError(lineno, "unknown strategy");
      }
    } else if (key == "predicted_dram_bits") {
      if (!parse_real(val, p.predicted_dram_bits)) throw ParseError(lineno, "bad predicted_dram_bits");
    } else {
      throw ParseError(lineno, "unknown plan key '" + key + "'");
    }
  }
  return p;
}

}  // namespace iops
