#include "iops/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "iops/format.hpp"

namespace iops {

ModeChoice parse_mode_choice(const std::string& s) {
  if (s == "ssmm") return ModeChoice::kSsmm;
  if (s == "sdmm") return ModeChoice::kSdmm;
  if (s == "auto") return ModeChoice::kAuto;
  throw Error("unknown mode '" + s + "' (expected ssmm, sdmm or auto)");
}

ComputeMode resolve_mode(ModeChoice choice, double b_density, double threshold) {
  switch (choice) {
    case ModeChoice::kSsmm:
      return ComputeMode::kSsmm;
    case ModeChoice::kSdmm:
      return ComputeMode::kSdmm;
    case ModeChoice::kAuto:
      break;
  }
  return b_density > threshold ? ComputeMode::kSdmm : ComputeMode::kSsmm;
}

// ---------------------------------------------------------------------------
// Config

namespace {

Index need_index(std::string_view v, std::size_t line, const std::string& key) {
  unsigned long long x = 0;
  if (!parse_index(v, x)) throw ParseError(line, key + " expects a non-negative integer, got '" + std::string(v) + "'");
  return static_cast<Index>(x);
}

double need_real(std::string_view v, std::size_t line, const std::string& key) {
  double x = 0.0;
  if (!parse_real(v, x)) throw ParseError(line, key + " expects a number, got '" + std::string(v) + "'");
  return x;
}

unsigned need_bits(std::string_view v, std::size_t line, const std::string& key) {
  const Index x = need_index(v, line, key);
  if (x == 0 || x > 1024) throw ParseError(line, key + " must be between 1 and 1024");
  return static_cast<unsigned>(x);
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  bool psum_given = false;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "expected key=value");
    const std::string key(trim(text.substr(0, eq)));
    const std::string_view val = trim(text.substr(eq + 1));
    auto& hw = cfg.hw;
    if (key == "buffer_a") hw.buffer_a = need_index(val, line, key);
    else if (key == "buffer_b") hw.buffer_b = need_index(val, line, key);
    else if (key == "buffer_psum") hw.buffer_psum = need_index(val, line, key);
    else if (key == "groups_a") hw.groups_a = need_index(val, line, key);
    else if (key == "groups_b") hw.groups_b = need_index(val, line, key);
    else if (key == "reserve_ratio") hw.reserve_ratio = need_real(val, line, key);
    else if (key == "bits_value") hw.bits_value = need_bits(val, line, key);
    else if (key == "bits_index") hw.bits_index = need_bits(val, line, key);
    else if (key == "bits_len") hw.bits_len = need_bits(val, line, key);
    else if (key == "freq_hz") hw.freq_hz = need_real(val, line, key);
    else if (key == "segment_slots") cfg.engine.segment_slots = need_index(val, line, key);
    else if (key == "psum_capacity") {
      cfg.engine.psum_capacity = need_index(val, line, key);
      psum_given = true;
    } else if (key == "overflow_policy") {
      if (val == "fail") cfg.engine.overflow_policy = OverflowPolicy::kFail;
      else if (val == "spill") cfg.engine.overflow_policy = OverflowPolicy::kSpill;
      else throw ParseError(line, "overflow_policy must be fail or spill");
    } else if (key == "sdmm_threshold") {
      cfg.sdmm_threshold = need_real(val, line, key);
    } else if (key == "seed") {
      cfg.seed = need_index(val, line, key);
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }
  cfg.hw.validate();
  if (!psum_given) cfg.engine.psum_capacity = cfg.hw.buffer_psum;
  if (cfg.engine.psum_capacity == 0) throw DegenerateInputError("psum_capacity must be positive");
  if (!(cfg.hw.freq_hz > 0.0)) throw DegenerateInputError("freq_hz must be positive");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_config(in);
}

std::string to_text(const RunConfig& cfg) {
  std::ostringstream out;
  const auto& hw = cfg.hw;
  out << "buffer_a=" << hw.buffer_a << "\nbuffer_b=" << hw.buffer_b << "\nbuffer_psum=" << hw.buffer_psum
      << "\ngroups_a=" << hw.groups_a << "\ngroups_b=" << hw.groups_b
      << "\nreserve_ratio=" << format_real(hw.reserve_ratio) << "\nbits_value=" << hw.bits_value
      << "\nbits_index=" << hw.bits_index << "\nbits_len=" << hw.bits_len << "\nfreq_hz=" << format_real(hw.freq_hz)
      << "\nsegment_slots=" << cfg.engine.segment_slots << "\npsum_capacity=" << cfg.engine.psum_capacity
      << "\noverflow_policy=" << (cfg.engine.overflow_policy == OverflowPolicy::kFail ? "fail" : "spill")
      << "\nsdmm_threshold=" << format_real(cfg.sdmm_threshold) << "\nseed=" << cfg.seed << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Synthetic operands

TripletMatrix random_sparse(Index rows, Index cols, double density, std::mt19937_64& rng, double lo, double hi,
                            bool integers) {
  if (density < 0.0 || density > 1.0) throw DegenerateInputError("density must lie in [0, 1]");
  const std::uint64_t cells = static_cast<std::uint64_t>(rows) * cols;
  const auto want = static_cast<std::uint64_t>(std::llround(static_cast<double>(cells) * density));

  // Floyd's algorithm: `want` distinct cells without materializing all of them.
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(want * 2);
  std::vector<std::uint64_t> picks;
  picks.reserve(want);
  for (std::uint64_t j = cells - want; j < cells; ++j) {
    const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    const std::uint64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    picks.push_back(pick);
  }
  std::sort(picks.begin(), picks.end());

  std::uniform_real_distribution<double> dist(lo, hi);
  TripletMatrix t{rows, cols, {}};
  t.entries.reserve(picks.size());
  for (std::uint64_t cell : picks) {
    double v = dist(rng);
    if (integers) {
      v = std::round(v);
      if (v == 0.0) v = 1.0;
    }
    t.entries.push_back({static_cast<Index>(cell / cols), static_cast<Index>(cell % cols), v});
  }
  return t;
}

DenseMatrix random_dense(Index rows, Index cols, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  DenseMatrix m(rows, cols);
  for (double& v : m.data) v = dist(rng);
  return m;
}

const std::vector<DatasetPreset>& dataset_presets() {
  static const std::vector<DatasetPreset> presets = {
      {"cora", 2708, 1433, 0.0014, 0.0127, 16, 7},
      {"citeseer", 3327, 3703, 0.00083, 0.0085, 16, 6},
      {"pubmed", 19717, 500, 0.00023, 0.10, 16, 3},
      {"nell", 169343, 61278, 0.000041, 0.00011, 64, 186},
      {"reddit", 232965, 602, 0.00021, 0.516, 64, 41},
      {"facebook", 22470, 4714, 0.00034, 0.003, 0, 0},
      {"deezer", 28281, 30978, 0.00011, 0.0011, 0, 0},
      {"twitch", 9498, 2514, 0.0017, 0.0081, 0, 0},
      {"wiki", 11631, 13183, 0.0025, 0.0084, 0, 0},
      {"github", 37700, 4005, 0.0004, 0.0046, 0, 0},
  };
  return presets;
}

const DatasetPreset& find_preset(const std::string& name) {
  for (const auto& p : dataset_presets()) {
    if (p.name == name) return p;
  }
  throw Error("unknown dataset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Commands

namespace {

Index nnz_of(const DenseMatrix& m) {
  return static_cast<Index>(std::count_if(m.data.begin(), m.data.end(), [](double v) { return v != 0.0; }));
}

PartitionPlan plan_exact(const CscMatrix& a, Index b_cols, Index nnz_b, ComputeMode mode, const HardwareConfig& hw) {
  const WorkloadSpec wl = make_workload_exact(a.n_rows, a.n_cols, b_cols, a.value.size(), nnz_b, hw, mode);
  return plan_partition(hw, wl, mode);
}

}  // namespace

PartitionPlan plan_for(const CscMatrix& a, const CscMatrix& b, ComputeMode mode, const HardwareConfig& hw) {
  if (a.n_cols != b.n_rows) {
    throw DimensionError("dimension mismatch: A is " + std::to_string(a.n_rows) + "x" + std::to_string(a.n_cols) +
                         ", B is " + std::to_string(b.n_rows) + "x" + std::to_string(b.n_cols));
  }
  return plan_exact(a, b.n_cols, b.value.size(), mode, hw);
}

SpmmRun run_spmm(const CscMatrix& a, const CscMatrix& b, ModeChoice choice, const RunConfig& cfg,
                 const std::string& workload) {
  SpmmRun run;
  run.b_density = density(b.value.size(), b.n_rows, b.n_cols);
  run.threshold = cfg.sdmm_threshold;
  run.auto_mode = choice == ModeChoice::kAuto;
  run.mode = resolve_mode(choice, run.b_density, cfg.sdmm_threshold);
  const PartitionPlan plan = staged("plan", [&] { return plan_for(a, b, run.mode, cfg.hw); });
  SimulationResult sim = staged("simulate", [&] {
    RightOperand right = run.mode == ComputeMode::kSdmm ? RightOperand(to_dense(b)) : RightOperand(to_csr(b));
    return simulate(a, right, plan, cfg.hw, run.mode, cfg.engine, workload);
  });
  run.stats = std::move(sim.stats);
  run.output = std::move(sim.output);
  return run;
}

GcnWorkload make_gcn_workload(const DatasetPreset& preset, std::uint64_t seed) {
  if (preset.hidden == 0 || preset.classes == 0) {
    throw Error("dataset '" + preset.name + "' has no GCN weight shapes");
  }
  std::mt19937_64 rng(seed);
  GcnWorkload w;
  w.name = preset.name;
  w.a = to_csc(random_sparse(preset.vertices, preset.vertices, preset.density_a, rng, 0.1, 1.0));
  w.x = to_csc(random_sparse(preset.vertices, preset.features, preset.density_x, rng, 0.1, 1.0));
  w.w1 = random_dense(preset.features, preset.hidden, rng, 0.1, 1.0);
  w.w2 = random_dense(preset.hidden, preset.classes, rng, 0.1, 1.0);
  return w;
}

GcnReport run_gcn(const GcnWorkload& w, const RunConfig& cfg, Index oracle_limit) {
  const Index n = w.a.n_rows;
  auto mismatch = [](const std::string& step, const std::string& what) {
    return StageError(step, "dimension mismatch: " + what);
  };
  if (w.a.n_cols != n) throw mismatch("xw1", "adjacency is not square");
  if (w.x.n_rows != n) throw mismatch("xw1", "X has " + std::to_string(w.x.n_rows) + " rows, A has " + std::to_string(n));
  if (w.w1.n_rows != w.x.n_cols) {
    throw mismatch("xw1", "W1 has " + std::to_string(w.w1.n_rows) + " rows, X has " + std::to_string(w.x.n_cols) +
                              " columns");
  }
  if (w.w2.n_rows != w.w1.n_cols) {
    throw mismatch("hw2", "W2 has " + std::to_string(w.w2.n_rows) + " rows, W1 has " + std::to_string(w.w1.n_cols) +
                              " columns");
  }

  GcnReport report;
  auto step = [&](const std::string& name, const CscMatrix& left, const DenseMatrix& right) {
    const PartitionPlan plan = staged(name + " plan", [&] {
      return plan_exact(left, right.n_cols, nnz_of(right), ComputeMode::kSdmm, cfg.hw);
    });
    SimulationResult sim = staged(name, [&] {
      return simulate(left, right, plan, cfg.hw, ComputeMode::kSdmm, cfg.engine, w.name + "/" + name);
    });
    report.steps.push_back(std::move(sim.stats));
    report.baselines.push_back(
        baseline_counters(left, to_csr(to_triplets(right)), cfg.hw.groups_a, cfg.hw.groups_b));
    return std::get<DenseMatrix>(std::move(sim.output));
  };

  const DenseMatrix xw1 = step("xw1", w.x, w.w1);
  const DenseMatrix h = step("axw1", w.a, xw1);
  const CscMatrix h_sparse = to_csc(to_triplets(h));
  if (density(h_sparse.value.size(), h.n_rows, h.n_cols) > cfg.sdmm_threshold) {
    report.notes.push_back("hw2: left operand is dense (density " +
                           format_real(density(h_sparse.value.size(), h.n_rows, h.n_cols)) +
                           "); run as SDMM with a sparse-encoded dense matrix instead of a dense-dense product");
  }
  const DenseMatrix hw2 = step("hw2", h_sparse, w.w2);
  report.output = step("ahw2", w.a, hw2);

  const Index cells = n * n + n * w.x.n_cols;
  if (cells > oracle_limit) {
    report.notes.push_back("oracle skipped: " + std::to_string(cells) + " dense cells exceed the limit of " +
                           std::to_string(oracle_limit));
    return report;
  }
  staged("oracle", [&] {
    const DenseMatrix ad = to_dense(w.a), xd = to_dense(w.x);
    const DenseMatrix ref = dense_matmul(ad, dense_matmul(dense_matmul(ad, dense_matmul(xd, w.w1)), w.w2));
    const DenseMatrix aa = abs(ad);
    const DenseMatrix scale =
        dense_matmul(aa, dense_matmul(dense_matmul(aa, dense_matmul(abs(xd), abs(w.w1))), abs(w.w2)));
    report.max_relative_error = max_relative_error(report.output, ref, scale);
    report.oracle_checked = true;
  });
  return report;
}

std::vector<SweepCell> run_sweep(const std::vector<SweepWorkload>& workloads, const SweepAxes& axes,
                                 const RunConfig& base) {
  std::vector<SweepCell> cells;
  for (const auto& w : workloads) {
    for (Index grid : axes.grids) {
      for (double scale : axes.scales) {
        SweepCell cell;
        cell.workload = w.name;
        cell.grid = grid;
        cell.buffer_scale = scale;
        try {
          RunConfig cfg = base;
          cfg.hw.groups_a = cfg.hw.groups_b = grid;
          cfg.hw.buffer_a = static_cast<Index>(std::llround(static_cast<double>(base.hw.buffer_a) * scale));
          cfg.hw.buffer_b = static_cast<Index>(std::llround(static_cast<double>(base.hw.buffer_b) * scale));
          cfg.hw.validate();
          cell.stats = run_spmm(w.a, w.b, w.mode, cfg, w.name).stats;
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << "grid,buffer_scale";
  for (const auto& c : report_columns()) out << ',' << c;
  out << ",peak_macs_per_cycle,predicted_dram_bytes,status,error\n";
  for (const auto& cell : cells) {
    out << cell.grid << 'x' << cell.grid << ',' << format_real(cell.buffer_scale) << ',';
    if (cell.ok) {
      std::ostringstream row;
      write_csv_row(row, cell.stats);
      std::string r = row.str();
      r.pop_back();
      out << r << ',' << cell.stats.peak_macs_per_cycle << ',' << format_real(cell.stats.predicted_dram_bits / 8.0)
          << ",ok,\n";
    } else {
      std::string msg = cell.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << cell.workload << std::string(report_columns().size() - 1, ',') << ",," << ",failed," << msg << '\n';
    }
  }
}

}  // namespace iops
