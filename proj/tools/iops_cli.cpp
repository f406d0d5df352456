// Command-line driver: spmm, plan, sim, gcn and sweep.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iops/cost_model.hpp"
#include "iops/format.hpp"
#include "iops/harness.hpp"
#include "iops/matrix_market.hpp"

namespace {

using namespace iops;

struct Common {
  std::string config;
  std::string report;
  std::string format = "csv";
};

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return staged("config", [&] { return load_config(path); });
}

CscMatrix load_sparse(const std::string& path, const std::string& what) {
  return staged("load " + what, [&] { return to_csc(load_matrix_market(std::filesystem::path(path))); });
}

DenseMatrix load_dense(const std::string& path, const std::string& what) {
  return staged("load " + what, [&] { return to_dense(load_matrix_market(std::filesystem::path(path))); });
}

// Writes to `path`, or stdout when empty.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  staged("write", [&] {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    fn(out);
    if (!out) throw Error("write to " + path + " failed");
  });
}

void write_report(std::ostream& out, const std::vector<SimStats>& rows, const std::string& format) {
  if (format == "text") {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) out << '\n';
      write_text(out, rows[i]);
    }
    return;
  }
  write_csv_header(out);
  for (const auto& s : rows) write_csv_row(out, s);
}

void write_output(const std::string& path, const SpmmOutput& result) {
  if (path.empty()) return;
  emit(path, [&](std::ostream& out) {
    if (const auto* sparse = std::get_if<CscMatrix>(&result)) {
      write_matrix_market(out, *sparse);
    } else {
      write_csv(out, std::get<DenseMatrix>(result));
    }
  });
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!trim(item).empty()) out.emplace_back(trim(item));
  }
  return out;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Flat key=value hardware config");
  cmd->add_option("--report", c.report, "Report path (default stdout)");
  cmd->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"csv", "text"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inner-outer hybrid SpMM dataflow: engine, planner and cost model"};
  app.require_subcommand(1);

  Common common;
  std::string a_path, b_path, out_path, mode = "auto", plan_path, dataset, x_path, w1_path, w2_path;
  std::uint64_t seed = 1;
  Index m = 0, k = 0, n = 0;
  double density_a = 0.0, density_b = 0.0;
  std::string grids = "4,8,16", scales = "0.5,1,2", random_spec;

  auto* spmm_cmd = app.add_subcommand("spmm", "Multiply two Matrix Market operands and report the simulation");
  spmm_cmd->add_option("--a", a_path, "Left operand")->required();
  spmm_cmd->add_option("--b", b_path, "Right operand")->required();
  spmm_cmd->add_option("--mode", mode, "ssmm, sdmm or auto")->check(CLI::IsMember({"ssmm", "sdmm", "auto"}));
  spmm_cmd->add_option("--out", out_path, "Result path (Matrix Market when sparse, CSV when dense)");
  add_common(spmm_cmd, common);

  auto* plan_cmd = app.add_subcommand("plan", "Choose tiling and reuse strategy");
  plan_cmd->add_option("--a", a_path, "Left operand");
  plan_cmd->add_option("--b", b_path, "Right operand");
  plan_cmd->add_option("--m", m, "Rows of A");
  plan_cmd->add_option("--k", k, "Inner dimension");
  plan_cmd->add_option("--n", n, "Columns of B");
  plan_cmd->add_option("--density-a", density_a, "Density of A");
  plan_cmd->add_option("--density-b", density_b, "Density of B");
  plan_cmd->add_option("--mode", mode, "ssmm, sdmm or auto")->check(CLI::IsMember({"ssmm", "sdmm", "auto"}));
  plan_cmd->add_option("--config", common.config, "Flat key=value hardware config");
  plan_cmd->add_option("--out", out_path, "Plan path (default stdout)");

  auto* sim_cmd = app.add_subcommand("sim", "Simulate a product under a given or planned partition");
  sim_cmd->add_option("--a", a_path, "Left operand")->required();
  sim_cmd->add_option("--b", b_path, "Right operand")->required();
  sim_cmd->add_option("--plan", plan_path, "Plan record from `plan` (default: plan here)");
  sim_cmd->add_option("--mode", mode, "ssmm, sdmm or auto")->check(CLI::IsMember({"ssmm", "sdmm", "auto"}));
  sim_cmd->add_option("--out", out_path, "Result path");
  add_common(sim_cmd, common);

  auto* gcn_cmd = app.add_subcommand("gcn", "Two-layer GCN product chain A((A(X W1)) W2)");
  gcn_cmd->add_option("--dataset", dataset, "Synthetic dataset preset (cora, citeseer, pubmed, nell, reddit)");
  gcn_cmd->add_option("--seed", seed, "Generator seed");
  gcn_cmd->add_option("--a", a_path, "Adjacency matrix");
  gcn_cmd->add_option("--x", x_path, "Feature matrix");
  gcn_cmd->add_option("--w1", w1_path, "First weight matrix");
  gcn_cmd->add_option("--w2", w2_path, "Second weight matrix");
  gcn_cmd->add_option("--out", out_path, "Result path (CSV)");
  add_common(gcn_cmd, common);

  auto* sweep_cmd = app.add_subcommand("sweep", "Grid size and input buffer sweep");
  sweep_cmd->add_option("--a", a_path, "Left operand");
  sweep_cmd->add_option("--b", b_path, "Right operand");
  sweep_cmd->add_option("--random", random_spec, "Synthetic operands m,k,n,density_a,density_b");
  sweep_cmd->add_option("--seed", seed, "Generator seed");
  sweep_cmd->add_option("--grids", grids, "Comma-separated square grid sides");
  sweep_cmd->add_option("--scales", scales, "Comma-separated input buffer scales");
  sweep_cmd->add_option("--mode", mode, "ssmm, sdmm or auto")->check(CLI::IsMember({"ssmm", "sdmm", "auto"}));
  sweep_cmd->add_option("--config", common.config, "Flat key=value hardware config");
  sweep_cmd->add_option("--out", out_path, "CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_run_config(common.config);
    const ModeChoice choice = parse_mode_choice(mode);

    if (*spmm_cmd) {
      const CscMatrix a = load_sparse(a_path, "A");
      const CscMatrix b = load_sparse(b_path, "B");
      const SpmmRun run = run_spmm(a, b, choice, cfg, std::filesystem::path(a_path).stem().string());
      std::cout << "mode=" << to_string(run.mode) << " b_density=" << format_real(run.b_density)
                << " sdmm_threshold=" << format_real(run.threshold) << (run.auto_mode ? " (auto)" : "") << '\n';
      write_output(out_path, run.output);
      emit(common.report, [&](std::ostream& out) { write_report(out, {run.stats}, common.format); });
      return 0;
    }

    if (*plan_cmd) {
      PartitionPlan plan;
      if (!a_path.empty() || !b_path.empty()) {
        if (a_path.empty() || b_path.empty()) throw StageError("plan", "--a and --b must be given together");
        const CscMatrix a = load_sparse(a_path, "A");
        const CscMatrix b = load_sparse(b_path, "B");
        const ComputeMode cm = resolve_mode(choice, density(b.value.size(), b.n_rows, b.n_cols), cfg.sdmm_threshold);
        plan = staged("plan", [&] { return plan_for(a, b, cm, cfg.hw); });
      } else {
        const ComputeMode cm = resolve_mode(choice, density_b, cfg.sdmm_threshold);
        plan = staged("plan", [&] {
          return plan_partition(cfg.hw, make_workload(m, k, n, density_a, density_b, cfg.hw, cm), cm);
        });
      }
      emit(out_path, [&](std::ostream& out) { out << to_text(plan); });
      return 0;
    }

    if (*sim_cmd) {
      const CscMatrix a = load_sparse(a_path, "A");
      const CscMatrix b = load_sparse(b_path, "B");
      const ComputeMode cm = resolve_mode(choice, density(b.value.size(), b.n_rows, b.n_cols), cfg.sdmm_threshold);
      const PartitionPlan plan = plan_path.empty() ? staged("plan", [&] { return plan_for(a, b, cm, cfg.hw); })
                                                   : staged("load plan", [&] {
                                                       std::ifstream in(plan_path);
                                                       if (!in) throw Error("cannot open " + plan_path);
                                                       return parse_plan(in);
                                                     });
      const SimulationResult sim = staged("simulate", [&] {
        RightOperand right = cm == ComputeMode::kSdmm ? RightOperand(to_dense(b)) : RightOperand(to_csr(b));
        return simulate(a, right, plan, cfg.hw, cm, cfg.engine, std::filesystem::path(a_path).stem().string());
      });
      write_output(out_path, sim.output);
      emit(common.report, [&](std::ostream& out) { write_report(out, {sim.stats}, common.format); });
      return 0;
    }

    if (*gcn_cmd) {
      GcnWorkload w;
      if (!dataset.empty()) {
        w = staged("generate", [&] { return make_gcn_workload(find_preset(dataset), seed); });
      } else {
        if (a_path.empty() || x_path.empty() || w1_path.empty() || w2_path.empty()) {
          throw StageError("load", "give --dataset, or all of --a --x --w1 --w2");
        }
        w.name = std::filesystem::path(a_path).stem().string();
        w.a = load_sparse(a_path, "A");
        w.x = load_sparse(x_path, "X");
        w.w1 = load_dense(w1_path, "W1");
        w.w2 = load_dense(w2_path, "W2");
      }
      const GcnReport rep = run_gcn(w, cfg);
      for (const auto& note : rep.notes) std::cout << "note: " << note << '\n';
      if (rep.oracle_checked) {
        std::cout << "oracle max_relative_error=" << format_real(rep.max_relative_error) << '\n';
      }
      write_output(out_path, rep.output);
      emit(common.report, [&](std::ostream& out) { write_report(out, rep.steps, common.format); });
      if (rep.oracle_checked && !(rep.max_relative_error <= 1e-9)) {
        std::cerr << "error [oracle]: result differs from the dense reference\n";
        return 1;
      }
      return 0;
    }

    if (*sweep_cmd) {
      SweepWorkload w;
      w.mode = choice;
      if (!random_spec.empty()) {
        const auto parts = split_list(random_spec);
        unsigned long long dims[3] = {0, 0, 0};
        double dens[2] = {0.0, 0.0};
        if (parts.size() != 5 || !parse_index(parts[0], dims[0]) || !parse_index(parts[1], dims[1]) ||
            !parse_index(parts[2], dims[2]) || !parse_real(parts[3], dens[0]) || !parse_real(parts[4], dens[1])) {
          throw StageError("generate", "--random expects m,k,n,density_a,density_b");
        }
        staged("generate", [&] {
          std::mt19937_64 rng(seed);
          w.a = to_csc(random_sparse(dims[0], dims[1], dens[0], rng));
          w.b = to_csc(random_sparse(dims[1], dims[2], dens[1], rng));
        });
        w.name = "random";
      } else {
        if (a_path.empty() || b_path.empty()) throw StageError("load", "give --a and --b, or --random");
        w.a = load_sparse(a_path, "A");
        w.b = load_sparse(b_path, "B");
        w.name = std::filesystem::path(a_path).stem().string();
      }
      SweepAxes axes;
      staged("axes", [&] {
        for (const auto& g : split_list(grids)) {
          unsigned long long v = 0;
          if (!parse_index(g, v) || v == 0) throw Error("bad grid size '" + g + "'");
          axes.grids.push_back(v);
        }
        for (const auto& s : split_list(scales)) {
          double v = 0.0;
          if (!parse_real(s, v) || !(v > 0.0)) throw Error("bad buffer scale '" + s + "'");
          axes.scales.push_back(v);
        }
      });
      const auto cells = run_sweep({w}, axes, cfg);
      emit(out_path, [&](std::ostream& out) { write_sweep_csv(out, cells); });
      return 0;
    }
  } catch (const StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [run]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
