#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "iops/harness.hpp"
#include "oracles.hpp"

using namespace iops;

TEST_CASE("config parsing", "[harness]") {
  std::istringstream in(
      "# grid\n"
      "groups_a = 4\n"
      "groups_b=4\n"
      "buffer_psum=128   # per PE\n"
      "reserve_ratio=0.5\n"
      "overflow_policy=fail\n"
      "sdmm_threshold=0.4\n");
  const RunConfig cfg = parse_config(in);
  CHECK(cfg.hw.groups_a == 4);
  CHECK(cfg.hw.buffer_psum == 128);
  CHECK(cfg.engine.psum_capacity == 128);
  CHECK(cfg.hw.reserve_ratio == 0.5);
  CHECK(cfg.engine.overflow_policy == OverflowPolicy::kFail);
  CHECK(cfg.sdmm_threshold == 0.4);
  CHECK(cfg.hw.buffer_a == 2048);

  std::istringstream round(to_text(cfg));
  CHECK(to_text(parse_config(round)) == to_text(cfg));
}

TEST_CASE("config errors", "[harness]") {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_config(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("groups_a=4\nbogus=1\n") == 2);
  CHECK(line_of("groups_a=four\n") == 1);
  CHECK(line_of("\n\ngroups_a\n") == 3);
  std::istringstream zero("buffer_a=0\n");
  CHECK_THROWS_AS(parse_config(zero), DegenerateInputError);
}

TEST_CASE("auto mode follows the density threshold", "[harness]") {
  CHECK(resolve_mode(ModeChoice::kAuto, 0.516, 0.25) == ComputeMode::kSdmm);
  CHECK(resolve_mode(ModeChoice::kAuto, 0.10, 0.25) == ComputeMode::kSsmm);
  CHECK(resolve_mode(ModeChoice::kAuto, 0.25, 0.25) == ComputeMode::kSsmm);
  CHECK(resolve_mode(ModeChoice::kSsmm, 0.9, 0.25) == ComputeMode::kSsmm);
  CHECK_THROWS(parse_mode_choice("ddmm"));

  std::mt19937_64 rng(2);
  const CscMatrix a = to_csc(random_sparse(30, 40, 0.05, rng));
  const CscMatrix b = to_csc(random_sparse(40, 20, 0.516, rng));
  const SpmmRun run = run_spmm(a, b, ModeChoice::kAuto, RunConfig{});
  CHECK(run.mode == ComputeMode::kSdmm);
  const DenseMatrix ref = dense_matmul(to_dense(a), to_dense(b));
  CHECK(max_relative_error(std::get<DenseMatrix>(run.output), ref,
                           dense_matmul(abs(to_dense(a)), abs(to_dense(b)))) <= 1e-12);
}

TEST_CASE("synthetic generator hits the target count deterministically", "[harness]") {
  std::mt19937_64 r1(42), r2(42);
  const auto a = random_sparse(100, 50, 0.03, r1);
  const auto b = random_sparse(100, 50, 0.03, r2);
  CHECK(a.entries.size() == 150);
  CHECK(a.entries == b.entries);
  CHECK(canonicalize(a).entries == a.entries);
  std::mt19937_64 r3(1);
  CHECK(random_sparse(10, 10, 1.0, r3).entries.size() == 100);
  std::mt19937_64 r4(1);
  for (const auto& e : random_sparse(10, 10, 0.5, r4, -3.0, 3.0, true).entries) {
    CHECK(e.value == std::round(e.value));
    CHECK(e.value != 0.0);
  }
}

TEST_CASE("dataset presets", "[harness]") {
  const auto& cora = find_preset("cora");
  CHECK(cora.vertices == 2708);
  CHECK(cora.features == 1433);
  CHECK(cora.hidden == 16);
  CHECK(cora.classes == 7);
  CHECK(find_preset("reddit").density_x == 0.516);
  CHECK_THROWS(find_preset("imagenet"));
  CHECK(dataset_presets().size() == 10);
}

TEST_CASE("GCN chain with identity adjacency", "[harness]") {
  std::mt19937_64 rng(6);
  GcnWorkload w;
  w.name = "ident";
  w.a = to_csc(to_triplets(DenseMatrix::identity(30)));
  w.x = to_csc(random_sparse(30, 20, 0.2, rng, 0.1, 1.0));
  w.w1 = random_dense(20, 5, rng);
  w.w2 = random_dense(5, 3, rng);
  const GcnReport rep = run_gcn(w, RunConfig{});
  REQUIRE(rep.oracle_checked);
  CHECK(rep.max_relative_error <= 1e-12);
  CHECK(rep.steps.size() == 4);
  const DenseMatrix direct = dense_matmul(dense_matmul(to_dense(w.x), w.w1), w.w2);
  CHECK(max_relative_error(rep.output, direct, direct) <= 1e-12);
}

TEST_CASE("GCN chain with zero features", "[harness]") {
  std::mt19937_64 rng(6);
  GcnWorkload w;
  w.name = "zero";
  w.a = to_csc(random_sparse(25, 25, 0.1, rng));
  w.x = to_csc(TripletMatrix{25, 10, {}});
  w.w1 = random_dense(10, 4, rng);
  w.w2 = random_dense(4, 2, rng);
  const GcnReport rep = run_gcn(w, RunConfig{});
  for (double v : rep.output.data) CHECK(v == 0.0);
  REQUIRE(rep.baselines.size() == 4);
  for (std::size_t i = 1; i < rep.baselines.size(); ++i) CHECK(rep.baselines[i].iohp_macs == 0);
  CHECK(rep.steps[2].achieved_macs == 0);
}

TEST_CASE("GCN chain reports a nonconforming step", "[harness]") {
  std::mt19937_64 rng(6);
  GcnWorkload w;
  w.a = to_csc(TripletMatrix{5, 5, {}});
  w.x = to_csc(TripletMatrix{5, 4, {}});
  w.w1 = DenseMatrix(3, 2);
  w.w2 = DenseMatrix(2, 2);
  try {
    run_gcn(w, RunConfig{});
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "xw1");
    CHECK_THAT(std::string(e.what()), Catch::Matchers::ContainsSubstring("dimension mismatch"));
  }
}

TEST_CASE("sweep rows, peaks and failed cells", "[harness]") {
  std::mt19937_64 rng(9);
  SweepWorkload w{"rand", to_csc(random_sparse(64, 64, 0.05, rng)), to_csc(random_sparse(64, 64, 0.05, rng)),
                  ModeChoice::kSsmm};
  const auto cells = run_sweep({w}, {{4, 8, 16}, {1.0}}, RunConfig{});
  REQUIRE(cells.size() == 3);
  CHECK(cells[0].stats.peak_macs_per_cycle == 16);
  CHECK(cells[1].stats.peak_macs_per_cycle == 64);
  CHECK(cells[2].stats.peak_macs_per_cycle == 256);

  std::ostringstream empty;
  write_sweep_csv(empty, run_sweep({w}, {}, RunConfig{}));
  const std::string header_only = empty.str();
  CHECK(std::count(header_only.begin(), header_only.end(), '\n') == 1);

  const auto bad = run_sweep({w}, {{100}, {1.0}}, RunConfig{});
  REQUIRE(bad.size() == 1);
  CHECK_FALSE(bad[0].ok);
  std::ostringstream out;
  write_sweep_csv(out, bad);
  CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring(",failed,"));
}
