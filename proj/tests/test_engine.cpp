#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "iops/engine.hpp"
#include "iops/error.hpp"
#include "oracles.hpp"

using namespace iops;

namespace {

CscMatrix worked_a() { return to_csc(canonicalize({4, 4, {{0, 0, 5}, {2, 1, 3}, {1, 2, 7}}})); }
CsrMatrix worked_b() { return to_csr(canonicalize({4, 4, {{0, 0, 1}, {0, 1, 2}, {1, 2, 4}, {2, 1, 6}}})); }
TilingGeometry worked_geometry() { return make_geometry(4, 4, 4, 2, 4, 2, 2, 2); }

DenseMatrix dense_of(const SpmmOutput& out) {
  if (const auto* c = std::get_if<CscMatrix>(&out)) return to_dense(*c);
  return std::get<DenseMatrix>(out);
}

}  // namespace

TEST_CASE("psum store directory and overflow", "[engine]") {
  PsumStore ps(2, 3, 4);
  ps.append(0, 5, 1.0);
  ps.append(1, 2, 2.0);
  ps.append(0, 1, 3.0);
  CHECK(ps.size() == 3);
  CHECK(std::vector<Index>(ps.row_addresses(0).begin(), ps.row_addresses(0).end()) == std::vector<Index>{0, 2});
  CHECK_NOTHROW(ps.check_invariants());
  ps.append(0, 0, 1.0);
  CHECK_FALSE(ps.can_append(1));  // capacity reached
  CHECK_THROWS_AS(ps.append(1, 0, 1.0), OverflowError);
  ps.clear();
  CHECK(ps.empty());

  PsumStore seg(1, 2, 100);
  seg.append(0, 0, 1.0);
  seg.append(0, 1, 1.0);
  CHECK_THROWS_AS(seg.append(0, 2, 1.0), OverflowError);
}

TEST_CASE("address mapping sorts through the directory and sums runs", "[engine]") {
  PsumStore ps(1, 4, 16);
  ps.append(0, 3, 1.0);
  ps.append(0, 1, 2.0);
  ps.append(0, 3, 4.0);
  ps.append(0, 0, 8.0);
  CHECK(sorted_row_addresses(ps, 0) == std::vector<Index>{3, 1, 0, 2});
  const OutputBlock out = address_map(ps);
  REQUIRE(out.entries.size() == 3);
  CHECK(out.entries[0] == Triplet{0, 0, 8.0});
  CHECK(out.entries[1] == Triplet{0, 1, 2.0});
  CHECK(out.entries[2] == Triplet{0, 3, 5.0});
}

TEST_CASE("address-mapped order is stable for three psums", "[engine]") {
  PsumStore ps(1, 3, 8);
  ps.append(0, 1, 1.0);
  ps.append(0, 2, 1.0);
  ps.append(0, 0, 1.0);
  CHECK(sorted_row_addresses(ps, 0) == std::vector<Index>{2, 0, 1});
}

TEST_CASE("directory lookup skips another row's address", "[engine]") {
  // Row 0 owns addresses 0, 2 and 3 with columns 1, 0, 1.
  PsumStore ps(2, 4, 8);
  ps.append(0, 1, 1.0);
  ps.append(1, 5, 9.0);
  ps.append(0, 0, 2.0);
  ps.append(0, 1, 4.0);
  CHECK(sorted_row_addresses(ps, 0) == std::vector<Index>{2, 0, 3});
  const OutputBlock out = address_map(ps);
  CHECK(out.entries == std::vector<Triplet>{{0, 0, 2.0}, {0, 1, 5.0}, {1, 5, 9.0}});
}

TEST_CASE("worked example psums on PE(0,0)", "[engine]") {
  const auto g = worked_geometry();
  const PsumGrid grid = compute_psums(encode_rp_csc(worked_a(), g, 0, 0), encode_cp_csr(worked_b(), g, 0, 0), {});
  const OutputBlock pe00 = drain(grid.at(0, 0));
  REQUIRE(pe00.entries.size() == 3);
  CHECK(pe00.entries[0] == Triplet{0, 0, 5.0});
  CHECK(pe00.entries[1] == Triplet{0, 1, 10.0});
  CHECK(pe00.entries[2] == Triplet{1, 1, 42.0});
  CHECK(drain(grid.at(1, 1)).entries == std::vector<Triplet>{{0, 0, 12.0}});
  CHECK(drain(grid.at(0, 1)).entries.empty());
  CHECK(grid.total_products() == 4);
}

TEST_CASE("worked example end to end", "[engine]") {
  const auto g = worked_geometry();
  const SpmmResult r = spmm(worked_a(), worked_b(), ComputeMode::kSsmm, g, {});
  const auto& c = std::get<CscMatrix>(r.output);
  CHECK(to_triplets(c).entries ==
        std::vector<Triplet>{{0, 0, 5.0}, {0, 1, 10.0}, {1, 1, 42.0}, {2, 2, 12.0}});
  CHECK(r.totals.products == 4);
}

TEST_CASE("blocks with different inner indices are rejected", "[engine]") {
  const auto g = make_geometry(4, 4, 4, 2, 2, 2, 2, 2);
  CHECK_THROWS_AS(compute_psums(encode_rp_csc(worked_a(), g, 0, 0), encode_cp_csr(worked_b(), g, 1, 0), {}),
                  DimensionError);
}

TEST_CASE("merging partial outputs sums coincident coordinates", "[engine]") {
  std::vector<OutputBlock> parts = {{{{0, 1, 1.0}, {2, 0, 1.0}}}, {{{0, 1, 2.0}, {1, 1, 5.0}}}, {}};
  const OutputBlock m = merge_output_blocks(parts);
  CHECK(m.entries == std::vector<Triplet>{{0, 1, 3.0}, {1, 1, 5.0}, {2, 0, 1.0}});
}

TEST_CASE("SDMM scales a gathered dense row", "[engine]") {
  const CscMatrix a = to_csc(canonicalize({2, 1, {{0, 0, 2.0}}}));
  DenseMatrix b(1, 2);
  b.data = {3, 4};
  const auto g = make_geometry(2, 1, 2, 2, 1, 2, 1, 1);
  const auto blk = encode_rp_csc(a, g, 0, 0);
  const SdmmGrid grid = sdmm_compute(blk, gather_dense_rows(b, blk, g, 0), g);
  CHECK(grid.at(0, 0).data == std::vector<double>{6, 8, 0, 0});
  CHECK(grid.products == 2);
  const SpmmResult r = spmm(a, b, ComputeMode::kSdmm, g, {});
  CHECK(std::get<DenseMatrix>(r.output).data == std::vector<double>{6, 8, 0, 0});
}

TEST_CASE("gather fails when B lacks a needed row", "[engine]") {
  const CscMatrix a = to_csc(canonicalize({2, 3, {{0, 2, 1.0}}}));
  const auto g = make_geometry(2, 3, 2, 2, 3, 2, 1, 1);
  const auto blk = encode_rp_csc(a, g, 0, 0);
  CHECK_THROWS_AS(gather_dense_rows(DenseMatrix(2, 2), blk, g, 0), GatherError);
  GatheredRows empty{0, 0, 2, {}};
  CHECK_THROWS_AS(sdmm_compute(blk, empty, g), GatherError);
}

TEST_CASE("dimension mismatch is reported", "[engine]") {
  const auto g = worked_geometry();
  CHECK_THROWS_WITH(spmm(worked_a(), to_csr(TripletMatrix{3, 4, {}}), ComputeMode::kSsmm, g, {}),
                    Catch::Matchers::ContainsSubstring("dimension mismatch"));
}

TEST_CASE("random products agree with the oracle and the MAC law", "[engine]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const Index m = 1 + rng() % 30, k = 1 + rng() % 30, n = 1 + rng() % 30;
    const auto ta = oracle::random_matrix(m, k, rng() % (m * k / 2 + 1), rng, true);
    const auto tb = oracle::random_matrix(k, n, rng() % (k * n / 2 + 1), rng, true);
    const auto g = make_geometry(m, k, n, 1 + rng() % 6, 1 + rng() % 10, 1 + rng() % 6, 1 + rng() % 4, 1 + rng() % 4);
    EngineConfig cfg;
    cfg.psum_capacity = 4 + rng() % 20;
    const SpmmResult r = spmm(to_csc(ta), to_csr(tb), ComputeMode::kSsmm, g, cfg);
    DenseMatrix ref(m, n);
    for (const auto& [rc, v] : oracle::triplet_product(ta, tb)) ref(rc.first, rc.second) = v;
    CHECK(dense_of(r.output) == ref);
    CHECK(r.totals.products == oracle::mac_law(ta, tb));

    const SpmmResult d = spmm(to_csc(ta), to_dense(tb), ComputeMode::kSdmm, g, cfg);
    CHECK(dense_of(d.output) == ref);
  }
}

TEST_CASE("overflow spills under spill and throws under fail", "[engine]") {
  // One dense A row against a dense B row block: many psums for one output row.
  TripletMatrix ta{4, 8, {}};
  for (Index c = 0; c < 8; ++c) ta.entries.push_back({0, c, 1.0 + c});
  TripletMatrix tb{8, 4, {}};
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 4; ++c) tb.entries.push_back({r, c, 1.0 + r * 4 + c});
  const auto g = make_geometry(4, 8, 4, 4, 8, 4, 1, 1);
  EngineConfig cfg;
  cfg.psum_capacity = 5;
  const SpmmResult r = spmm(to_csc(ta), to_csr(tb), ComputeMode::kSsmm, g, cfg);
  CHECK(r.totals.spill_events > 0);
  CHECK(to_dense(std::get<CscMatrix>(r.output)) == dense_matmul(to_dense(ta), to_dense(tb)));

  cfg.overflow_policy = OverflowPolicy::kFail;
  CHECK_THROWS_AS(spmm(to_csc(ta), to_csr(tb), ComputeMode::kSsmm, g, cfg), OverflowError);
}

TEST_CASE("observer sees every tile pass", "[engine]") {
  std::mt19937_64 rng(8);
  const auto ta = oracle::random_matrix(20, 20, 60, rng, true);
  const auto tb = oracle::random_matrix(20, 20, 60, rng, true);
  const auto g = make_geometry(20, 20, 20, 3, 7, 3, 2, 2);
  Index passes = 0;
  spmm(to_csc(ta), to_csr(tb), ComputeMode::kSsmm, g, {}, [&](const TilePass& p) {
    ++passes;
    CHECK(p.psums != nullptr);
    CHECK(p.a->block_k == p.block_k);
  });
  CHECK(passes == g.blocks_m * g.blocks_n * g.blocks_k);
}

TEST_CASE("psum store dump", "[engine]") {
  PsumStore ps(2, 2, 4);
  ps.append(1, 0, 2.5);
  std::ostringstream out;
  dump(out, ps);
  CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring("row1.vc_addr=0"));
  CHECK_THAT(out.str(), Catch::Matchers::ContainsSubstring("value=2.5"));
}
