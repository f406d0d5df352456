#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "iops/encoding.hpp"
#include "iops/error.hpp"
#include "oracles.hpp"

using namespace iops;

namespace {

CscMatrix worked_a() { return to_csc(canonicalize({4, 4, {{0, 0, 5}, {2, 1, 3}, {1, 2, 7}}})); }
CsrMatrix worked_b() { return to_csr(canonicalize({4, 4, {{0, 0, 1}, {0, 1, 2}, {1, 2, 4}, {2, 1, 6}}})); }
TilingGeometry worked_geometry() { return make_geometry(4, 4, 4, 2, 4, 2, 2, 2); }

// Entries of `t` inside the block window, in canonical order.
TripletMatrix window(const TripletMatrix& t, Index r0, Index r1, Index c0, Index c1) {
  TripletMatrix out{t.n_rows, t.n_cols, {}};
  for (const auto& e : t.entries) {
    if (e.row >= r0 && e.row < r1 && e.col >= c0 && e.col < c1) out.entries.push_back(e);
  }
  return out;
}

}  // namespace

TEST_CASE("RP-CSC of the worked matrix", "[encoding]") {
  const RpCscBlock blk = encode_rp_csc(worked_a(), worked_geometry(), 0, 0);
  REQUIRE(blk.groups() == 2);
  CHECK(blk.value[0] == std::vector<double>{5, 7});
  CHECK(blk.row_idx[0] == std::vector<Index>{0, 1});
  CHECK(blk.col_len[0] == std::vector<Index>{1, 1});
  CHECK(blk.value[1] == std::vector<double>{3});
  CHECK(blk.row_idx[1] == std::vector<Index>{0});
  CHECK(blk.col_len[1] == std::vector<Index>{1});
  CHECK(blk.col_idx == std::vector<Index>{0, 1, 2});
  CHECK(blk.group_bitmap == std::vector<GroupMask>{1, 2, 1});
  CHECK(blk.col_all_len == 3);
}

TEST_CASE("CP-CSR of the worked matrix", "[encoding]") {
  const CpCsrBlock blk = encode_cp_csr(worked_b(), worked_geometry(), 0, 0);
  REQUIRE(blk.groups() == 2);
  CHECK(blk.value[0] == std::vector<double>{1, 2, 6});
  CHECK(blk.col_idx[0] == std::vector<Index>{0, 1, 1});
  CHECK(blk.row_len[0] == std::vector<Index>{2, 1});
  CHECK(blk.value[1] == std::vector<double>{4});
  CHECK(blk.col_idx[1] == std::vector<Index>{0});
  CHECK(blk.row_len[1] == std::vector<Index>{1});
  CHECK(blk.row_idx == std::vector<Index>{0, 1, 2});
  CHECK(blk.group_bitmap == std::vector<GroupMask>{1, 2, 1});
}

TEST_CASE("empty block encodes to empty streams", "[encoding]") {
  const CscMatrix a = to_csc(TripletMatrix{4, 4, {}});
  const RpCscBlock blk = encode_rp_csc(a, worked_geometry(), 0, 0);
  CHECK(blk.col_all_len == 0);
  CHECK(blk.nnz() == 0);
  CHECK(blk.col_idx.empty());
}

TEST_CASE("encoder rejects bad geometry and coordinates", "[encoding]") {
  CHECK_THROWS_AS(make_geometry(4, 4, 4, 0, 4, 2, 2, 2), DegenerateInputError);
  CHECK_THROWS_AS(make_geometry(4, 4, 4, 1, 1, 1, 65, 1), DegenerateInputError);
  CHECK_THROWS_AS(encode_rp_csc(worked_a(), worked_geometry(), 1, 0), BoundsError);
  CHECK_THROWS_AS(encode_cp_csr(worked_b(), worked_geometry(), 0, 3), BoundsError);
  CHECK_THROWS_AS(encode_rp_csc(worked_a(), make_geometry(5, 4, 4, 2, 4, 2, 2, 2), 0, 0), DimensionError);
}

TEST_CASE("validate catches corrupted streams", "[encoding]") {
  const auto g = worked_geometry();
  RpCscBlock blk = encode_rp_csc(worked_a(), g, 0, 0);
  CHECK_NOTHROW(validate(blk, g));

  RpCscBlock bad_bitmap = blk;
  bad_bitmap.group_bitmap[0] = 0;
  CHECK_THROWS_AS(validate(bad_bitmap, g), MalformedBlockError);

  RpCscBlock bad_len = blk;
  bad_len.col_len[0][0] = 2;
  CHECK_THROWS_AS(validate(bad_len, g), MalformedBlockError);

  RpCscBlock bad_row = blk;
  bad_row.row_idx[0][1] = 2;  // beyond M_t
  CHECK_THROWS_AS(validate(bad_row, g), MalformedBlockError);

  CpCsrBlock b = encode_cp_csr(worked_b(), g, 0, 0);
  b.row_idx = {0, 2, 1};
  CHECK_THROWS_AS(validate(b, g), MalformedBlockError);
}

TEST_CASE("decode inverts encode on random ragged blocks", "[encoding]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const Index m = 1 + rng() % 40, k = 1 + rng() % 40, n = 1 + rng() % 40;
    const Index ga = 1 + rng() % 5, gb = 1 + rng() % 5;
    const TilingGeometry g = make_geometry(m, k, n, 1 + rng() % 9, 1 + rng() % 12, 1 + rng() % 9, ga, gb);
    const auto ta = oracle::random_matrix(m, k, rng() % (m * k / 3 + 2), rng, trial % 2 == 0);
    const auto tb = oracle::random_matrix(k, n, rng() % (k * n / 3 + 2), rng, trial % 2 == 1);
    const CscMatrix a = to_csc(ta);
    const CsrMatrix b = to_csr(tb);
    for (Index br = 0; br < g.blocks_m; ++br) {
      for (Index bk = 0; bk < g.blocks_k; ++bk) {
        const auto blk = encode_rp_csc(a, g, br, bk);
        CHECK_NOTHROW(validate(blk, g));
        const Index r0 = g.row_origin(br), c0 = g.depth_origin(bk);
        CHECK(decode_rp_csc(blk, g).entries ==
              window(ta, r0, std::min(m, r0 + g.block_rows()), c0, std::min(k, c0 + g.tile_k)).entries);
      }
    }
    for (Index bk = 0; bk < g.blocks_k; ++bk) {
      for (Index bc = 0; bc < g.blocks_n; ++bc) {
        const auto blk = encode_cp_csr(b, g, bk, bc);
        CHECK_NOTHROW(validate(blk, g));
        const Index r0 = g.depth_origin(bk), c0 = g.col_origin(bc);
        CHECK(decode_cp_csr(blk, g).entries ==
              window(tb, r0, std::min(k, r0 + g.tile_k), c0, std::min(n, c0 + g.block_cols())).entries);
      }
    }
  }
}

TEST_CASE("block dump lists every stream", "[encoding]") {
  std::ostringstream out;
  dump(out, encode_rp_csc(worked_a(), worked_geometry(), 0, 0));
  const std::string s = out.str();
  CHECK_THAT(s, Catch::Matchers::ContainsSubstring("col_idx=0,1,2"));
  CHECK_THAT(s, Catch::Matchers::ContainsSubstring("group0.value=5,7"));
  CHECK_THAT(s, Catch::Matchers::ContainsSubstring("group1.row_idx=0"));
}
