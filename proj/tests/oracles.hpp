#pragma once

// Reference implementations used only by the tests. They share no code with
// the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "iops/matrix.hpp"
#include "iops/planner.hpp"

namespace oracle {

using iops::Index;

/// Product over coordinate lists, pairing every A entry with every B entry
/// of the same inner index.
inline std::map<std::pair<Index, Index>, double> triplet_product(const iops::TripletMatrix& a,
                                                                 const iops::TripletMatrix& b) {
  std::map<std::pair<Index, Index>, double> c;
  for (const auto& x : a.entries) {
    for (const auto& y : b.entries) {
      if (x.col == y.row) c[{x.row, y.col}] += x.value * y.value;
    }
  }
  return c;
}

/// Number of nonzero products: sum over k of nnz(A[:,k]) * nnz(B[k,:]).
inline std::uint64_t mac_law(const iops::TripletMatrix& a, const iops::TripletMatrix& b) {
  std::map<Index, std::uint64_t> col_count, row_count;
  for (const auto& x : a.entries) ++col_count[x.col];
  for (const auto& y : b.entries) ++row_count[y.row];
  std::uint64_t total = 0;
  for (const auto& [k, c] : col_count) {
    if (auto it = row_count.find(k); it != row_count.end()) total += c * it->second;
  }
  return total;
}

inline Index ceil_div(Index x, Index y) { return (x + y - 1) / y; }

/// Capacity constraints written out directly.
inline bool fits(Index mt, Index kt, Index nt, const iops::HardwareConfig& hw, const iops::WorkloadSpec& wl,
                 bool sdmm) {
  const double rx = hw.reserve_ratio;
  const bool a_ok = double(mt) * double(kt) * wl.density_a < double(hw.buffer_a) * rx;
  const bool b_ok = double(kt) * double(nt) * wl.density_b < double(hw.buffer_b) * rx;
  const bool p_ok = sdmm ? double(mt) * double(nt) < 2.0 * double(hw.buffer_psum) * rx
                         : double(mt) * wl.density_a * double(nt) * wl.density_b * double(kt) <
                               double(hw.buffer_psum) * rx;
  return a_ok && b_ok && p_ok;
}

struct BruteResult {
  double cost = 0.0;
  bool found = false;
};

/// Minimum DRAM cost over every raw tile size (not only the distinct
/// ceiling values), with each strategy's residency condition applied.
inline BruteResult brute_force_plan(const iops::HardwareConfig& hw, const iops::WorkloadSpec& wl, bool sdmm) {
  BruteResult best;
  const Index m_max = ceil_div(wl.m, hw.groups_a), n_max = ceil_div(wl.n, hw.groups_b);
  const double rx = hw.reserve_ratio;
  for (Index mt = 1; mt <= m_max; ++mt) {
    for (Index nt = 1; nt <= n_max; ++nt) {
      for (Index kt = 1; kt <= wl.k; ++kt) {
        if (!fits(mt, kt, nt, hw, wl, sdmm)) continue;
        const double tm = double(ceil_div(wl.m, hw.groups_a * mt));
        const double tn = double(ceil_div(wl.n, hw.groups_b * nt));
        std::vector<double> costs = {wl.storage_a_bits * tn + wl.storage_b_bits * tm};
        if (double(mt) * double(wl.k) * wl.density_a < double(hw.buffer_a) * rx) {
          costs.push_back(wl.storage_b_bits * tm + wl.storage_a_bits);
        }
        if (double(nt) * double(wl.k) * wl.density_b < double(hw.buffer_b) * rx) {
          costs.push_back(wl.storage_a_bits * tn + wl.storage_b_bits);
        }
        const double c = *std::min_element(costs.begin(), costs.end());
        if (!best.found || c < best.cost) best = {c, true};
      }
    }
  }
  return best;
}

/// Uniform random sparse matrix with exactly `nnz` distinct cells, drawn by
/// shuffling the full cell list.
inline iops::TripletMatrix random_matrix(Index rows, Index cols, Index nnz, std::mt19937_64& rng, bool integers) {
  std::vector<Index> cells(rows * cols);
  for (Index i = 0; i < cells.size(); ++i) cells[i] = i;
  std::shuffle(cells.begin(), cells.end(), rng);
  cells.resize(std::min<Index>(nnz, cells.size()));
  std::sort(cells.begin(), cells.end());
  std::uniform_int_distribution<int> ints(-9, 9);
  std::uniform_real_distribution<double> reals(-1.0, 1.0);
  iops::TripletMatrix t{rows, cols, {}};
  for (Index c : cells) {
    double v = 0.0;
    if (integers) {
      do v = ints(rng); while (v == 0.0);
    } else {
      v = reals(rng);
    }
    t.entries.push_back({c / cols, c % cols, v});
  }
  return t;
}

}  // namespace oracle
