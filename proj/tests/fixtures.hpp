// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fmip/milp.hpp"
#include "fmip/rng.hpp"

namespace fmip::testing {

// min 4 x1 + x2  s.t. 3 x1 + x2 <= 1, x1 + x2 <= 2, x1 in {0..5}, 0 <= x2 <= 3.
inline MilpInstance toy_instance() {
  MilpInstance inst;
  inst.name = "toy";
  inst.num_vars = 2;
  inst.num_cons = 2;
  inst.num_int = 1;
  inst.int_bound = 5;
  inst.obj = Vec(2);
  inst.obj << 4.0, 1.0;
  inst.con_matrix = {{0, 0, 3.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  inst.rhs = Vec(2);
  inst.rhs << 1.0, 2.0;
  inst.lower = Vec::Zero(2);
  inst.upper = Vec(2);
  inst.upper << 5.0, 3.0;
  validate(inst);
  return inst;
}

/// Random mixed-integer instance small enough for the brute-force oracle.
inline MilpInstance random_instance(std::uint64_t seed, int max_bin = 12, int max_cont = 3) {
  Rng rng(seed);
  MilpInstance inst;
  const int q = 1 + static_cast<int>(rng.below(max_bin));
  const int nc = static_cast<int>(rng.below(max_cont + 1));
  const int m = 2 + static_cast<int>(rng.below(8));
  inst.name = "rand_" + std::to_string(seed);
  inst.num_vars = q + nc;
  inst.num_cons = m;
  inst.num_int = q;
  inst.int_bound = 1;
  inst.obj.resize(inst.num_vars);
  for (int i = 0; i < inst.num_vars; ++i) inst.obj[i] = rng.uniform() * 10.0 - 5.0;
  inst.lower = Vec::Zero(inst.num_vars);
  inst.upper = Vec::Ones(inst.num_vars);
  for (int i = q; i < inst.num_vars; ++i) inst.upper[i] = 1.0 + rng.uniform() * 4.0;
  inst.rhs.resize(m);
  for (int r = 0; r < m; ++r) {
    int nz = 0;
    for (int j = 0; j < inst.num_vars; ++j) {
      if (rng.uniform() < 0.5) {
        inst.con_matrix.push_back({r, j, std::floor(rng.uniform() * 9.0) - 4.0});
        ++nz;
      }
    }
    if (nz == 0) inst.con_matrix.push_back({r, static_cast<int>(rng.below(inst.num_vars)), 1.0});
    inst.rhs[r] = std::floor(rng.uniform() * 7.0) - 1.0;
  }
  // prune exact-zero coefficients, they are not edges
  std::vector<Coef> kept;
  for (const Coef& c : inst.con_matrix)
    if (c.value != 0.0) kept.push_back(c);
  inst.con_matrix = std::move(kept);
  validate(inst);
  return inst;
}

}  // namespace fmip::testing
