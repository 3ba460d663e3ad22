// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fmip/milp.hpp"

namespace fmip {

using Mat = Eigen::MatrixXd;
using VecI = Eigen::VectorXi;

/// Coefficient edge between a constraint node and a variable node.
struct GraphEdge {
  int con = 0;
  int var = 0;  // index within the variable partition (Ivar or Cvar)
  double coef = 0.0;
};

struct GraphScalers {
  Vec row_scale;      // divisor applied to each constraint row and its rhs
  double obj_scale = 1.0;
};

// Static tripartite encoding: one node per integer variable, continuous
// variable and constraint. Variable features are [w, lb, ub, hlb, hub];
// a constraint node carries its rhs. Bound constraints stay node features
// and never become constraint nodes.
struct TripartiteGraph {
  Mat ivar_feats;   // q x 5
  Mat cvar_feats;   // (n-q) x 5
  Mat con_feats;    // m x 1
  std::vector<GraphEdge> edges_int;
  std::vector<GraphEdge> edges_cont;
  GraphScalers scalers;
};

/// Time-indexed assignment carried through the flow.
struct SolutionState {
  VecI d;    // integer block, entries in {0..K}
  Vec c;     // continuous block
  double t = 0.0;
};

/// TripartiteGraph plus the per-variable state column (6-dim var features).
struct AugmentedGraph {
  Mat ivar_feats;  // q x 6
  Mat cvar_feats;  // (n-q) x 6
  const TripartiteGraph* base = nullptr;
  double t = 0.0;
};

inline TripartiteGraph encode(const MilpInstance& inst, bool normalize = true) {
  const int q = inst.num_int;
  const int nc = inst.num_vars - q;
  TripartiteGraph g;
  g.scalers.row_scale = Vec::Ones(inst.num_cons);
  if (normalize) {
    g.scalers.row_scale = Vec::Zero(inst.num_cons);
    for (const Coef& c : inst.con_matrix)
      g.scalers.row_scale[c.row] = std::max(g.scalers.row_scale[c.row], std::abs(c.value));
    for (int r = 0; r < inst.num_cons; ++r)
      if (g.scalers.row_scale[r] == 0.0) g.scalers.row_scale[r] = 1.0;
    g.scalers.obj_scale = inst.num_vars > 0 ? inst.obj.cwiseAbs().maxCoeff() : 1.0;
    if (g.scalers.obj_scale == 0.0) g.scalers.obj_scale = 1.0;
  }

  const auto feature_row = [&](int i) {
    Eigen::RowVectorXd f(5);
    const bool hlb = std::isfinite(inst.lower[i]);
    const bool hub = std::isfinite(inst.upper[i]);
    f << inst.obj[i] / g.scalers.obj_scale, hlb ? inst.lower[i] : 0.0, hub ? inst.upper[i] : 0.0,
        hlb ? 1.0 : 0.0, hub ? 1.0 : 0.0;
    return f;
  };
  g.ivar_feats.resize(q, 5);
  for (int i = 0; i < q; ++i) g.ivar_feats.row(i) = feature_row(i);
  g.cvar_feats.resize(nc, 5);
  for (int i = 0; i < nc; ++i) g.cvar_feats.row(i) = feature_row(q + i);
  g.con_feats.resize(inst.num_cons, 1);
  for (int r = 0; r < inst.num_cons; ++r) g.con_feats(r, 0) = inst.rhs[r] / g.scalers.row_scale[r];

  for (const Coef& c : inst.con_matrix) {
    if (c.value == 0.0) continue;
    const double w = c.value / g.scalers.row_scale[c.row];
    if (c.col < q)
      g.edges_int.push_back({c.row, c.col, w});
    else
      g.edges_cont.push_back({c.row, c.col - q, w});
  }
  // canonical edge order makes the encoding independent of triple order
  const auto by_coord = [](const GraphEdge& a, const GraphEdge& b) {
    return a.con != b.con ? a.con < b.con : a.var < b.var;
  };
  std::sort(g.edges_int.begin(), g.edges_int.end(), by_coord);
  std::sort(g.edges_cont.begin(), g.edges_cont.end(), by_coord);
  return g;
}

inline AugmentedGraph attach_state(const TripartiteGraph& g, const SolutionState& s) {
  if (s.d.size() != g.ivar_feats.rows() || s.c.size() != g.cvar_feats.rows())
    throw std::invalid_argument("attach_state: state dimensions do not match graph");
  AugmentedGraph a;
  a.base = &g;
  a.t = s.t;
  a.ivar_feats.resize(g.ivar_feats.rows(), 6);
  a.ivar_feats.leftCols(5) = g.ivar_feats;
  for (Eigen::Index i = 0; i < s.d.size(); ++i) a.ivar_feats(i, 5) = static_cast<double>(s.d[i]);
  a.cvar_feats.resize(g.cvar_feats.rows(), 6);
  a.cvar_feats.leftCols(5) = g.cvar_feats;
  a.cvar_feats.col(5) = s.c;
  return a;
}

// Disjoint union of augmented graphs for one network call. Node rows are
// concatenated per partition; edges carry offset indices; `*_item` maps each
// node to its batch item so per-item time rows can be gathered.
struct GraphBatch {
  Mat ivar_x;  // sum(q_b) x 6
  Mat cvar_x;  // sum(nc_b) x 6
  Mat con_x;   // sum(m_b) x 1
  std::vector<GraphEdge> edges_int;   // con/var indices are batch-global
  std::vector<GraphEdge> edges_cont;
  std::vector<int> ivar_item, cvar_item, con_item;
  Vec times;  // one per item
  std::vector<int> ivar_offset, cvar_offset, con_offset;  // per item, plus total at back

  static GraphBatch build(const std::vector<AugmentedGraph>& graphs) {
    GraphBatch b;
    const int n_items = static_cast<int>(graphs.size());
    b.times.resize(n_items);
    int qi = 0, ci = 0, mi = 0;
    b.ivar_offset.resize(n_items + 1);
    b.cvar_offset.resize(n_items + 1);
    b.con_offset.resize(n_items + 1);
    for (int k = 0; k < n_items; ++k) {
      b.ivar_offset[k] = qi;
      b.cvar_offset[k] = ci;
      b.con_offset[k] = mi;
      qi += static_cast<int>(graphs[k].ivar_feats.rows());
      ci += static_cast<int>(graphs[k].cvar_feats.rows());
      mi += static_cast<int>(graphs[k].base->con_feats.rows());
    }
    b.ivar_offset[n_items] = qi;
    b.cvar_offset[n_items] = ci;
    b.con_offset[n_items] = mi;
    b.ivar_x.resize(qi, 6);
    b.cvar_x.resize(ci, 6);
    b.con_x.resize(mi, 1);
    b.ivar_item.resize(qi);
    b.cvar_item.resize(ci);
    b.con_item.resize(mi);
    for (int k = 0; k < n_items; ++k) {
      const AugmentedGraph& g = graphs[k];
      b.times[k] = g.t;
      const int qo = b.ivar_offset[k], co = b.cvar_offset[k], mo = b.con_offset[k];
      b.ivar_x.middleRows(qo, g.ivar_feats.rows()) = g.ivar_feats;
      b.cvar_x.middleRows(co, g.cvar_feats.rows()) = g.cvar_feats;
      b.con_x.middleRows(mo, g.base->con_feats.rows()) = g.base->con_feats;
      for (int i = 0; i < g.ivar_feats.rows(); ++i) b.ivar_item[qo + i] = k;
      for (int i = 0; i < g.cvar_feats.rows(); ++i) b.cvar_item[co + i] = k;
      for (int i = 0; i < g.base->con_feats.rows(); ++i) b.con_item[mo + i] = k;
      for (const GraphEdge& e : g.base->edges_int)
        b.edges_int.push_back({e.con + mo, e.var + qo, e.coef});
      for (const GraphEdge& e : g.base->edges_cont)
        b.edges_cont.push_back({e.con + mo, e.var + co, e.coef});
    }
    return b;
  }
};

}  // namespace fmip
