// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fmip/backend.hpp"
#include "fmip/milp.hpp"
#include "fmip/rng.hpp"

namespace fmip {

enum class Family { kSetCover, kIndepSet, kCombAuction };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::kSetCover: return "set_cover";
    case Family::kIndepSet: return "indep_set";
    case Family::kCombAuction: return "comb_auction";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  if (s == "set_cover") return Family::kSetCover;
  if (s == "indep_set") return Family::kIndepSet;
  if (s == "comb_auction") return Family::kCombAuction;
  throw std::invalid_argument("unknown family '" + s + "'");
}

struct GenSpec {
  Family family = Family::kIndepSet;
  // set_cover
  int rows = 20;
  int cols = 40;
  double density = 0.2;
  // indep_set
  int nodes = 20;
  double edge_prob = 0.25;
  // comb_auction
  int items = 10;
  int bids = 20;
  std::uint64_t seed = 0;
};

struct LabeledInstance {
  MilpInstance instance;
  Assignment label;
  double label_objective = 0.0;
  SolveStatus solve_status = SolveStatus::kError;
};

namespace detail {

inline void check_positive(int v, const char* name) {
  if (v <= 0) throw std::invalid_argument(std::string("GenSpec: ") + name + " must be positive");
}

inline void check_unit_interval(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0))
    throw std::invalid_argument(std::string("GenSpec: ") + name + " must lie in (0,1)");
}

inline MilpInstance gen_set_cover(const GenSpec& spec) {
  check_positive(spec.rows, "rows");
  check_positive(spec.cols, "cols");
  check_unit_interval(spec.density, "density");
  if (static_cast<double>(spec.cols) * spec.density < 1.0)
    throw std::invalid_argument("GenSpec: set_cover needs cols*density >= 1 so rows are coverable");
  Rng rng(spec.seed);
  MilpInstance inst;
  inst.num_vars = spec.cols;
  inst.num_cons = spec.rows;
  inst.num_int = spec.cols;
  inst.int_bound = 1;
  inst.obj.resize(spec.cols);
  for (int j = 0; j < spec.cols; ++j) inst.obj[j] = 1.0 + static_cast<double>(rng.below(100));
  inst.rhs = Vec::Constant(spec.rows, -1.0);  // sum_{j covers i} x_j >= 1  stored negated
  inst.lower = Vec::Zero(spec.cols);
  inst.upper = Vec::Ones(spec.cols);
  std::vector<std::vector<char>> covers(spec.rows, std::vector<char>(spec.cols, 0));
  for (int i = 0; i < spec.rows; ++i)
    for (int j = 0; j < spec.cols; ++j)
      if (rng.uniform() < spec.density) covers[i][j] = 1;
  // guarantee coverability of every row
  for (int i = 0; i < spec.rows; ++i) {
    bool any = false;
    for (int j = 0; j < spec.cols; ++j) any = any || covers[i][j];
    if (!any) covers[i][static_cast<int>(rng.below(spec.cols))] = 1;
  }
  for (int i = 0; i < spec.rows; ++i)
    for (int j = 0; j < spec.cols; ++j)
      if (covers[i][j]) inst.con_matrix.push_back({i, j, -1.0});
  std::ostringstream name;
  name << "sc_" << spec.rows << "x" << spec.cols << "_s" << spec.seed;
  inst.name = name.str();
  validate(inst);
  return inst;
}

inline MilpInstance gen_indep_set(const GenSpec& spec) {
  check_positive(spec.nodes, "nodes");
  check_unit_interval(spec.edge_prob, "edge_prob");
  Rng rng(spec.seed);
  MilpInstance inst;
  inst.num_vars = spec.nodes;
  inst.num_int = spec.nodes;
  inst.int_bound = 1;
  inst.obj = Vec::Constant(spec.nodes, -1.0);  // max sum x stored negated
  inst.lower = Vec::Zero(spec.nodes);
  inst.upper = Vec::Ones(spec.nodes);
  int row = 0;
  for (int u = 0; u < spec.nodes; ++u)
    for (int v = u + 1; v < spec.nodes; ++v)
      if (rng.uniform() < spec.edge_prob) {
        inst.con_matrix.push_back({row, u, 1.0});
        inst.con_matrix.push_back({row, v, 1.0});
        ++row;
      }
  inst.num_cons = row;
  inst.rhs = Vec::Ones(row);
  std::ostringstream name;
  name << "mis_" << spec.nodes << "_s" << spec.seed;
  inst.name = name.str();
  validate(inst);
  return inst;
}

inline MilpInstance gen_comb_auction(const GenSpec& spec) {
  check_positive(spec.items, "items");
  check_positive(spec.bids, "bids");
  Rng rng(spec.seed);
  MilpInstance inst;
  inst.num_vars = spec.bids;
  inst.num_cons = spec.items;
  inst.num_int = spec.bids;
  inst.int_bound = 1;
  inst.obj.resize(spec.bids);
  inst.lower = Vec::Zero(spec.bids);
  inst.upper = Vec::Ones(spec.bids);
  inst.rhs = Vec::Ones(spec.items);
  for (int b = 0; b < spec.bids; ++b) {
    const int bundle = 1 + static_cast<int>(rng.below(std::max(1, spec.items / 2)));
    std::vector<int> pool(spec.items);
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < bundle; ++k) {
      const int pick = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.items - k)));
      std::swap(pool[k], pool[pick]);
      inst.con_matrix.push_back({pool[k], b, 1.0});
    }
    // price grows with bundle size
    inst.obj[b] = -(static_cast<double>(bundle) * (1.0 + static_cast<double>(rng.below(10))));
  }
  std::sort(inst.con_matrix.begin(), inst.con_matrix.end(), [](const Coef& a, const Coef& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::ostringstream name;
  name << "ca_" << spec.items << "x" << spec.bids << "_s" << spec.seed;
  inst.name = name.str();
  validate(inst);
  return inst;
}

}  // namespace detail

/// Deterministic generation: the same spec always yields the same instance.
inline MilpInstance generate(const GenSpec& spec) {
  switch (spec.family) {
    case Family::kSetCover: return detail::gen_set_cover(spec);
    case Family::kIndepSet: return detail::gen_indep_set(spec);
    case Family::kCombAuction: return detail::gen_comb_auction(spec);
  }
  throw std::invalid_argument("GenSpec: bad family");
}

// Relaxes a seeded random fraction of variables to continuous in [0,1] and
// re-sorts the integer block first. `perm_out`, when given, receives the
// old-index -> new-index map so assignments can follow the reordering.
inline MilpInstance make_mixed(const GenSpec& spec, double frac_continuous,
                               std::vector<int>* perm_out = nullptr) {
  if (!(frac_continuous >= 0.0 && frac_continuous < 1.0))
    throw std::invalid_argument("make_mixed: frac_continuous must lie in [0,1)");
  MilpInstance inst = generate(spec);
  const int n = inst.num_vars;
  const int relax_count = static_cast<int>(std::ceil(frac_continuous * n));
  if (relax_count == 0) {  // degenerate request: identity
    if (perm_out) {
      perm_out->resize(n);
      std::iota(perm_out->begin(), perm_out->end(), 0);
    }
    return inst;
  }
  Rng rng(Rng(spec.seed).fork().next_u64() ^ 0x6d69786564ULL);  // independent stream

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> relaxed(n, false);
  for (int k = 0; k < relax_count; ++k) relaxed[order[k]] = true;

  // stable partition: integers first, originals keep relative order
  std::vector<int> new_of_old(n);
  std::vector<int> old_of_new;
  old_of_new.reserve(n);
  for (int i = 0; i < n; ++i)
    if (!relaxed[i]) old_of_new.push_back(i);
  for (int i = 0; i < n; ++i)
    if (relaxed[i]) old_of_new.push_back(i);
  for (int pos = 0; pos < n; ++pos) new_of_old[old_of_new[pos]] = pos;

  MilpInstance out = inst;
  out.num_int = n - relax_count;
  for (int pos = 0; pos < n; ++pos) {
    const int old = old_of_new[pos];
    out.obj[pos] = inst.obj[old];
    out.lower[pos] = inst.lower[old];
    out.upper[pos] = inst.upper[old];
  }
  for (Coef& c : out.con_matrix) c.col = new_of_old[c.col];
  out.name = inst.name + "_mix";
  if (perm_out) *perm_out = new_of_old;
  validate(out);
  return out;
}

// Solves each instance with the backend and keeps the best incumbent as the
// label. Instances that produce no incumbent are dropped with a warning.
inline std::vector<LabeledInstance> label_dataset(const std::vector<MilpInstance>& instances,
                                                  const Backend& backend, double time_limit_s) {
  std::vector<LabeledInstance> out;
  for (const MilpInstance& inst : instances) {
    SolveResult res;
    try {
      res = backend.solve(inst, time_limit_s);
    } catch (const std::exception& e) {
      std::cerr << "[fmip] warning: backend failed on '" << inst.name << "': " << e.what() << "\n";
      continue;
    }
    if (!res.assignment) {
      std::cerr << "[fmip] warning: no incumbent for '" << inst.name << "' (status "
                << to_string(res.status) << "), dropped\n";
      continue;
    }
    LabeledInstance li;
    li.instance = inst;
    li.label = *res.assignment;
    li.label_objective = res.objective;
    li.solve_status = res.status;
    if (!evaluate(inst, li.label).feasible) {
      std::cerr << "[fmip] warning: incumbent for '" << inst.name << "' fails re-check, dropped\n";
      continue;
    }
    out.push_back(std::move(li));
  }
  return out;
}

// --- dataset directory layout: instances/*.json, labels/*.json, manifest.json

inline nlohmann::json genspec_to_json(const GenSpec& s) {
  return {{"family", to_string(s.family)}, {"rows", s.rows},           {"cols", s.cols},
          {"density", s.density},          {"nodes", s.nodes},         {"edge_prob", s.edge_prob},
          {"items", s.items},              {"bids", s.bids},           {"seed", s.seed}};
}

inline GenSpec genspec_from_json(const nlohmann::json& j) {
  GenSpec s;
  s.family = family_from_string(j.at("family").get<std::string>());
  s.rows = j.value("rows", s.rows);
  s.cols = j.value("cols", s.cols);
  s.density = j.value("density", s.density);
  s.nodes = j.value("nodes", s.nodes);
  s.edge_prob = j.value("edge_prob", s.edge_prob);
  s.items = j.value("items", s.items);
  s.bids = j.value("bids", s.bids);
  s.seed = j.value("seed", s.seed);
  return s;
}

inline void write_dataset(const std::filesystem::path& dir,
                          const std::vector<LabeledInstance>& data,
                          const std::vector<GenSpec>& specs = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "instances");
  fs::create_directories(dir / "labels");
  nlohmann::json manifest;
  manifest["pairs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string base = data[i].instance.name + ".json";
    {
      std::ofstream f(dir / "instances" / base);
      f << serialize(data[i].instance);
    }
    {
      std::ofstream f(dir / "labels" / base);
      f << serialize_assignment(data[i].label, data[i].label_objective);
    }
    nlohmann::json pair;
    pair["instance"] = "instances/" + base;
    pair["label"] = "labels/" + base;
    if (i < specs.size()) pair["spec"] = genspec_to_json(specs[i]);
    manifest["pairs"].push_back(pair);
  }
  std::ofstream f(dir / "manifest.json");
  f << manifest.dump(2);
}

/// Instances-only layout (labels arrive later via `label`).
inline void write_instances(const std::filesystem::path& dir,
                            const std::vector<MilpInstance>& instances,
                            const std::vector<GenSpec>& specs = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "instances");
  nlohmann::json manifest;
  manifest["pairs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string base = instances[i].name + ".json";
    std::ofstream f(dir / "instances" / base);
    f << serialize(instances[i]);
    nlohmann::json pair;
    pair["instance"] = "instances/" + base;
    if (i < specs.size()) pair["spec"] = genspec_to_json(specs[i]);
    manifest["pairs"].push_back(pair);
  }
  std::ofstream f(dir / "manifest.json");
  f << manifest.dump(2);
}

inline std::vector<MilpInstance> read_instances(const std::filesystem::path& dir,
                                                std::vector<GenSpec>* specs_out = nullptr) {
  namespace fs = std::filesystem;
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw ParseError("manifest.json: cannot open in " + dir.string());
  nlohmann::json manifest = nlohmann::json::parse(mf);
  std::vector<MilpInstance> out;
  for (const auto& pair : manifest.at("pairs")) {
    std::ifstream f(dir / pair.at("instance").get<std::string>());
    std::ostringstream os;
    os << f.rdbuf();
    out.push_back(parse(os.str()));
    if (specs_out && pair.contains("spec")) specs_out->push_back(genspec_from_json(pair.at("spec")));
  }
  return out;
}

inline std::vector<LabeledInstance> read_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw ParseError("manifest.json: cannot open in " + dir.string());
  nlohmann::json manifest = nlohmann::json::parse(mf);
  std::vector<LabeledInstance> out;
  for (const auto& pair : manifest.at("pairs")) {
    LabeledInstance li;
    {
      std::ifstream f(dir / pair.at("instance").get<std::string>());
      std::ostringstream os;
      os << f.rdbuf();
      li.instance = parse(os.str());
    }
    {
      std::ifstream f(dir / pair.at("label").get<std::string>());
      std::ostringstream os;
      os << f.rdbuf();
      double obj = 0.0;
      li.label = parse_assignment(os.str(), &obj);
      li.label_objective = std::isnan(obj) ? evaluate(li.instance, li.label).objective : obj;
    }
    li.solve_status = SolveStatus::kFeasible;
    out.push_back(std::move(li));
  }
  return out;
}

}  // namespace fmip
