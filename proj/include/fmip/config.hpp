// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fmip/downstream.hpp"
#include "fmip/guidance.hpp"
#include "fmip/model.hpp"

namespace fmip {

struct TrainConfig {
  int epochs = 300;
  double learning_rate = 2e-4;
  double weight_decay = 1e-4;
  std::string lr_schedule = "cosine-decay";
  int batch_size = 0;  // 0 = auto: double until the memory probe fails
  double omega = 1.0;
  std::uint64_t seed = 0;
  std::size_t memory_budget_bytes = 512ull << 20;  // cap for the auto-batch probe
};

struct BackendConfig {
  std::string kind = "bnb";  // bnb | external
  std::string command;       // template for the external backend
  double gap_tol = 1e-6;
};

/// Flat key-value config with [model] [train] [guidance] [nd] [ps] [pmvb]
/// [apollo] [backend] sections.
struct HarnessConfig {
  ModelConfig model;
  TrainConfig train;
  GuidanceConfig guidance;
  StrategyConfig strategies;
  BackendConfig backend;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// section -> key -> value
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.resize(comment);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    cfg[section][detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return cfg;
}

namespace detail {

template <typename T>
T config_get(const ConfigMap& cfg, const std::string& section, const std::string& key, T fallback) {
  const auto sit = cfg.find(section);
  if (sit == cfg.end()) return fallback;
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return fallback;
  std::istringstream is(kit->second);
  T out;
  if constexpr (std::is_same_v<T, std::string>) {
    out = kit->second;
  } else if constexpr (std::is_same_v<T, bool>) {
    out = kit->second == "true" || kit->second == "1" || kit->second == "on";
  } else {
    if (!(is >> out))
      throw std::runtime_error("config [" + section + "] " + key + ": cannot parse '" +
                               kit->second + "'");
  }
  return out;
}

}  // namespace detail

inline HarnessConfig harness_config_from_map(const ConfigMap& m) {
  HarnessConfig h;
  h.model.layers = detail::config_get(m, "model", "layers", h.model.layers);
  h.model.hidden = detail::config_get(m, "model", "hidden", h.model.hidden);
  h.model.int_categories = detail::config_get(m, "model", "int_categories", h.model.int_categories);
  h.model.normalize = detail::config_get(m, "model", "normalize", h.model.normalize);

  h.train.epochs = detail::config_get(m, "train", "epochs", h.train.epochs);
  h.train.learning_rate = detail::config_get(m, "train", "learning_rate", h.train.learning_rate);
  h.train.weight_decay = detail::config_get(m, "train", "weight_decay", h.train.weight_decay);
  h.train.lr_schedule = detail::config_get(m, "train", "lr_schedule", h.train.lr_schedule);
  h.train.batch_size = detail::config_get(m, "train", "batch_size", h.train.batch_size);
  h.train.omega = detail::config_get(m, "train", "omega", h.train.omega);
  h.train.seed = detail::config_get<std::uint64_t>(m, "train", "seed", h.train.seed);

  h.guidance.gamma = detail::config_get(m, "guidance", "gamma", h.guidance.gamma);
  h.guidance.rho = detail::config_get(m, "guidance", "rho", h.guidance.rho);
  h.guidance.tau = detail::config_get(m, "guidance", "tau", h.guidance.tau);
  h.guidance.n_samples = detail::config_get(m, "guidance", "n_samples", h.guidance.n_samples);
  h.guidance.n_iter = detail::config_get(m, "guidance", "n_iter", h.guidance.n_iter);
  h.guidance.enabled = detail::config_get(m, "guidance", "enabled", h.guidance.enabled);

  h.strategies.nd.num_candidates =
      detail::config_get(m, "nd", "num_candidates", h.strategies.nd.num_candidates);
  h.strategies.nd.fix_fraction =
      detail::config_get(m, "nd", "fix_fraction", h.strategies.nd.fix_fraction);

  h.strategies.ps.k0 = detail::config_get(m, "ps", "k0", h.strategies.ps.k0);
  h.strategies.ps.k1 = detail::config_get(m, "ps", "k1", h.strategies.ps.k1);
  h.strategies.ps.delta = detail::config_get(m, "ps", "delta", h.strategies.ps.delta);

  h.strategies.pmvb.conf = detail::config_get(m, "pmvb", "conf", h.strategies.pmvb.conf);
  h.strategies.pmvb.threshold =
      detail::config_get(m, "pmvb", "threshold", h.strategies.pmvb.threshold);

  h.strategies.apollo.iterations =
      detail::config_get(m, "apollo", "iterations", h.strategies.apollo.iterations);
  PsConfig aps;
  aps.k0 = detail::config_get(m, "apollo", "k0", h.strategies.ps.k0);
  aps.k1 = detail::config_get(m, "apollo", "k1", h.strategies.ps.k1);
  aps.delta = detail::config_get(m, "apollo", "delta", h.strategies.ps.delta);
  h.strategies.apollo.ps = {aps};

  h.backend.kind = detail::config_get<std::string>(m, "backend", "kind", h.backend.kind);
  h.backend.command = detail::config_get<std::string>(m, "backend", "command", h.backend.command);
  h.backend.gap_tol = detail::config_get(m, "backend", "gap_tol", h.backend.gap_tol);
  return h;
}

inline HarnessConfig load_harness_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return harness_config_from_map(parse_config_text(os.str()));
}

/// Parses a Table-4 style bracket list "[k0, k1, delta, K]" into Apollo params.
inline ApolloConfig apollo_from_bracket(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != '[' && c != ']' && c != ',') s += c;
    else s += ' ';
  std::istringstream is(s);
  PsConfig ps;
  ApolloConfig cfg;
  if (!(is >> ps.k0 >> ps.k1 >> ps.delta >> cfg.iterations))
    throw std::runtime_error("apollo params: expected [k0, k1, delta, iterations]");
  cfg.ps = {ps};
  return cfg;
}

/// Parses "[K_nd, alpha]" into Neural Diving params.
inline NdConfig nd_from_bracket(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != '[' && c != ']' && c != ',') s += c;
    else s += ' ';
  std::istringstream is(s);
  NdConfig cfg;
  if (!(is >> cfg.num_candidates >> cfg.fix_fraction))
    throw std::runtime_error("nd params: expected [num_candidates, fix_fraction]");
  return cfg;
}

}  // namespace fmip
