// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "fmip/graph.hpp"

namespace fmip {

/// Absolute primal gap |OBJ - BKS|.
inline double metrics_gap(double obj, double bks) {
  if (!std::isfinite(obj) || !std::isfinite(bks))
    throw std::invalid_argument("metrics_gap: inputs must be finite");
  return std::abs(obj - bks);
}

/// Percent improvement (gap_a - gap_b)/gap_a * 100; undefined when gap_a = 0.
inline std::optional<double> metrics_imp(double gap_a, double gap_b) {
  if (!std::isfinite(gap_a) || !std::isfinite(gap_b))
    throw std::invalid_argument("metrics_imp: inputs must be finite");
  if (gap_a == 0.0) return std::nullopt;  // reported as "n/a"
  return (gap_a - gap_b) / gap_a * 100.0;
}

/// Mean over integer variables of -log p_i(label_i).
inline double metrics_cross_entropy(const Mat& marginals, const VecI& label) {
  if (marginals.rows() != label.size())
    throw std::invalid_argument("metrics_cross_entropy: label length mismatch");
  if (label.size() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < label.size(); ++i) {
    if (label[i] < 0 || label[i] >= marginals.cols())
      throw std::invalid_argument("metrics_cross_entropy: label outside marginal support");
    double p = marginals(i, label[i]);
    if (p < 1e-12) {
      std::cerr << "[fmip] warning: zero probability on label, clamped to 1e-12\n";
      p = 1e-12;
    }
    total -= std::log(p);
  }
  return total / static_cast<double>(label.size());
}

}  // namespace fmip
