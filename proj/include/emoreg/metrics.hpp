// emoreg/metrics.hpp

// Copyright 2026  The emoreg authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Objective evaluation: cosine emotion similarity and monotonicity of the
// similarity-vs-intensity sweep.  At desk scale the anchor is a synthetic
// target-emotion centroid rather than a trained classifier's embedding; the
// metric's form (cosine against a target reference) is unchanged.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoreg/common.hpp"
#include "emoreg/dvm.hpp"

namespace emoreg {

inline double cosine_similarity(std::span<const double> a,
                                std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("cosine_similarity: dims differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw ValidationError("cosine similarity undefined for a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct SpearmanResult {
  double rho = 0.0;
  bool degenerate = false;  // constant input on either side (or n < 2)
};

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Spearman rank correlation with average ranks for ties.  Tie-free inputs
/// go through the exact rank-difference formula, so perfectly concordant
/// sequences give 1.0 exactly.
inline SpearmanResult spearman(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ValidationError("spearman: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return {0.0, true};
  const auto rx = detail::average_ranks(x);
  const auto ry = detail::average_ranks(y);
  const auto constant = [](const std::vector<double>& r) {
    return std::all_of(r.begin(), r.end(),
                       [&](double v) { return v == r.front(); });
  };
  if (constant(rx) || constant(ry)) return {0.0, true};

  const auto has_ties = [n](const std::vector<double>& r) {
    for (double v : r)
      if (v != std::floor(v)) return true;
    std::vector<double> sorted(r);
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  };
  if (!has_ties(rx) && !has_ties(ry)) {
    double d_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = rx[i] - ry[i];
      d_sq += d * d;
    }
    const double nn = static_cast<double>(n);
    return {1.0 - 6.0 * d_sq / (nn * (nn * nn - 1.0)), false};
  }
  // Pearson on ranks
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  return {cov / std::sqrt(vx * vy), false};
}

struct MonotonicityReport {
  std::vector<double> grid;
  std::vector<double> similarities;
  double spearman = 0.0;
  bool monotone = false;
  bool degenerate = false;
};

inline constexpr double kMonotoneSlack = 1e-9;

/// Similarity of regularize(e_s, e_r, target, i) against the anchor for each
/// intensity on the grid.  Monotone means non-decreasing within 1e-9 slack.
inline MonotonicityReport intensity_sweep(const DvmModel& model,
                                          std::span<const double> e_s,
                                          std::span<const double> e_r,
                                          EmotionLabel target,
                                          const std::vector<double>& grid,
                                          std::span<const double> anchor) {
  if (grid.empty()) throw ValidationError("intensity sweep: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0))
      throw ValidationError("intensity sweep: grid value outside [0, 1]");
    if (i > 0 && grid[i] < grid[i - 1])
      throw ValidationError("intensity sweep: grid must be sorted ascending");
  }
  MonotonicityReport report;
  report.grid = grid;
  IntensityRequest req;
  req.source.assign(e_s.begin(), e_s.end());
  req.reference.assign(e_r.begin(), e_r.end());
  req.target = target;
  // A zero reference-minus-source direction requests no transition at all;
  // the sweep is constant by definition.  (The affine PCA projection of a
  // zero vector need not be zero, so this is decided here, not left to
  // regularize.)
  const bool zero_direction =
      std::equal(e_s.begin(), e_s.end(), e_r.begin(), e_r.end());
  if (zero_direction) {
    const double sim = cosine_similarity(e_s, anchor);
    report.similarities.assign(grid.size(), sim);
  } else {
    for (double i : grid) {
      req.intensity = i;
      const auto e_ir = regularize(model, req);
      report.similarities.push_back(cosine_similarity(e_ir, anchor));
    }
  }
  const auto sp = spearman(report.grid, report.similarities);
  report.spearman = sp.rho;
  report.degenerate = sp.degenerate;
  report.monotone = true;
  for (std::size_t i = 1; i < report.similarities.size(); ++i)
    if (report.similarities[i] < report.similarities[i - 1] - kMonotoneSlack)
      report.monotone = false;
  return report;
}

inline nlohmann::json to_json(const MonotonicityReport& report) {
  nlohmann::json j;
  j["grid"] = report.grid;
  j["similarities"] = report.similarities;
  j["spearman"] = report.spearman;
  j["monotone"] = report.monotone;
  j["degenerate"] = report.degenerate;
  return j;
}

}  // namespace emoreg
