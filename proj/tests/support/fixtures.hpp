// tests/support/fixtures.hpp

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

// Synthetic data with planted geometry shared between the unit and
// acceptance suites.

#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "emoreg/common.hpp"
#include "emoreg/synthgen.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg_test {

/// Embeddings where every target-emotion cluster is a Neutral cluster moved
/// by a per-cluster scalar step along one fixed unit direction per target.
/// By construction the direction-vector matrix of each target varies mostly
/// along that direction, so it must surface as the top PCA component, and
/// the Neutral-to-target transition has a known ground truth.
struct PlantedDirectionData {
  emoreg::EmbeddingSet set;
  std::map<emoreg::EmotionLabel, std::vector<double>> directions;
  std::size_t clusters = 0;
};

struct PlantedDirectionConfig {
  std::size_t dim = 16;
  std::size_t clusters = 4;
  std::size_t samples_per_emotion = 200;
  double step_min = 3.0;   // per-cluster displacement along the direction
  double step_max = 9.0;
  double center_jitter_norm = 0.3;  // Neutral cluster scatter around origin
  double stddev = 0.1;              // per-coordinate sample noise
  std::uint64_t seed = 11;
};

inline PlantedDirectionData make_planted_direction_set(
    const PlantedDirectionConfig& cfg = {}) {
  using namespace emoreg;
  Rng rng(cfg.seed);
  PlantedDirectionData out;
  out.clusters = cfg.clusters;

  // Neutral cluster centers: small scatter around the origin.
  Matrix neutral_centers(cfg.clusters, cfg.dim);
  const double jitter_coord =
      cfg.center_jitter_norm / std::sqrt(static_cast<double>(cfg.dim));
  for (auto& v : neutral_centers.data) v = jitter_coord * rng.normal();

  std::map<EmotionLabel, Matrix> centers;
  centers.emplace(EmotionLabel::Neutral, neutral_centers);
  for (EmotionLabel target : kTargetEmotions) {
    std::vector<double> u = detail::unit_vector(rng, cfg.dim);
    Matrix shifted = neutral_centers;
    for (std::size_t k = 0; k < cfg.clusters; ++k) {
      const double step =
          cfg.clusters == 1
              ? cfg.step_min
              : cfg.step_min + (cfg.step_max - cfg.step_min) *
                                   static_cast<double>(k) /
                                   static_cast<double>(cfg.clusters - 1);
      for (std::size_t d = 0; d < cfg.dim; ++d)
        shifted.at(k, d) += step * u[d];
    }
    centers.emplace(target, std::move(shifted));
    out.directions.emplace(target, std::move(u));
  }

  const std::size_t n_total = cfg.samples_per_emotion * kAllEmotions.size();
  out.set.embeddings = Matrix(n_total, cfg.dim);
  out.set.labels.reserve(n_total);
  std::size_t row = 0;
  for (EmotionLabel e : kAllEmotions) {
    const Matrix& c = centers.at(e);
    for (std::size_t s = 0; s < cfg.samples_per_emotion; ++s) {
      const std::size_t k = s % cfg.clusters;
      double* dst = out.set.embeddings.row(row++);
      for (std::size_t d = 0; d < cfg.dim; ++d)
        dst[d] = c.at(k, d) + cfg.stddev * rng.normal();
      out.set.labels.push_back(e);
    }
  }
  return out;
}

inline std::vector<double> label_centroid(const emoreg::EmbeddingSet& set,
                                          emoreg::EmotionLabel label) {
  std::vector<double> mean(set.dim(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.labels[i] != label) continue;
    for (std::size_t j = 0; j < set.dim(); ++j)
      mean[j] += set.embeddings.at(i, j);
    ++count;
  }
  for (double& v : mean) v /= static_cast<double>(count);
  return mean;
}

inline double cosine(const std::vector<double>& a,
                     const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace emoreg_test
