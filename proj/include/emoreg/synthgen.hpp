// emoreg/synthgen.hpp

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

// Seeded synthetic corpora: clustered emotion embeddings with known planted
// geometry, and toy Mel utterances built from planted phoneme prototypes.
// Everything is a pure function of its config; identical seeds give
// bit-identical output.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "emoreg/common.hpp"
#include "emoreg/mel.hpp"
#include "emoreg/melproc.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg {

struct SynthConfig {
  std::size_t dim = 256;
  std::size_t clusters_per_emotion = 4;
  std::size_t samples_per_emotion = 500;
  double separation = 6.0;  // distance of non-Neutral cluster centers from origin
  double stddev = 0.5;      // per-coordinate intra-cluster noise
  std::uint64_t seed = 0;

  void validate() const {
    if (dim < 2) throw ValidationError("synth config: dim must be >= 2");
    if (separation <= 0.0)
      throw ValidationError("synth config: separation must be > 0");
    if (stddev <= 0.0)
      throw ValidationError("synth config: stddev must be > 0");
    if (clusters_per_emotion == 0)
      throw ValidationError("synth config: cluster count must be >= 1");
    if (samples_per_emotion < clusters_per_emotion)
      throw ValidationError(
          "synth config: samples per emotion must be >= cluster count");
  }
};

/// Planted generator parameters behind an embedding corpus; tests compare
/// fitted models against these.
struct SynthGroundTruth {
  // Per emotion (kAllEmotions order): unit direction (zero for Neutral) and
  // cluster centers (clusters_per_emotion x dim each).
  std::vector<std::vector<double>> directions;
  std::vector<Matrix> centers;
  std::vector<std::vector<std::size_t>> cluster_sizes;
};

namespace detail {

inline std::vector<double> unit_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm_sq = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm_sq += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (auto& x : v) x *= inv;
  return v;
}

}  // namespace detail

/// Clustered emotion embeddings.  Neutral is anchored at the origin; each
/// other emotion gets a seeded unit direction u_e and cluster centers
/// separation * u_e + jitter, with per-coordinate jitter scaled so the
/// centers sit at distance ~separation from the origin.  Samples are
/// isotropic Gaussians around their center.  Row order: Neutral, Happy,
/// Sad, Angry blocks; clusters in block order within each emotion.
inline EmbeddingSet generate_embeddings(const SynthConfig& cfg,
                                        SynthGroundTruth* truth = nullptr) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t n_total = cfg.samples_per_emotion * kAllEmotions.size();
  EmbeddingSet set;
  set.embeddings = Matrix(n_total, cfg.dim);
  set.labels.reserve(n_total);
  if (truth) {
    truth->directions.clear();
    truth->centers.clear();
    truth->cluster_sizes.clear();
  }

  // Cluster centers scatter around the emotion anchor with norm
  // ~separation/6, small against the anchor distance.
  const double center_jitter =
      cfg.separation / (6.0 * std::sqrt(static_cast<double>(cfg.dim)));

  std::size_t row = 0;
  for (EmotionLabel emotion : kAllEmotions) {
    std::vector<double> direction(cfg.dim, 0.0);
    if (emotion != EmotionLabel::Neutral)
      direction = detail::unit_vector(rng, cfg.dim);

    Matrix centers(cfg.clusters_per_emotion, cfg.dim);
    for (std::size_t k = 0; k < cfg.clusters_per_emotion; ++k)
      for (std::size_t d = 0; d < cfg.dim; ++d)
        centers.at(k, d) =
            cfg.separation * direction[d] + center_jitter * rng.normal();

    // Block split of samples across clusters; the first (S mod C) clusters
    // take one extra sample.
    std::vector<std::size_t> sizes(cfg.clusters_per_emotion,
                                   cfg.samples_per_emotion /
                                       cfg.clusters_per_emotion);
    for (std::size_t k = 0;
         k < cfg.samples_per_emotion % cfg.clusters_per_emotion; ++k)
      ++sizes[k];

    for (std::size_t k = 0; k < cfg.clusters_per_emotion; ++k) {
      for (std::size_t s = 0; s < sizes[k]; ++s) {
        double* out = set.embeddings.row(row++);
        for (std::size_t d = 0; d < cfg.dim; ++d)
          out[d] = centers.at(k, d) + cfg.stddev * rng.normal();
        set.labels.push_back(emotion);
      }
    }

    if (truth) {
      truth->directions.push_back(std::move(direction));
      truth->centers.push_back(std::move(centers));
      truth->cluster_sizes.push_back(std::move(sizes));
    }
  }
  return set;
}

struct MelCorpusConfig {
  std::uint64_t seed = 0;
  std::size_t utterances = 8;
  std::size_t frames_min = 40;
  std::size_t frames_max = 120;
  std::size_t phoneme_inventory = 12;
  double noise_stddev = 0.1;
  std::size_t channels = kMelChannels;

  void validate() const {
    if (frames_min == 0 || frames_max < frames_min)
      throw ValidationError("mel corpus config: empty frame range");
    if (phoneme_inventory == 0)
      throw ValidationError("mel corpus config: inventory must be >= 1");
    if (utterances == 0)
      throw ValidationError("mel corpus config: utterances must be >= 1");
    if (noise_stddev < 0.0)
      throw ValidationError("mel corpus config: noise stddev must be >= 0");
  }
};

inline std::string phoneme_name(std::size_t index) {
  std::string s = std::to_string(index);
  if (s.size() < 2) s.insert(0, "0");
  return "P" + s;
}

/// Planted phoneme prototypes; row p is the prototype for phoneme_name(p).
inline Matrix planted_phoneme_prototypes(const MelCorpusConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Matrix prototypes(cfg.phoneme_inventory, cfg.channels);
  for (auto& v : prototypes.data) v = rng.normal();
  return prototypes;
}

/// Toy Mel corpus: each utterance is a run of contiguous phoneme segments
/// (2..8 frames each), every frame its phoneme prototype plus isotropic
/// noise.  The prototype draw order matches planted_phoneme_prototypes so
/// the planted table is recoverable from the same seed.
inline MelCorpus generate_mel_corpus(const MelCorpusConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Matrix prototypes(cfg.phoneme_inventory, cfg.channels);
  for (auto& v : prototypes.data) v = rng.normal();

  MelCorpus corpus;
  corpus.reserve(cfg.utterances);
  for (std::size_t u = 0; u < cfg.utterances; ++u) {
    const std::size_t frames =
        cfg.frames_min + rng.uniform_index(cfg.frames_max - cfg.frames_min + 1);
    MelSequence mel(frames, cfg.channels);
    PhonemeAlignment align;
    std::size_t t = 0;
    while (t < frames) {
      std::size_t len = 2 + rng.uniform_index(7);  // 2..8
      if (t + len > frames) len = frames - t;
      const std::size_t phoneme = rng.uniform_index(cfg.phoneme_inventory);
      align.segments.push_back({phoneme_name(phoneme), t, t + len});
      for (std::size_t f = t; f < t + len; ++f) {
        double* out = mel.data.row(f);
        const double* proto = prototypes.row(phoneme);
        for (std::size_t c = 0; c < cfg.channels; ++c)
          out[c] = proto[c] + cfg.noise_stddev * rng.normal();
      }
      t += len;
    }
    corpus.emplace_back(std::move(mel), std::move(align));
  }
  return corpus;
}

}  // namespace emoreg
