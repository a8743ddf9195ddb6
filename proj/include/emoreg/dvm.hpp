// emoreg/dvm.hpp

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

// Direction vector modeling.  Training: fit a GMM per emotion, form the
// matrix of all pairwise differences between target and Neutral local means,
// and fit a PCA per target emotion on that matrix.  Inference: project the
// reference-minus-source difference through the target's PCA (transform then
// inverse transform), scale by the intensity, add to the source embedding.
//
// Only Neutral-source transitions are modeled; requests with another source
// are rejected rather than guessed.  The PCA is used centered, so the
// projection is the standard affine one; this matters when the direction
// matrix has a nonzero mean and is stated here deliberately.

#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "emoreg/common.hpp"
#include "emoreg/gmm.hpp"
#include "emoreg/pca.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg {

struct DirectionMatrix {
  EmotionLabel target = EmotionLabel::Angry;
  EmotionLabel source = EmotionLabel::Neutral;
  Matrix rows;  // (K_t * K_s) x D, row k*K_s + j = mu_t[k] - mu_s[j]
};

struct DvmModel {
  std::size_t dim = 0;
  std::size_t n_components = 0;
  std::map<EmotionLabel, PcaModel> pca;  // one per target emotion
  // Per-emotion global mean embeddings (kAllEmotions row order); these back
  // the no-DVM interpolation baseline.
  Matrix global_means;
  std::uint64_t gmm_seed = 0;
  std::size_t gmm_k = 0;
};

struct IntensityRequest {
  std::vector<double> source;     // e_s
  std::vector<double> reference;  // e_r
  EmotionLabel target = EmotionLabel::Angry;
  double intensity = 1.0;  // in [0, 1]
};

/// All transitions from every source local mean to every target local mean,
/// enumerated target-major: row k*K_s + j = mu_target[k] - mu_source[j].
inline DirectionMatrix build_direction_matrix(const GmmModel& gmm_source,
                                              const GmmModel& gmm_target,
                                              EmotionLabel source,
                                              EmotionLabel target) {
  if (source != EmotionLabel::Neutral)
    throw ValidationError(
        "unsupported transition: only Neutral-source direction matrices are "
        "modeled (got source " +
        std::string(to_string(source)) + ")");
  if (target == EmotionLabel::Neutral)
    throw ValidationError("unsupported transition: target must not be Neutral");
  if (gmm_source.dim != gmm_target.dim)
    throw ValidationError("direction matrix: GMM dims differ (" +
                          std::to_string(gmm_source.dim) + " vs " +
                          std::to_string(gmm_target.dim) + ")");
  const std::size_t kt = gmm_target.k, ks = gmm_source.k, d = gmm_source.dim;
  DirectionMatrix dm;
  dm.source = source;
  dm.target = target;
  dm.rows = Matrix(kt * ks, d);
  for (std::size_t k = 0; k < kt; ++k)
    for (std::size_t j = 0; j < ks; ++j) {
      double* out = dm.rows.row(k * ks + j);
      const double* mt = gmm_target.means.row(k);
      const double* ms = gmm_source.means.row(j);
      for (std::size_t c = 0; c < d; ++c) out[c] = mt[c] - ms[c];
    }
  return dm;
}

namespace detail {

inline std::vector<double> label_mean(const EmbeddingSet& set,
                                      EmotionLabel label) {
  std::vector<double> mean(set.dim(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.labels[i] != label) continue;
    const double* row = set.embeddings.row(i);
    for (std::size_t j = 0; j < set.dim(); ++j) mean[j] += row[j];
    ++count;
  }
  if (count == 0)
    throw ValidationError("embedding set has no rows labeled " +
                          std::string(to_string(label)));
  for (double& v : mean) v /= static_cast<double>(count);
  return mean;
}

}  // namespace detail

/// Full training phase: one GMM per emotion (seed offset by the emotion
/// index), Neutral-to-target direction matrices, one PCA per target.
inline DvmModel fit_dvm(const EmbeddingSet& embeddings,
                        const GmmFitConfig& gmm_cfg,
                        std::size_t n_components = 128,
                        std::map<EmotionLabel, GmmModel>* gmms_out = nullptr) {
  gmm_cfg.validate();
  const std::size_t d = embeddings.dim();

  std::map<EmotionLabel, Matrix> by_label;
  for (EmotionLabel e : kAllEmotions) {
    std::size_t count = 0;
    for (auto l : embeddings.labels)
      if (l == e) ++count;
    if (count == 0)
      throw ValidationError("fit_dvm: missing label " +
                            std::string(to_string(e)));
    if (count < gmm_cfg.k)
      throw ValidationError("fit_dvm: label " + std::string(to_string(e)) +
                            " has " + std::to_string(count) +
                            " samples, fewer than k=" +
                            std::to_string(gmm_cfg.k));
    Matrix rows(count, d);
    std::size_t r = 0;
    for (std::size_t i = 0; i < embeddings.size(); ++i)
      if (embeddings.labels[i] == e) {
        const double* src = embeddings.embeddings.row(i);
        std::copy(src, src + d, rows.row(r++));
      }
    by_label.emplace(e, std::move(rows));
  }

  DvmModel model;
  model.dim = d;
  model.n_components = n_components;
  model.gmm_seed = gmm_cfg.seed;
  model.gmm_k = gmm_cfg.k;

  std::map<EmotionLabel, GmmModel> gmms;
  std::size_t emotion_index = 0;
  for (EmotionLabel e : kAllEmotions) {
    GmmFitConfig cfg = gmm_cfg;
    cfg.seed = gmm_cfg.seed + emotion_index++;
    gmms.emplace(e, fit_gmm(by_label.at(e), cfg));
  }

  model.global_means = Matrix(kAllEmotions.size(), d);
  for (std::size_t i = 0; i < kAllEmotions.size(); ++i) {
    const auto mean = detail::label_mean(embeddings, kAllEmotions[i]);
    std::copy(mean.begin(), mean.end(), model.global_means.row(i));
  }

  for (EmotionLabel target : kTargetEmotions) {
    DirectionMatrix dm =
        build_direction_matrix(gmms.at(EmotionLabel::Neutral),
                               gmms.at(target), EmotionLabel::Neutral, target);
    model.pca.emplace(target, fit_pca(dm.rows, n_components));
  }
  if (gmms_out) *gmms_out = std::move(gmms);
  return model;
}

namespace detail {

inline void validate_request(const IntensityRequest& req, std::size_t dim) {
  if (req.target == EmotionLabel::Neutral)
    throw ValidationError("intensity request: target must not be Neutral");
  if (!(req.intensity >= 0.0 && req.intensity <= 1.0))
    throw ValidationError("intensity " + std::to_string(req.intensity) +
                          " outside [0, 1]");
  if (req.source.size() != dim || req.reference.size() != dim)
    throw ValidationError("intensity request: vector dims (" +
                          std::to_string(req.source.size()) + ", " +
                          std::to_string(req.reference.size()) +
                          ") do not match model dim " + std::to_string(dim));
}

}  // namespace detail

/// e_d = PCA^-1(PCA(e_r - e_s)) through the target emotion's PCA;
/// e_ir = e_s + i * e_d.  i == 0 returns e_s bit-exactly.
inline std::vector<double> regularize(const DvmModel& model,
                                      const IntensityRequest& req) {
  detail::validate_request(req, model.dim);
  if (req.intensity == 0.0) return req.source;
  const PcaModel& pca = model.pca.at(req.target);
  std::vector<double> diff(model.dim);
  for (std::size_t j = 0; j < model.dim; ++j)
    diff[j] = req.reference[j] - req.source[j];
  const std::vector<double> e_d = pca_inverse(pca, pca_transform(pca, diff));
  std::vector<double> e_ir(model.dim);
  for (std::size_t j = 0; j < model.dim; ++j)
    e_ir[j] = req.source[j] + req.intensity * e_d[j];
  return e_ir;
}

/// No-DVM interpolation baseline from precomputed global means:
/// e_s + i * (mean_target - mean_neutral).
inline std::vector<double> regularize_global_from_means(
    std::span<const double> target_mean, std::span<const double> neutral_mean,
    const IntensityRequest& req) {
  detail::validate_request(req, req.source.size());
  if (target_mean.size() != req.source.size() ||
      neutral_mean.size() != req.source.size())
    throw ValidationError("global baseline: mean dims do not match request");
  if (req.intensity == 0.0) return req.source;
  std::vector<double> out(req.source.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = req.source[j] +
             req.intensity * (target_mean[j] - neutral_mean[j]);
  return out;
}

/// No-DVM interpolation baseline computed from a labeled embedding set.
inline std::vector<double> regularize_global(const EmbeddingSet& embeddings,
                                             const IntensityRequest& req) {
  detail::validate_request(req, embeddings.dim());
  const auto target_mean = detail::label_mean(embeddings, req.target);
  const auto neutral_mean =
      detail::label_mean(embeddings, EmotionLabel::Neutral);
  return regularize_global_from_means(target_mean, neutral_mean, req);
}

// Manifest kind "dvm": global means matrix plus one nested PCA manifest per
// target emotion, referenced relative to the dvm manifest.

inline void save_dvm(const DvmModel& model,
                     const std::filesystem::path& manifest_path) {
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  ModelManifest m;
  m.kind = "dvm";
  m.metadata["dim"] = model.dim;
  m.metadata["n_components"] = model.n_components;
  m.metadata["gmm_k"] = model.gmm_k;
  m.metadata["gmm_seed"] = model.gmm_seed;
  nlohmann::json nested = nlohmann::json::object();
  for (const auto& [target, pca] : model.pca) {
    const std::string rel =
        stem + "." + std::string(to_string(target)) + ".pca.json";
    save_pca(pca, dir / rel);
    nested[to_string(target)] = rel;
  }
  m.metadata["pca_manifests"] = nested;
  write_matrix(model.global_means, dir / (stem + ".global_means.emo1"));
  m.matrix_files["global_means"] = stem + ".global_means.emo1";
  write_manifest(m, manifest_path);
}

inline DvmModel load_dvm(const std::filesystem::path& manifest_path) {
  ModelManifest m = read_manifest(manifest_path);
  if (m.kind != "dvm")
    throw ValidationError(manifest_path.string() + " is a \"" + m.kind +
                          "\" manifest, expected dvm");
  const auto dir = manifest_path.parent_path();
  DvmModel model;
  model.dim = m.metadata.at("dim").get<std::size_t>();
  model.n_components = m.metadata.at("n_components").get<std::size_t>();
  model.gmm_k = m.metadata.at("gmm_k").get<std::size_t>();
  model.gmm_seed = m.metadata.at("gmm_seed").get<std::uint64_t>();
  model.global_means = read_matrix(dir / m.matrix_files.at("global_means"));
  if (model.global_means.rows != kAllEmotions.size() ||
      model.global_means.cols != model.dim)
    throw ValidationError("dvm manifest " + manifest_path.string() +
                          ": global means shape mismatch");
  const auto& nested = m.metadata.at("pca_manifests");
  for (EmotionLabel target : kTargetEmotions) {
    const std::string key = to_string(target);
    if (!nested.contains(key))
      throw ValidationError("dvm manifest " + manifest_path.string() +
                            " is missing the PCA manifest for " + key);
    PcaModel pca = load_pca(dir / nested.at(key).get<std::string>());
    if (pca.dim != model.dim)
      throw ValidationError("dvm manifest " + manifest_path.string() +
                            ": nested PCA dim mismatch for " + key);
    model.pca.emplace(target, std::move(pca));
  }
  return model;
}

/// Row of the model's global-means matrix for a label.
inline std::span<const double> global_mean_row(const DvmModel& model,
                                               EmotionLabel label) {
  const std::size_t idx =
      static_cast<std::size_t>(static_cast<int>(label));
  return {model.global_means.row(idx), model.dim};
}

}  // namespace emoreg
