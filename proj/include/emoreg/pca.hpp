// emoreg/pca.hpp

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

// PCA fit / transform / inverse transform.  Fitting runs an SVD of the
// centered data (better conditioned than eigendecomposing the covariance);
// eigenvalues are squared singular values over N, i.e. the covariance is
// normalized by N, which makes the discarded-eigenvalue reconstruction
// identity exact.

#pragma once

#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emoreg/common.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg {

struct PcaModel {
  std::size_t dim = 0;           // D
  std::size_t n_components = 0;  // d <= D
  std::vector<double> mean;      // D
  Matrix components;             // d x D, orthonormal rows, eigenvalue order
  std::vector<double> eigenvalues;  // d, non-increasing
  double total_variance = 0.0;      // trace of the (1/N) covariance
};

namespace detail {

using EigenRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

}  // namespace detail

/// Fits PCA on data (N x D).  Columns are centered by their mean; principal
/// axes come from a thin SVD of the centered matrix.  Sign convention for
/// determinism: each component is flipped so its largest-|entry| coordinate
/// is positive (ties broken by lowest index).  Rank deficiency is allowed;
/// trailing eigenvalues are ~0.
inline PcaModel fit_pca(const Matrix& data, std::size_t n_components) {
  const std::size_t n = data.rows, d = data.cols;
  if (n < 2) throw ValidationError("fit_pca: need at least 2 samples");
  if (n_components == 0)
    throw ValidationError("fit_pca: n_components must be >= 1");
  if (n_components > std::min(n, d))
    throw ValidationError("fit_pca: n_components " +
                          std::to_string(n_components) + " exceeds min(N=" +
                          std::to_string(n) + ", D=" + std::to_string(d) + ")");
  if (!data.finite()) throw ValidationError("fit_pca: data contains non-finite values");

  detail::EigenRowMajorMap x(data.data.data(), static_cast<Eigen::Index>(n),
                             static_cast<Eigen::Index>(d));
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::MatrixXd& v = svd.matrixV();  // D x min(N, D)
  const Eigen::VectorXd& s = svd.singularValues();

  PcaModel model;
  model.dim = d;
  model.n_components = n_components;
  model.mean.assign(mean.data(), mean.data() + d);
  model.total_variance = centered.squaredNorm() / static_cast<double>(n);
  model.components = Matrix(n_components, d);
  model.eigenvalues.resize(n_components);
  for (std::size_t i = 0; i < n_components; ++i) {
    model.eigenvalues[i] =
        s(static_cast<Eigen::Index>(i)) * s(static_cast<Eigen::Index>(i)) /
        static_cast<double>(n);
    // largest-|entry|-positive sign convention, lowest index on ties
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = std::abs(v(static_cast<Eigen::Index>(j),
                                  static_cast<Eigen::Index>(i)));
      if (a > best) {
        best = a;
        arg = j;
      }
    }
    const double sign = v(static_cast<Eigen::Index>(arg),
                          static_cast<Eigen::Index>(i)) < 0.0
                            ? -1.0
                            : 1.0;
    for (std::size_t j = 0; j < d; ++j)
      model.components.at(i, j) =
          sign * v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  }
  return model;
}

/// z = components * (v - mean)
inline std::vector<double> pca_transform(const PcaModel& model,
                                         std::span<const double> v) {
  if (v.size() != model.dim)
    throw ValidationError("pca_transform: vector dim " +
                          std::to_string(v.size()) + " != model dim " +
                          std::to_string(model.dim));
  std::vector<double> z(model.n_components, 0.0);
  for (std::size_t i = 0; i < model.n_components; ++i) {
    double acc = 0.0;
    const double* row = model.components.row(i);
    for (std::size_t j = 0; j < model.dim; ++j)
      acc += row[j] * (v[j] - model.mean[j]);
    z[i] = acc;
  }
  return z;
}

/// v = mean + components^T * z
inline std::vector<double> pca_inverse(const PcaModel& model,
                                       std::span<const double> z) {
  if (z.size() != model.n_components)
    throw ValidationError("pca_inverse: vector dim " +
                          std::to_string(z.size()) + " != n_components " +
                          std::to_string(model.n_components));
  std::vector<double> v(model.mean.begin(), model.mean.end());
  for (std::size_t i = 0; i < model.n_components; ++i) {
    const double* row = model.components.row(i);
    for (std::size_t j = 0; j < model.dim; ++j) v[j] += row[j] * z[i];
  }
  return v;
}

// Manifest kind "pca": mean (1 x D), components (d x D), eigenvalues (1 x d).

inline void save_pca(const PcaModel& model,
                     const std::filesystem::path& manifest_path) {
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  Matrix mean(1, model.dim);
  for (std::size_t j = 0; j < model.dim; ++j) mean.at(0, j) = model.mean[j];
  Matrix eig(1, model.n_components);
  for (std::size_t i = 0; i < model.n_components; ++i)
    eig.at(0, i) = model.eigenvalues[i];
  write_matrix(mean, dir / (stem + ".mean.emo1"));
  write_matrix(model.components, dir / (stem + ".components.emo1"));
  write_matrix(eig, dir / (stem + ".eigenvalues.emo1"));
  ModelManifest m;
  m.kind = "pca";
  m.metadata["dim"] = model.dim;
  m.metadata["n_components"] = model.n_components;
  m.metadata["total_variance"] = model.total_variance;
  m.matrix_files["mean"] = stem + ".mean.emo1";
  m.matrix_files["components"] = stem + ".components.emo1";
  m.matrix_files["eigenvalues"] = stem + ".eigenvalues.emo1";
  write_manifest(m, manifest_path);
}

inline PcaModel load_pca(const std::filesystem::path& manifest_path) {
  ModelManifest m = read_manifest(manifest_path);
  if (m.kind != "pca")
    throw ValidationError(manifest_path.string() + " is a \"" + m.kind +
                          "\" manifest, expected pca");
  const auto dir = manifest_path.parent_path();
  PcaModel model;
  model.dim = m.metadata.at("dim").get<std::size_t>();
  model.n_components = m.metadata.at("n_components").get<std::size_t>();
  model.total_variance = m.metadata.at("total_variance").get<double>();
  Matrix mean = read_matrix(dir / m.matrix_files.at("mean"));
  model.components = read_matrix(dir / m.matrix_files.at("components"));
  Matrix eig = read_matrix(dir / m.matrix_files.at("eigenvalues"));
  if (mean.cols != model.dim || model.components.rows != model.n_components ||
      model.components.cols != model.dim || eig.cols != model.n_components)
    throw ValidationError("pca manifest " + manifest_path.string() +
                          ": matrix shapes disagree with metadata");
  model.mean = std::move(mean.data);
  model.eigenvalues = std::move(eig.data);
  return model;
}

}  // namespace emoreg
