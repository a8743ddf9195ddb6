// emoreg/gmm.hpp

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

// Diagonal-covariance Gaussian mixtures fitted by EM.  The component means
// are the "local mean vectors" the direction-vector modeling stage consumes.
// Covariances are diagonal: at embedding dimensionality (256) with a few
// hundred samples per emotion, full covariances would be singular.
//
// Determinism: k-means++ seeding from a fixed RNG, single fixed accumulation
// order in both E and M steps, so a fit is a pure function of (data, config).

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "emoreg/common.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg {

struct GmmFitConfig {
  std::size_t k = 64;
  std::size_t max_iters = 200;
  double rel_tol = 1e-6;
  double cov_floor = 1e-6;
  std::uint64_t seed = 0;

  void validate() const {
    if (k == 0) throw ValidationError("gmm config: k must be >= 1");
    if (max_iters == 0) throw ValidationError("gmm config: max_iters must be >= 1");
    if (rel_tol <= 0.0) throw ValidationError("gmm config: rel_tol must be > 0");
    if (cov_floor <= 0.0) throw ValidationError("gmm config: cov_floor must be > 0");
  }
};

struct GmmModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // K, sums to 1
  Matrix means;                 // K x D  (the local mean vectors)
  Matrix diag_covariances;      // K x D, every entry >= cov_floor
  double cov_floor = 1e-6;

  // Mean per-sample log-likelihood after each EM iteration.  A component
  // reseed restarts the trace, so the stored trace is non-decreasing by
  // construction; reseed events are kept alongside.
  std::vector<double> log_likelihood_trace;
  std::size_t iterations_run = 0;
  std::vector<std::size_t> reseed_iterations;
  std::uint64_t seed = 0;

  double final_log_likelihood() const {
    return log_likelihood_trace.empty() ? -std::numeric_limits<double>::infinity()
                                        : log_likelihood_trace.back();
  }
};

namespace detail {

inline double sq_dist(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

// k-means++ seeding over data rows.  The first center is a uniform pick;
// each next center is drawn with probability proportional to the squared
// distance to the nearest already-chosen center.  The cumulative-sum walk
// picks the lowest admissible index, which is also the tie-break rule when
// several points share a distance.
inline std::vector<std::size_t> kmeanspp_indices(const Matrix& data,
                                                 std::size_t k, Rng& rng) {
  const std::size_t n = data.rows, d = data.cols;
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  chosen.push_back(rng.uniform_index(n));
  std::vector<double> dist_sq(n);
  for (std::size_t i = 0; i < n; ++i)
    dist_sq[i] = sq_dist(data.row(i), data.row(chosen[0]), d);
  while (chosen.size() < k) {
    double total = 0.0;
    for (double v : dist_sq) total += v;
    std::size_t pick;
    if (total <= 0.0) {
      // all remaining points coincide with a center; fall back to uniform
      pick = rng.uniform_index(n);
    } else {
      const double target = rng.uniform01() * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += dist_sq[i];
        if (cum > target) {
          pick = i;
          break;
        }
      }
    }
    chosen.push_back(pick);
    for (std::size_t i = 0; i < n; ++i)
      dist_sq[i] = std::min(dist_sq[i], sq_dist(data.row(i), data.row(pick), d));
  }
  return chosen;
}

// log N(x | mu, diag sigma2) given the precomputed sum of log(2 pi sigma2_d).
inline double diag_gaussian_logpdf(const double* x, const double* mu,
                                   const double* var, double log_norm,
                                   std::size_t d) {
  double quad = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = x[j] - mu[j];
    quad += diff * diff / var[j];
  }
  return -0.5 * (log_norm + quad);
}

inline double logsumexp_row(const double* v, std::size_t k) {
  double m = v[0];
  for (std::size_t j = 1; j < k; ++j) m = std::max(m, v[j]);
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j) acc += std::exp(v[j] - m);
  return m + std::log(acc);
}

}  // namespace detail

/// Mean per-sample log density of data under the mixture.
inline double log_likelihood(const GmmModel& model, const Matrix& data) {
  if (data.rows == 0) throw ValidationError("log_likelihood: empty data");
  if (data.cols != model.dim)
    throw ValidationError("log_likelihood: data dim " +
                          std::to_string(data.cols) + " != model dim " +
                          std::to_string(model.dim));
  std::vector<double> log_norm(model.k);
  std::vector<double> log_weight(model.k);
  for (std::size_t c = 0; c < model.k; ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < model.dim; ++j)
      acc += std::log(2.0 * M_PI * model.diag_covariances.at(c, j));
    log_norm[c] = acc;
    log_weight[c] = std::log(model.weights[c]);
  }
  std::vector<double> lp(model.k);
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    for (std::size_t c = 0; c < model.k; ++c)
      lp[c] = log_weight[c] +
              detail::diag_gaussian_logpdf(data.row(i), model.means.row(c),
                                           model.diag_covariances.row(c),
                                           log_norm[c], model.dim);
    total += detail::logsumexp_row(lp.data(), model.k);
  }
  return total / static_cast<double>(data.rows);
}

/// Normalized responsibilities (N x K); rows sum to 1.
inline Matrix responsibilities(const GmmModel& model, const Matrix& data) {
  if (data.cols != model.dim)
    throw ValidationError("responsibilities: dim mismatch");
  std::vector<double> log_norm(model.k), log_weight(model.k);
  for (std::size_t c = 0; c < model.k; ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < model.dim; ++j)
      acc += std::log(2.0 * M_PI * model.diag_covariances.at(c, j));
    log_norm[c] = acc;
    log_weight[c] = std::log(model.weights[c]);
  }
  Matrix resp(data.rows, model.k);
  for (std::size_t i = 0; i < data.rows; ++i) {
    double* row = resp.row(i);
    for (std::size_t c = 0; c < model.k; ++c)
      row[c] = log_weight[c] +
               detail::diag_gaussian_logpdf(data.row(i), model.means.row(c),
                                            model.diag_covariances.row(c),
                                            log_norm[c], model.dim);
    const double lse = detail::logsumexp_row(row, model.k);
    for (std::size_t c = 0; c < model.k; ++c) row[c] = std::exp(row[c] - lse);
  }
  return resp;
}

/// EM fit.  Stops when the relative improvement of the mean log-likelihood
/// drops below rel_tol, or after max_iters iterations.  A component whose
/// responsibility mass underflows is reseeded at the worst-explained data
/// point (lowest log density under the current mixture); the event is
/// recorded and the monotone log-likelihood trace restarts there.
inline GmmModel fit_gmm(const Matrix& data, const GmmFitConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.rows, d = data.cols, k = cfg.k;
  if (n < k)
    throw ValidationError("fit_gmm: insufficient data (" + std::to_string(n) +
                          " samples for k=" + std::to_string(k) + ")");
  if (!data.finite())
    throw ValidationError("fit_gmm: data contains non-finite values");

  // Global per-dimension variance (biased, /N); also the reseed covariance.
  std::vector<double> global_mean(d, 0.0), global_var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) global_mean[j] += data.at(i, j);
  for (std::size_t j = 0; j < d; ++j) global_mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = data.at(i, j) - global_mean[j];
      global_var[j] += diff * diff;
    }
  for (std::size_t j = 0; j < d; ++j)
    global_var[j] = std::max(global_var[j] / static_cast<double>(n),
                             cfg.cov_floor);

  GmmModel model;
  model.k = k;
  model.dim = d;
  model.cov_floor = cfg.cov_floor;
  model.seed = cfg.seed;
  model.weights.assign(k, 1.0 / static_cast<double>(k));
  model.means = Matrix(k, d);
  model.diag_covariances = Matrix(k, d);

  Rng rng(cfg.seed);
  const auto seeds = detail::kmeanspp_indices(data, k, rng);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j) {
      model.means.at(c, j) = data.at(seeds[c], j);
      model.diag_covariances.at(c, j) = global_var[j];
    }

  // Weight mass below this is treated as a degenerate component.
  const double mass_floor = 1e-10;

  std::vector<double> log_norm(k), log_weight(k), lp(k);
  Matrix resp(n, k);
  std::vector<double> sample_ll(n);

  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    // E-step (log space)
    for (std::size_t c = 0; c < k; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        acc += std::log(2.0 * M_PI * model.diag_covariances.at(c, j));
      log_norm[c] = acc;
      log_weight[c] = std::log(model.weights[c]);
    }
    double total_ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double* row = resp.row(i);
      for (std::size_t c = 0; c < k; ++c)
        row[c] = log_weight[c] +
                 detail::diag_gaussian_logpdf(data.row(i), model.means.row(c),
                                              model.diag_covariances.row(c),
                                              log_norm[c], d);
      const double lse = detail::logsumexp_row(row, k);
      sample_ll[i] = lse;
      total_ll += lse;
      for (std::size_t c = 0; c < k; ++c) row[c] = std::exp(row[c] - lse);
    }
    const double mean_ll = total_ll / static_cast<double>(n);

    const bool have_prev = !model.log_likelihood_trace.empty();
    const double prev_ll = have_prev ? model.log_likelihood_trace.back() : 0.0;
    model.log_likelihood_trace.push_back(mean_ll);
    model.iterations_run = iter + 1;
    if (have_prev && mean_ll - prev_ll < cfg.rel_tol * std::abs(prev_ll)) break;

    // M-step
    bool reseeded = false;
    for (std::size_t c = 0; c < k; ++c) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) mass += resp.at(i, c);
      if (mass < mass_floor) {
        // Degenerate component: reseed at the worst-explained point.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < n; ++i)
          if (sample_ll[i] < sample_ll[worst]) worst = i;
        for (std::size_t j = 0; j < d; ++j) {
          model.means.at(c, j) = data.at(worst, j);
          model.diag_covariances.at(c, j) = global_var[j];
        }
        model.weights[c] = 1.0 / static_cast<double>(n);
        model.reseed_iterations.push_back(iter);
        reseeded = true;
        continue;
      }
      model.weights[c] = mass / static_cast<double>(n);
      for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += resp.at(i, c) * data.at(i, j);
        model.means.at(c, j) = m / mass;
      }
      for (std::size_t j = 0; j < d; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double diff = data.at(i, j) - model.means.at(c, j);
          v += resp.at(i, c) * diff * diff;
        }
        model.diag_covariances.at(c, j) = std::max(v / mass, cfg.cov_floor);
      }
    }
    double wsum = 0.0;
    for (double w : model.weights) wsum += w;
    for (double& w : model.weights) w /= wsum;
    if (reseeded) model.log_likelihood_trace.clear();
  }
  return model;
}

/// Component means, row order = component index.
inline Matrix local_means(const GmmModel& model) { return model.means; }

// Manifest kind "gmm": weights (1 x K), means (K x D), covariances (K x D).

inline void save_gmm(const GmmModel& model,
                     const std::filesystem::path& manifest_path) {
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  Matrix weights(1, model.k);
  for (std::size_t c = 0; c < model.k; ++c) weights.at(0, c) = model.weights[c];
  write_matrix(weights, dir / (stem + ".weights.emo1"));
  write_matrix(model.means, dir / (stem + ".means.emo1"));
  write_matrix(model.diag_covariances, dir / (stem + ".covariances.emo1"));
  ModelManifest m;
  m.kind = "gmm";
  m.metadata["k"] = model.k;
  m.metadata["dim"] = model.dim;
  m.metadata["seed"] = model.seed;
  m.metadata["iterations_run"] = model.iterations_run;
  m.metadata["final_log_likelihood"] = model.final_log_likelihood();
  m.metadata["cov_floor"] = model.cov_floor;
  m.metadata["reseed_count"] = model.reseed_iterations.size();
  m.matrix_files["weights"] = stem + ".weights.emo1";
  m.matrix_files["means"] = stem + ".means.emo1";
  m.matrix_files["covariances"] = stem + ".covariances.emo1";
  write_manifest(m, manifest_path);
}

inline GmmModel load_gmm(const std::filesystem::path& manifest_path) {
  ModelManifest m = read_manifest(manifest_path);
  if (m.kind != "gmm")
    throw ValidationError(manifest_path.string() + " is a \"" + m.kind +
                          "\" manifest, expected gmm");
  const auto dir = manifest_path.parent_path();
  GmmModel model;
  model.k = m.metadata.at("k").get<std::size_t>();
  model.dim = m.metadata.at("dim").get<std::size_t>();
  model.seed = m.metadata.at("seed").get<std::uint64_t>();
  model.iterations_run = m.metadata.at("iterations_run").get<std::size_t>();
  model.cov_floor = m.metadata.value("cov_floor", 1e-6);
  model.log_likelihood_trace = {
      m.metadata.at("final_log_likelihood").get<double>()};
  Matrix weights = read_matrix(dir / m.matrix_files.at("weights"));
  model.means = read_matrix(dir / m.matrix_files.at("means"));
  model.diag_covariances = read_matrix(dir / m.matrix_files.at("covariances"));
  if (weights.cols != model.k || model.means.rows != model.k ||
      model.means.cols != model.dim ||
      model.diag_covariances.rows != model.k ||
      model.diag_covariances.cols != model.dim)
    throw ValidationError("gmm manifest " + manifest_path.string() +
                          ": matrix shapes disagree with metadata");
  model.weights = std::move(weights.data);
  // binary32 storage perturbs the weight sum and the covariance floor at the
  // 1e-8 level; restore both invariants in double.
  double wsum = 0.0;
  for (double w : model.weights) wsum += w;
  for (double& w : model.weights) w /= wsum;
  for (double& v : model.diag_covariances.data)
    v = std::max(v, model.cov_floor);
  return model;
}

}  // namespace emoreg
