// emoreg/scorenet.hpp

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

// Desk-scale conditional score approximator.  A per-frame multilayer
// perceptron stands in for a full U-Net score model; the conditioning
// interface is preserved exactly: each frame of X_t is scored given the
// matching frame of Xbar, a sinusoidal embedding of t, and the regularized
// emotion embedding e_ir.  Gradients of the denoising score matching loss
// are computed by hand (no autodiff), which keeps them exactly checkable
// against finite differences.
//
// DSM objective, lambda_t = var(t) weighting: draw t ~ U[t_min, 1] and
// eps ~ N(0, I) per batch item, form X_t = mean(t) + sqrt(var(t)) eps, and
// score against the conditional target -eps / sqrt(var(t)):
//   loss = mean_b  var(t_b) * mean_{f,c} (net(...) - target)^2.

#pragma once

#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emoreg/common.hpp"
#include "emoreg/diffusion.hpp"
#include "emoreg/mel.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg {

struct ScoreNetConfig {
  std::size_t channels = kMelChannels;
  std::size_t cond_dim = 256;
  std::size_t time_embed_dim = 16;  // even
  std::vector<std::size_t> hidden_dims = {256, 256};
  std::uint64_t seed = 0;

  std::size_t input_dim() const {
    return 2 * channels + time_embed_dim + cond_dim;
  }

  void validate() const {
    if (channels == 0) throw ValidationError("scorenet: channels must be >= 1");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
      throw ValidationError("scorenet: time_embed_dim must be even and >= 2");
    for (std::size_t h : hidden_dims)
      if (h == 0) throw ValidationError("scorenet: hidden width must be >= 1");
  }
};

/// Sinusoidal embedding of t: (sin(2^k t), cos(2^k t)) pairs.
inline std::vector<double> time_embedding(double t, std::size_t dim) {
  std::vector<double> emb(dim);
  double omega = 1.0;
  for (std::size_t k = 0; k < dim / 2; ++k) {
    emb[2 * k] = std::sin(omega * t);
    emb[2 * k + 1] = std::cos(omega * t);
    omega *= 2.0;
  }
  return emb;
}

struct ScoreNet {
  struct Layer {
    Matrix w;               // out x in
    std::vector<double> b;  // out
  };

  ScoreNetConfig config;
  std::vector<Layer> layers;  // hidden layers (tanh) then linear output

  static ScoreNet init(const ScoreNetConfig& cfg) {
    cfg.validate();
    ScoreNet net;
    net.config = cfg;
    Rng rng(cfg.seed);
    std::size_t in = cfg.input_dim();
    std::vector<std::size_t> outs = cfg.hidden_dims;
    outs.push_back(cfg.channels);
    for (std::size_t out : outs) {
      Layer layer;
      layer.w = Matrix(out, in);
      const double scale = 1.0 / std::sqrt(static_cast<double>(in));
      for (double& v : layer.w.data) v = scale * rng.normal();
      layer.b.assign(out, 0.0);
      net.layers.push_back(std::move(layer));
      in = out;
    }
    return net;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.w.data.size() + layer.b.size();
    return n;
  }

  /// Flat parameter access (layer order, W row-major then b); used by the
  /// finite-difference gradient checks.
  double& parameter(std::size_t index) {
    for (auto& layer : layers) {
      if (index < layer.w.data.size()) return layer.w.data[index];
      index -= layer.w.data.size();
      if (index < layer.b.size()) return layer.b[index];
      index -= layer.b.size();
    }
    throw ValidationError("scorenet: parameter index out of range");
  }

  std::vector<double> assemble_input(std::span<const double> xt_frame,
                                     std::span<const double> xbar_frame,
                                     double t,
                                     std::span<const double> e_ir) const {
    if (xt_frame.size() != config.channels ||
        xbar_frame.size() != config.channels)
      throw ValidationError("scorenet: frame width != configured channels");
    if (e_ir.size() != config.cond_dim)
      throw ValidationError("scorenet: conditioning dim " +
                            std::to_string(e_ir.size()) + " != configured " +
                            std::to_string(config.cond_dim));
    std::vector<double> x;
    x.reserve(config.input_dim());
    x.insert(x.end(), xt_frame.begin(), xt_frame.end());
    x.insert(x.end(), xbar_frame.begin(), xbar_frame.end());
    const auto emb = time_embedding(t, config.time_embed_dim);
    x.insert(x.end(), emb.begin(), emb.end());
    x.insert(x.end(), e_ir.begin(), e_ir.end());
    return x;
  }

  /// Forward pass for one frame; when `activations` is given, the input and
  /// every post-nonlinearity activation are cached for backprop.
  std::vector<double> forward_frame(
      std::span<const double> xt_frame, std::span<const double> xbar_frame,
      double t, std::span<const double> e_ir,
      std::vector<std::vector<double>>* activations = nullptr) const {
    std::vector<double> a = assemble_input(xt_frame, xbar_frame, t, e_ir);
    if (activations) {
      activations->clear();
      activations->push_back(a);
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Layer& layer = layers[l];
      std::vector<double> z(layer.b);
      for (std::size_t r = 0; r < layer.w.rows; ++r) {
        const double* row = layer.w.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < layer.w.cols; ++c) acc += row[c] * a[c];
        z[r] += acc;
      }
      if (l + 1 < layers.size())
        for (double& v : z) v = std::tanh(v);
      a = std::move(z);
      if (activations && l + 1 < layers.size()) activations->push_back(a);
    }
    return a;
  }

  /// Frame-wise score estimate over a whole sequence.
  MelSequence evaluate(const MelSequence& x_t, const MelSequence& x_bar,
                       double t, std::span<const double> e_ir) const {
    check_same_shape(x_t, x_bar, "scorenet evaluate");
    MelSequence out(x_t.frames(), x_t.channels());
    for (std::size_t f = 0; f < x_t.frames(); ++f) {
      const auto y = forward_frame({x_t.data.row(f), config.channels},
                                   {x_bar.data.row(f), config.channels}, t,
                                   e_ir);
      std::copy(y.begin(), y.end(), out.data.row(f));
    }
    return out;
  }
};

/// Adapts a ScoreNet to the reverse-solver interface with e_ir bound.
inline ScoreFunction make_scorenet_fn(ScoreNet net, std::vector<double> e_ir) {
  return [net = std::move(net), e_ir = std::move(e_ir)](
             const MelSequence& x_t, const MelSequence& x_bar,
             double t) -> MelSequence { return net.evaluate(x_t, x_bar, t, e_ir); };
}

struct DsmItem {
  MelSequence x0;
  MelSequence x_bar;
  std::vector<double> e_ir;
};

struct DsmDraw {
  double t = 0.0;
  Matrix eps;  // same shape as the item's sequences
};

inline constexpr double kDsmTimeFloor = 1e-3;

/// The (t, eps) draws behind one DSM evaluation; exposed so a loss and its
/// gradient (or a finite-difference probe) share identical randomness.
inline std::vector<DsmDraw> make_dsm_draws(const std::vector<DsmItem>& batch,
                                           std::uint64_t seed,
                                           double t_min = kDsmTimeFloor) {
  if (batch.empty()) throw ValidationError("dsm: empty batch");
  Rng rng(seed);
  std::vector<DsmDraw> draws;
  draws.reserve(batch.size());
  for (const auto& item : batch) {
    check_same_shape(item.x0, item.x_bar, "dsm batch item");
    DsmDraw draw;
    draw.t = t_min + rng.uniform01() * (1.0 - t_min);
    draw.eps = Matrix(item.x0.frames(), item.x0.channels());
    for (double& v : draw.eps.data) v = rng.normal();
    draws.push_back(std::move(draw));
  }
  return draws;
}

/// DSM loss for any scorer with the ScoreNet conditioning signature;
/// lambda_t = var(t).
template <class Scorer>
double dsm_loss_with(const Scorer& scorer, const std::vector<DsmItem>& batch,
                     const NoiseSchedule& s,
                     const std::vector<DsmDraw>& draws) {
  if (batch.empty()) throw ValidationError("dsm: empty batch");
  if (draws.size() != batch.size())
    throw ValidationError("dsm: draw count != batch size");
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const DsmItem& item = batch[b];
    const DsmDraw& draw = draws[b];
    const ForwardMarginal marginal =
        forward_marginal(item.x0, item.x_bar, draw.t, s);
    const double sd = std::sqrt(marginal.variance);
    MelSequence x_t(item.x0.frames(), item.x0.channels());
    for (std::size_t i = 0; i < x_t.data.data.size(); ++i)
      x_t.data.data[i] = marginal.mean.data.data[i] + sd * draw.eps.data[i];
    const MelSequence out = scorer(x_t, item.x_bar, draw.t, item.e_ir);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < x_t.data.data.size(); ++i) {
      const double target = -draw.eps.data[i] / sd;
      const double diff = out.data.data[i] - target;
      sum_sq += diff * diff;
    }
    loss += marginal.variance * sum_sq /
            static_cast<double>(x_t.data.data.size());
  }
  return loss / static_cast<double>(batch.size());
}

inline double dsm_loss(const ScoreNet& net, const std::vector<DsmItem>& batch,
                       const NoiseSchedule& s,
                       const std::vector<DsmDraw>& draws) {
  return dsm_loss_with(
      [&net](const MelSequence& x_t, const MelSequence& x_bar, double t,
             const std::vector<double>& e_ir) {
        return net.evaluate(x_t, x_bar, t, e_ir);
      },
      batch, s, draws);
}

/// Convenience overload drawing (t, eps) from the seed.
inline double dsm_loss(const ScoreNet& net, const std::vector<DsmItem>& batch,
                       const NoiseSchedule& s, std::uint64_t seed,
                       double t_min = kDsmTimeFloor) {
  return dsm_loss(net, batch, s, make_dsm_draws(batch, seed, t_min));
}

struct DsmGradients {
  std::vector<ScoreNet::Layer> layers;  // same shapes as the net
  double loss = 0.0;

  double& parameter(std::size_t index) {
    for (auto& layer : layers) {
      if (index < layer.w.data.size()) return layer.w.data[index];
      index -= layer.w.data.size();
      if (index < layer.b.size()) return layer.b[index];
      index -= layer.b.size();
    }
    throw ValidationError("dsm gradients: parameter index out of range");
  }
};

/// Exact gradients of dsm_loss under the same draws (manual backprop).
inline DsmGradients dsm_grad(const ScoreNet& net,
                             const std::vector<DsmItem>& batch,
                             const NoiseSchedule& s,
                             const std::vector<DsmDraw>& draws) {
  if (batch.empty()) throw ValidationError("dsm: empty batch");
  if (draws.size() != batch.size())
    throw ValidationError("dsm: draw count != batch size");
  DsmGradients grads;
  grads.layers.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    ScoreNet::Layer g;
    g.w = Matrix(layer.w.rows, layer.w.cols);
    g.b.assign(layer.b.size(), 0.0);
    grads.layers.push_back(std::move(g));
  }

  const double batch_norm = 1.0 / static_cast<double>(batch.size());
  std::vector<std::vector<double>> activations;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const DsmItem& item = batch[b];
    const DsmDraw& draw = draws[b];
    const ForwardMarginal marginal =
        forward_marginal(item.x0, item.x_bar, draw.t, s);
    const double sd = std::sqrt(marginal.variance);
    MelSequence x_t(item.x0.frames(), item.x0.channels());
    for (std::size_t i = 0; i < x_t.data.data.size(); ++i)
      x_t.data.data[i] = marginal.mean.data.data[i] + sd * draw.eps.data[i];

    const double elem_norm =
        1.0 / static_cast<double>(x_t.data.data.size());
    for (std::size_t f = 0; f < x_t.frames(); ++f) {
      const auto out = net.forward_frame(
          {x_t.data.row(f), net.config.channels},
          {item.x_bar.data.row(f), net.config.channels}, draw.t, item.e_ir,
          &activations);
      // dL/d out = 2 var (out - target) / (B * T * C)
      std::vector<double> delta(out.size());
      double frame_sq = 0.0;
      for (std::size_t c = 0; c < out.size(); ++c) {
        const double target = -draw.eps.at(f, c) / sd;
        const double diff = out[c] - target;
        frame_sq += diff * diff;
        delta[c] = 2.0 * marginal.variance * diff * elem_norm * batch_norm;
      }
      grads.loss += marginal.variance * frame_sq * elem_norm * batch_norm;

      for (std::size_t l = net.layers.size(); l-- > 0;) {
        const ScoreNet::Layer& layer = net.layers[l];
        ScoreNet::Layer& g = grads.layers[l];
        const std::vector<double>& a_in = activations[l];
        for (std::size_t r = 0; r < layer.w.rows; ++r) {
          double* grow = g.w.row(r);
          for (std::size_t c = 0; c < layer.w.cols; ++c)
            grow[c] += delta[r] * a_in[c];
          g.b[r] += delta[r];
        }
        if (l == 0) break;
        std::vector<double> prev(layer.w.cols, 0.0);
        for (std::size_t r = 0; r < layer.w.rows; ++r) {
          const double* row = layer.w.row(r);
          for (std::size_t c = 0; c < layer.w.cols; ++c)
            prev[c] += row[c] * delta[r];
        }
        // tanh' through the cached post-activation of layer l-1
        const std::vector<double>& a = activations[l];
        for (std::size_t c = 0; c < prev.size(); ++c)
          prev[c] *= 1.0 - a[c] * a[c];
        delta = std::move(prev);
      }
    }
  }
  return grads;
}

inline DsmGradients dsm_grad(const ScoreNet& net,
                             const std::vector<DsmItem>& batch,
                             const NoiseSchedule& s, std::uint64_t seed,
                             double t_min = kDsmTimeFloor) {
  return dsm_grad(net, batch, s, make_dsm_draws(batch, seed, t_min));
}

/// Plain gradient-descent update.
inline void apply_gradients(ScoreNet& net, const DsmGradients& grads,
                            double learning_rate) {
  if (grads.layers.size() != net.layers.size())
    throw ValidationError("apply_gradients: layer count mismatch");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    const auto& g = grads.layers[l];
    for (std::size_t i = 0; i < layer.w.data.size(); ++i)
      layer.w.data[i] -= learning_rate * g.w.data[i];
    for (std::size_t i = 0; i < layer.b.size(); ++i)
      layer.b[i] -= learning_rate * g.b[i];
  }
}

// Manifest kind "scorenet": per-layer weight and bias matrices.

inline void save_scorenet(const ScoreNet& net,
                          const std::filesystem::path& manifest_path) {
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  ModelManifest m;
  m.kind = "scorenet";
  m.metadata["channels"] = net.config.channels;
  m.metadata["cond_dim"] = net.config.cond_dim;
  m.metadata["time_embed_dim"] = net.config.time_embed_dim;
  m.metadata["hidden_dims"] = net.config.hidden_dims;
  m.metadata["seed"] = net.config.seed;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const std::string wname = stem + ".w" + std::to_string(l) + ".emo1";
    const std::string bname = stem + ".b" + std::to_string(l) + ".emo1";
    write_matrix(net.layers[l].w, dir / wname);
    Matrix b(1, net.layers[l].b.size());
    std::copy(net.layers[l].b.begin(), net.layers[l].b.end(), b.row(0));
    write_matrix(b, dir / bname);
    m.matrix_files["w" + std::to_string(l)] = wname;
    m.matrix_files["b" + std::to_string(l)] = bname;
  }
  write_manifest(m, manifest_path);
}

inline ScoreNet load_scorenet(const std::filesystem::path& manifest_path) {
  ModelManifest m = read_manifest(manifest_path);
  if (m.kind != "scorenet")
    throw ValidationError(manifest_path.string() + " is a \"" + m.kind +
                          "\" manifest, expected scorenet");
  const auto dir = manifest_path.parent_path();
  ScoreNet net;
  net.config.channels = m.metadata.at("channels").get<std::size_t>();
  net.config.cond_dim = m.metadata.at("cond_dim").get<std::size_t>();
  net.config.time_embed_dim =
      m.metadata.at("time_embed_dim").get<std::size_t>();
  net.config.hidden_dims =
      m.metadata.at("hidden_dims").get<std::vector<std::size_t>>();
  net.config.seed = m.metadata.value("seed", std::uint64_t{0});
  net.config.validate();
  const std::size_t n_layers = net.config.hidden_dims.size() + 1;
  std::size_t in = net.config.input_dim();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t out = l < net.config.hidden_dims.size()
                                ? net.config.hidden_dims[l]
                                : net.config.channels;
    ScoreNet::Layer layer;
    layer.w = read_matrix(dir / m.matrix_files.at("w" + std::to_string(l)));
    Matrix b = read_matrix(dir / m.matrix_files.at("b" + std::to_string(l)));
    if (layer.w.rows != out || layer.w.cols != in || b.rows != 1 ||
        b.cols != out)
      throw ValidationError("scorenet manifest " + manifest_path.string() +
                            ": layer " + std::to_string(l) + " shape mismatch");
    layer.b = std::move(b.data);
    net.layers.push_back(std::move(layer));
    in = out;
  }
  return net;
}

}  // namespace emoreg
