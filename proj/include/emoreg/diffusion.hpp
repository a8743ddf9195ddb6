// emoreg/diffusion.hpp

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

// Mean-reverting diffusion over Mel-like sequences.
//
// Forward SDE on t in (0, 1]:
//   dX_t = 1/2 beta_t (Xbar - X_t) dt + sqrt(beta_t) dW
// with linear schedule beta_t = beta_0 + t (beta_1 - beta_0).  Its marginal
// given X_0 has the closed form
//   mean(t) = Xbar + (X_0 - Xbar) rho(t),   rho(t) = exp(-1/2 int_0^t beta)
//   var(t)  = 1 - rho(t)^2                  (per element, isotropic)
// which interpolates from X_0 (t=0) toward N(Xbar, I) as the integral grows.
// The closed form is cross-checked against an Euler-Maruyama simulation of
// the SDE itself in the tests.
//
// Reverse-time sampling is Euler-Maruyama on the standard reverse SDE,
// stepping t from 1 down to t_min:
//   X <- X - h [ 1/2 beta_t (Xbar - X_t) - beta_t score(X_t, t) ]
//          + sqrt(beta_t h) z.

#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "emoreg/common.hpp"
#include "emoreg/mel.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg {

struct NoiseSchedule {
  double beta0 = 0.05;
  double beta1 = 20.0;

  void validate() const {
    if (!(beta0 > 0.0) || !(beta1 >= beta0))
      throw ValidationError("noise schedule requires 0 < beta0 <= beta1");
  }
};

inline constexpr double kOracleTimeFloor = 1e-5;

namespace detail {

inline void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw ValidationError("diffusion time t=" + std::to_string(t) +
                          " outside [0, 1]");
}

}  // namespace detail

/// beta_t = beta_0 + t (beta_1 - beta_0)
inline double noise_at(const NoiseSchedule& s, double t) {
  s.validate();
  detail::check_time(t);
  return s.beta0 + t * (s.beta1 - s.beta0);
}

/// int_0^t beta_u du = beta_0 t + (beta_1 - beta_0) t^2 / 2, closed form.
inline double noise_integral(const NoiseSchedule& s, double t) {
  s.validate();
  detail::check_time(t);
  return s.beta0 * t + 0.5 * (s.beta1 - s.beta0) * t * t;
}

/// rho(t) = exp(-1/2 int_0^t beta); the mean interpolation factor.
inline double decay_factor(const NoiseSchedule& s, double t) {
  return std::exp(-0.5 * noise_integral(s, t));
}

struct ForwardMarginal {
  MelSequence mean;
  double variance = 0.0;  // per element
};

inline ForwardMarginal forward_marginal(const MelSequence& x0,
                                        const MelSequence& x_bar, double t,
                                        const NoiseSchedule& s) {
  check_same_shape(x0, x_bar, "forward_marginal");
  const double rho = decay_factor(s, t);
  ForwardMarginal out;
  out.mean = MelSequence(x0.frames(), x0.channels());
  for (std::size_t i = 0; i < x0.data.data.size(); ++i)
    out.mean.data.data[i] =
        x_bar.data.data[i] + (x0.data.data[i] - x_bar.data.data[i]) * rho;
  out.variance = 1.0 - rho * rho;
  return out;
}

/// One draw from the forward marginal at time t (row-major draw order).
inline MelSequence sample_forward(const MelSequence& x0,
                                  const MelSequence& x_bar, double t,
                                  const NoiseSchedule& s, std::uint64_t seed) {
  ForwardMarginal marginal = forward_marginal(x0, x_bar, t, s);
  const double sd = std::sqrt(marginal.variance);
  Rng rng(seed);
  MelSequence out = std::move(marginal.mean);
  for (double& v : out.data.data) v += sd * rng.normal();
  return out;
}

/// Exact score of the forward marginal for a point mass at x0:
/// -(X_t - mean(t)) / var(t).  Singular as t -> 0, hence the time floor.
inline MelSequence oracle_score(const MelSequence& x_t, const MelSequence& x0,
                                const MelSequence& x_bar, double t,
                                const NoiseSchedule& s) {
  if (t <= kOracleTimeFloor)
    throw NumericalError("oracle score is singular at t=" + std::to_string(t) +
                         " (variance ~ 0)");
  check_same_shape(x_t, x0, "oracle_score");
  ForwardMarginal marginal = forward_marginal(x0, x_bar, t, s);
  MelSequence out(x_t.frames(), x_t.channels());
  for (std::size_t i = 0; i < out.data.data.size(); ++i)
    out.data.data[i] =
        -(x_t.data.data[i] - marginal.mean.data.data[i]) / marginal.variance;
  return out;
}

/// Score estimate at (X_t, t); Xbar and any conditioning are bound by the
/// caller.
using ScoreFunction =
    std::function<MelSequence(const MelSequence& x_t, const MelSequence& x_bar,
                              double t)>;

inline ScoreFunction make_oracle_score_fn(MelSequence x0, NoiseSchedule s) {
  return [x0 = std::move(x0), s](const MelSequence& x_t,
                                 const MelSequence& x_bar,
                                 double t) -> MelSequence {
    return oracle_score(x_t, x0, x_bar, t, s);
  };
}

/// Euler-Maruyama reverse-time solve from t=1 down to t_min on a uniform
/// grid of n_steps steps; returns the state at t_min.  Non-finite scores or
/// states abort with the offending step index.
inline MelSequence reverse_solve(const MelSequence& x_terminal,
                                 const MelSequence& x_bar,
                                 const ScoreFunction& score,
                                 const NoiseSchedule& s, std::size_t n_steps,
                                 double t_min, std::uint64_t seed) {
  s.validate();
  if (n_steps == 0) throw ValidationError("reverse_solve: n_steps must be >= 1");
  if (!(t_min > 0.0 && t_min < 1.0))
    throw ValidationError("reverse_solve: t_min must be in (0, 1)");
  check_same_shape(x_terminal, x_bar, "reverse_solve");

  const double h = (1.0 - t_min) / static_cast<double>(n_steps);
  Rng rng(seed);
  MelSequence x = x_terminal;
  for (std::size_t step = 0; step < n_steps; ++step) {
    const double t = 1.0 - static_cast<double>(step) * h;
    const double beta = noise_at(s, t);
    const MelSequence sc = score(x, x_bar, t);
    check_same_shape(sc, x, "reverse_solve score output");
    const double noise_scale = std::sqrt(beta * h);
    for (std::size_t i = 0; i < x.data.data.size(); ++i) {
      const double sv = sc.data.data[i];
      if (!std::isfinite(sv))
        throw NumericalError("non-finite score at reverse step " +
                             std::to_string(step) + " (t=" + std::to_string(t) +
                             ")");
      const double drift =
          0.5 * beta * (x_bar.data.data[i] - x.data.data[i]) - beta * sv;
      x.data.data[i] += -h * drift + noise_scale * rng.normal();
      if (!std::isfinite(x.data.data[i]))
        throw NumericalError("non-finite state at reverse step " +
                             std::to_string(step) + " (t=" + std::to_string(t) +
                             ")");
    }
  }
  return x;
}

// Manifest kind "schedule": constants only, no matrices.

inline void save_schedule(const NoiseSchedule& s, double t_min,
                          const std::filesystem::path& manifest_path) {
  ModelManifest m;
  m.kind = "schedule";
  m.metadata["beta0"] = s.beta0;
  m.metadata["beta1"] = s.beta1;
  m.metadata["t_min"] = t_min;
  write_manifest(m, manifest_path);
}

inline std::pair<NoiseSchedule, double> load_schedule(
    const std::filesystem::path& manifest_path) {
  ModelManifest m = read_manifest(manifest_path);
  if (m.kind != "schedule")
    throw ValidationError(manifest_path.string() + " is a \"" + m.kind +
                          "\" manifest, expected schedule");
  NoiseSchedule s;
  s.beta0 = m.metadata.at("beta0").get<double>();
  s.beta1 = m.metadata.at("beta1").get<double>();
  s.validate();
  return {s, m.metadata.at("t_min").get<double>()};
}

}  // namespace emoreg
