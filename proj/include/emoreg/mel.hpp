// emoreg/mel.hpp

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

#pragma once

#include <cstddef>
#include <string>

#include "emoreg/common.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg {

inline constexpr std::size_t kMelChannels = 80;

/// A frames x channels feature sequence (80 Mel-like channels by default).
/// Thin wrapper over Matrix so shapes carry their meaning through the
/// diffusion and phoneme machinery.
struct MelSequence {
  Matrix data;  // frames x channels

  MelSequence() = default;
  explicit MelSequence(Matrix m) : data(std::move(m)) {}
  MelSequence(std::size_t frames, std::size_t channels, double fill = 0.0)
      : data(frames, channels, fill) {}

  std::size_t frames() const { return data.rows; }
  std::size_t channels() const { return data.cols; }

  bool operator==(const MelSequence& o) const { return data == o.data; }
};

inline void check_same_shape(const MelSequence& a, const MelSequence& b,
                             const char* what) {
  if (a.frames() != b.frames() || a.channels() != b.channels())
    throw ValidationError(std::string(what) + ": shape mismatch " +
                          std::to_string(a.frames()) + "x" +
                          std::to_string(a.channels()) + " vs " +
                          std::to_string(b.frames()) + "x" +
                          std::to_string(b.channels()));
}

}  // namespace emoreg
