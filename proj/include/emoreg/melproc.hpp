// emoreg/melproc.hpp

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

// Average-voice construction: per-phoneme average Mel features across a
// corpus, and frame-level substitution of each phoneme's frames by that
// average.  Alignments are consumed, never produced, here; frame indices are
// Mel-frame positions, not time.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoreg/common.hpp"
#include "emoreg/mel.hpp"
#include "emoreg/tensorio.hpp"

namespace emoreg {

struct PhonemeSegment {
  std::string phoneme;
  std::size_t start;  // inclusive frame index
  std::size_t end;    // exclusive frame index
};

/// Contiguous, non-overlapping, sorted segments covering [0, T).
struct PhonemeAlignment {
  std::vector<PhonemeSegment> segments;

  std::size_t total_frames() const {
    return segments.empty() ? 0 : segments.back().end;
  }

  /// Validates internal structure and, when frames > 0, exact coverage of
  /// [0, frames).
  void validate(std::size_t frames) const {
    std::size_t expect_start = 0;
    for (const auto& seg : segments) {
      if (seg.start >= seg.end)
        throw ValidationError("alignment segment \"" + seg.phoneme +
                              "\" has start >= end");
      if (seg.start != expect_start)
        throw ValidationError(
            "alignment has a gap or overlap at frame " +
            std::to_string(seg.start) + " (expected segment start " +
            std::to_string(expect_start) + ")");
      expect_start = seg.end;
    }
    if (expect_start != frames)
      throw ValidationError("alignment covers [0, " +
                            std::to_string(expect_start) +
                            ") but the sequence has " + std::to_string(frames) +
                            " frames");
  }
};

/// Per-phoneme average feature vectors plus the frame counts behind them.
struct PhonemeTable {
  std::size_t channels = 0;
  std::map<std::string, std::vector<double>> averages;
  std::map<std::string, std::size_t> frame_counts;
};

using MelCorpus = std::vector<std::pair<MelSequence, PhonemeAlignment>>;

/// Mean of all frames assigned to each phoneme across the corpus.
/// Accumulation order is fixed: utterances in corpus order, frames ascending
/// within each segment, one running double sum per phoneme, mean = sum/count.
inline PhonemeTable build_phoneme_table(const MelCorpus& corpus) {
  PhonemeTable table;
  std::map<std::string, std::vector<double>> sums;
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    const MelSequence& mel = corpus[u].first;
    const PhonemeAlignment& align = corpus[u].second;
    align.validate(mel.frames());
    if (table.channels == 0) table.channels = mel.channels();
    if (mel.channels() != table.channels)
      throw ValidationError("utterance " + std::to_string(u) + " has " +
                            std::to_string(mel.channels()) +
                            " channels, expected " +
                            std::to_string(table.channels));
    for (const auto& seg : align.segments) {
      auto& sum = sums[seg.phoneme];
      if (sum.empty()) sum.assign(table.channels, 0.0);
      for (std::size_t f = seg.start; f < seg.end; ++f) {
        const double* frame = mel.data.row(f);
        for (std::size_t c = 0; c < table.channels; ++c) sum[c] += frame[c];
      }
      table.frame_counts[seg.phoneme] += seg.end - seg.start;
    }
  }
  for (auto& [phoneme, sum] : sums) {
    const double n = static_cast<double>(table.frame_counts[phoneme]);
    std::vector<double> avg(table.channels);
    for (std::size_t c = 0; c < table.channels; ++c) avg[c] = sum[c] / n;
    table.averages[phoneme] = std::move(avg);
  }
  return table;
}

/// Replaces every frame by its phoneme's table average; shape preserved.
/// This is the ground-truth average-voice construction.
inline MelSequence substitute_average(const MelSequence& mel,
                                      const PhonemeAlignment& align,
                                      const PhonemeTable& table) {
  align.validate(mel.frames());
  if (mel.channels() != table.channels)
    throw ValidationError("sequence has " + std::to_string(mel.channels()) +
                          " channels but the table was built with " +
                          std::to_string(table.channels));
  MelSequence out(mel.frames(), mel.channels());
  for (const auto& seg : align.segments) {
    auto it = table.averages.find(seg.phoneme);
    if (it == table.averages.end())
      throw ValidationError("phoneme \"" + seg.phoneme +
                            "\" is not in the phoneme table");
    for (std::size_t f = seg.start; f < seg.end; ++f) {
      double* frame = out.data.row(f);
      for (std::size_t c = 0; c < mel.channels(); ++c) frame[c] = it->second[c];
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Alignment JSON: a list of [phoneme, start, end] triples.

inline void write_alignment(const PhonemeAlignment& align,
                            const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& seg : align.segments)
    j.push_back({seg.phoneme, seg.start, seg.end});
  detail::write_file_bytes(path, j.dump() + "\n");
}

inline PhonemeAlignment read_alignment(const std::filesystem::path& path) {
  std::string bytes = detail::read_file_bytes(path);
  nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw ValidationError("alignment file " + path.string() +
                          " is not a JSON array");
  PhonemeAlignment align;
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 3 || !item[0].is_string() ||
        !item[1].is_number_unsigned() || !item[2].is_number_unsigned())
      throw ValidationError("alignment file " + path.string() +
                            " entries must be [phoneme, start, end]");
    align.segments.push_back({item[0].get<std::string>(),
                              item[1].get<std::size_t>(),
                              item[2].get<std::size_t>()});
  }
  return align;
}

// Manifest kind "phoneme-table": phoneme list + counts in metadata, one
// P x channels matrix of averages (rows in metadata phoneme order).

inline void save_phoneme_table(const PhonemeTable& table,
                               const std::filesystem::path& manifest_path) {
  std::vector<std::string> phonemes;
  std::vector<std::size_t> counts;
  Matrix averages(table.averages.size(), table.channels);
  std::size_t r = 0;
  for (const auto& [phoneme, avg] : table.averages) {
    phonemes.push_back(phoneme);
    counts.push_back(table.frame_counts.at(phoneme));
    for (std::size_t c = 0; c < table.channels; ++c) averages.at(r, c) = avg[c];
    ++r;
  }
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  write_matrix(averages, dir / (stem + ".averages.emo1"));
  ModelManifest m;
  m.kind = "phoneme-table";
  m.metadata["phonemes"] = phonemes;
  m.metadata["frame_counts"] = counts;
  m.metadata["channels"] = table.channels;
  m.matrix_files["averages"] = stem + ".averages.emo1";
  write_manifest(m, manifest_path);
}

inline PhonemeTable load_phoneme_table(
    const std::filesystem::path& manifest_path) {
  ModelManifest m = read_manifest(manifest_path);
  if (m.kind != "phoneme-table")
    throw ValidationError(manifest_path.string() + " is a \"" + m.kind +
                          "\" manifest, expected phoneme-table");
  const auto dir = manifest_path.parent_path();
  Matrix averages = read_matrix(dir / m.matrix_files.at("averages"));
  auto phonemes = m.metadata.at("phonemes").get<std::vector<std::string>>();
  auto counts = m.metadata.at("frame_counts").get<std::vector<std::size_t>>();
  if (phonemes.size() != averages.rows || counts.size() != averages.rows)
    throw ValidationError("phoneme table " + manifest_path.string() +
                          ": phoneme/count lists do not match matrix rows");
  PhonemeTable table;
  table.channels = averages.cols;
  for (std::size_t r = 0; r < averages.rows; ++r) {
    table.averages[phonemes[r]] = std::vector<double>(
        averages.row(r), averages.row(r) + averages.cols);
    table.frame_counts[phonemes[r]] = counts[r];
  }
  return table;
}

}  // namespace emoreg
