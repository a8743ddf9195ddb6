// emoreg/tensorio.hpp

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

// On-disk matrix format ("EMO1"), labeled embedding sets, and the JSON model
// manifests every fitted model is saved through.
//
// EMO1 layout, all little-endian regardless of host:
//   bytes 0..3   magic "EMO1"
//   bytes 4..7   version, u32 (currently 1)
//   bytes 8..11  rows, u32
//   bytes 12..15 cols, u32
//   then rows*cols IEEE-754 binary32 values, row-major.
//
// Values are binary32 on disk and double in memory; accumulation everywhere
// else in the library runs in double.  Roundtrips are bit-exact for any
// matrix whose values are binary32-representable, which covers everything
// that ever existed on disk.

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoreg/common.hpp"

namespace emoreg {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double* row(std::size_t r) { return data.data() + r * cols; }

  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

enum class EmotionLabel { Neutral = 0, Happy = 1, Sad = 2, Angry = 3 };

inline constexpr std::array<EmotionLabel, 4> kAllEmotions = {
    EmotionLabel::Neutral, EmotionLabel::Happy, EmotionLabel::Sad,
    EmotionLabel::Angry};

inline constexpr std::array<EmotionLabel, 3> kTargetEmotions = {
    EmotionLabel::Happy, EmotionLabel::Sad, EmotionLabel::Angry};

inline const char* to_string(EmotionLabel e) {
  switch (e) {
    case EmotionLabel::Neutral: return "Neutral";
    case EmotionLabel::Happy: return "Happy";
    case EmotionLabel::Sad: return "Sad";
    case EmotionLabel::Angry: return "Angry";
  }
  throw ValidationError("invalid EmotionLabel value");
}

// The label set is fixed to the four emotions the modeling pipeline uses.
// Anything else (including "Surprise", which exists in some corpora but is
// not modeled here) is rejected loudly rather than mapped.
inline EmotionLabel emotion_from_string(const std::string& s) {
  if (s == "Neutral") return EmotionLabel::Neutral;
  if (s == "Happy") return EmotionLabel::Happy;
  if (s == "Sad") return EmotionLabel::Sad;
  if (s == "Angry") return EmotionLabel::Angry;
  throw ValidationError("unknown emotion label \"" + s +
                        "\" (expected Neutral|Happy|Sad|Angry)");
}

struct EmbeddingSet {
  Matrix embeddings;                 // N x D
  std::vector<EmotionLabel> labels;  // length N

  std::size_t size() const { return embeddings.rows; }
  std::size_t dim() const { return embeddings.cols; }
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace detail

inline constexpr std::uint32_t kMatrixFormatVersion = 1;

inline void write_matrix(const Matrix& m, const std::filesystem::path& path) {
  if (m.data.size() != m.rows * m.cols)
    throw ValidationError("matrix data length does not match rows*cols");
  std::string out;
  out.reserve(16 + 4 * m.data.size());
  out.append("EMO1");
  detail::put_u32_le(out, kMatrixFormatVersion);
  detail::put_u32_le(out, static_cast<std::uint32_t>(m.rows));
  detail::put_u32_le(out, static_cast<std::uint32_t>(m.cols));
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (!std::isfinite(m.data[i]))
      throw ValidationError("matrix contains a non-finite value at index " +
                            std::to_string(i));
    float f = static_cast<float>(m.data[i]);
    if (!std::isfinite(f))
      throw ValidationError("matrix value at index " + std::to_string(i) +
                            " overflows binary32");
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    detail::put_u32_le(out, bits);
  }
  detail::write_file_bytes(path, out);
}

inline Matrix read_matrix(const std::filesystem::path& path) {
  std::string bytes = detail::read_file_bytes(path);
  if (bytes.size() < 16)
    throw ValidationError("truncated matrix file " + path.string() +
                          ": shorter than the 16-byte header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, "EMO1", 4) != 0)
    throw ValidationError("bad magic in " + path.string() +
                          " (expected \"EMO1\")");
  std::uint32_t version = detail::get_u32_le(p + 4);
  if (version != kMatrixFormatVersion)
    throw ValidationError("unsupported matrix format version " +
                          std::to_string(version) + " in " + path.string());
  std::uint64_t rows = detail::get_u32_le(p + 8);
  std::uint64_t cols = detail::get_u32_le(p + 12);
  std::uint64_t expected = 16 + 4 * rows * cols;
  if (bytes.size() != expected)
    throw ValidationError(
        "matrix payload size mismatch in " + path.string() + ": header says " +
        std::to_string(rows) + "x" + std::to_string(cols) + " (" +
        std::to_string(expected) + " bytes), file has " +
        std::to_string(bytes.size()));
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    std::uint32_t bits = detail::get_u32_le(p + 16 + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f))
      throw ValidationError("non-finite value at index " + std::to_string(i) +
                            " in " + path.string());
    m.data[i] = static_cast<double>(f);
  }
  return m;
}

/// Labels sidecar: a JSON array of label strings, one per matrix row.
inline void write_labels(const std::vector<EmotionLabel>& labels,
                         const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (EmotionLabel e : labels) j.push_back(to_string(e));
  detail::write_file_bytes(path, j.dump() + "\n");
}

inline std::vector<EmotionLabel> read_labels(
    const std::filesystem::path& path) {
  std::string bytes = detail::read_file_bytes(path);
  nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw ValidationError("labels file " + path.string() +
                          " is not a JSON array");
  std::vector<EmotionLabel> labels;
  labels.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_string())
      throw ValidationError("labels file " + path.string() +
                            " contains a non-string entry");
    labels.push_back(emotion_from_string(item.get<std::string>()));
  }
  return labels;
}

inline EmbeddingSet load_embedding_set(
    const std::filesystem::path& matrix_path,
    const std::filesystem::path& labels_path) {
  EmbeddingSet set;
  set.embeddings = read_matrix(matrix_path);
  set.labels = read_labels(labels_path);
  if (set.labels.size() != set.embeddings.rows)
    throw ValidationError(
        "embedding/label length mismatch: " +
        std::to_string(set.embeddings.rows) + " rows vs " +
        std::to_string(set.labels.size()) + " labels");
  return set;
}

// ---------------------------------------------------------------------------
// Model manifests.  A manifest is a small JSON file (lowercase snake_case
// keys) naming the model kind, its scalar metadata, and the EMO1 matrix
// files it owns (paths relative to the manifest).

struct ModelManifest {
  std::string kind;  // gmm | pca | dvm | scorenet | schedule | phoneme-table
  std::uint32_t version = 1;
  nlohmann::json metadata;  // object of scalar metadata
  std::map<std::string, std::string> matrix_files;  // role -> relative path
};

namespace detail {

inline const std::vector<std::string>& required_metadata_keys(
    const std::string& kind) {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"gmm", {"k", "dim", "seed", "iterations_run", "final_log_likelihood"}},
      {"pca", {"dim", "n_components", "total_variance"}},
      {"dvm", {"dim", "n_components", "gmm_k", "gmm_seed"}},
      {"scorenet", {"channels", "cond_dim", "time_embed_dim", "hidden_dims"}},
      {"schedule", {"beta0", "beta1", "t_min"}},
      {"phoneme-table", {"phonemes", "frame_counts"}},
  };
  auto it = table.find(kind);
  if (it == table.end())
    throw ValidationError("unknown manifest kind \"" + kind + "\"");
  return it->second;
}

}  // namespace detail

inline void write_manifest(const ModelManifest& m,
                           const std::filesystem::path& path) {
  detail::required_metadata_keys(m.kind);  // kind must be known
  nlohmann::json j;
  j["kind"] = m.kind;
  j["version"] = m.version;
  j["metadata"] = m.metadata;
  j["matrix_files"] = m.matrix_files;
  detail::write_file_bytes(path, j.dump(2) + "\n");
}

/// Reads and validates a manifest: known kind, required metadata keys
/// present, every referenced matrix file exists and parses.
inline ModelManifest read_manifest(const std::filesystem::path& path) {
  std::string bytes = detail::read_file_bytes(path);
  nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ValidationError("manifest " + path.string() +
                          " is not a JSON object");
  ModelManifest m;
  try {
    m.kind = j.at("kind").get<std::string>();
    m.version = j.at("version").get<std::uint32_t>();
    m.metadata = j.at("metadata");
    m.matrix_files =
        j.at("matrix_files").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed manifest " + path.string() + ": " +
                          e.what());
  }
  for (const auto& key : detail::required_metadata_keys(m.kind)) {
    if (!m.metadata.contains(key))
      throw ValidationError("manifest " + path.string() +
                            " is missing required metadata key \"" + key +
                            "\" for kind \"" + m.kind + "\"");
  }
  const auto dir = path.parent_path();
  for (const auto& [role, rel] : m.matrix_files) {
    const auto file = dir / rel;
    if (!std::filesystem::exists(file))
      throw ValidationError("manifest " + path.string() +
                            " references missing file " + file.string());
    read_matrix(file);  // must parse
  }
  return m;
}

}  // namespace emoreg
