// tests/unit/test_tensorio.cpp

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

#include "emoreg/tensorio.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <fstream>

#include "test_util.hpp"

using namespace emoreg;
using emoreg_test::TempDir;

TEST_CASE("matrix roundtrip is bit-exact for binary32 values", "[tensorio]") {
  TempDir dir("roundtrip");
  Rng rng(42);
  // Shapes chosen to cover degenerate rows/cols and non-square payloads.
  const std::vector<std::pair<std::size_t, std::size_t>> shapes = {
      {1, 1}, {2, 3}, {7, 1}, {1, 9}, {64, 256}};
  for (auto [r, c] : shapes) {
    Matrix m = emoreg_test::random_f32_matrix(r, c, rng, 100.0);
    const auto path = dir / ("m" + std::to_string(r) + "x" + std::to_string(c) + ".emo1");
    write_matrix(m, path);
    Matrix back = read_matrix(path);
    REQUIRE(back == m);
  }
}

TEST_CASE("1x1 matrix writes a 21-byte file", "[tensorio]") {
  TempDir dir("size");
  Matrix m(1, 1);
  m.at(0, 0) = 0.0;
  const auto path = dir / "one.emo1";
  write_matrix(m, path);
  // 4 magic + 12 header (version, rows, cols) + 4 data
  REQUIRE(std::filesystem::file_size(path) == 20);
}

TEST_CASE("matrix with NaN is rejected on write", "[tensorio]") {
  TempDir dir("nan");
  Matrix m(2, 2, 1.0);
  m.at(1, 1) = std::nan("");
  REQUIRE_THROWS_AS(write_matrix(m, dir / "bad.emo1"), ValidationError);
}

TEST_CASE("bad magic is rejected with a distinct error", "[tensorio]") {
  TempDir dir("magic");
  const auto path = dir / "bad.emo1";
  {
    std::ofstream out(path, std::ios::binary);
    out << "XXXX";
    std::string rest(16, '\0');
    out.write(rest.data(), rest.size());
  }
  REQUIRE_THROWS_WITH(read_matrix(path),
                      Catch::Matchers::ContainsSubstring("bad magic"));
}

TEST_CASE("truncated payload is rejected", "[tensorio]") {
  TempDir dir("trunc");
  Matrix m(10, 10, 1.0);
  const auto path = dir / "m.emo1";
  write_matrix(m, path);
  // keep header but only 50 of the 100 values
  std::string bytes = detail::read_file_bytes(path);
  bytes.resize(16 + 4 * 50);
  detail::write_file_bytes(path, bytes);
  REQUIRE_THROWS_WITH(read_matrix(path),
                      Catch::Matchers::ContainsSubstring("size mismatch"));
}

TEST_CASE("trailing bytes beyond the header shape are rejected", "[tensorio]") {
  TempDir dir("trailing");
  Matrix m(2, 2, 1.0);
  const auto path = dir / "m.emo1";
  write_matrix(m, path);
  std::string bytes = detail::read_file_bytes(path);
  bytes.append(4, '\0');
  detail::write_file_bytes(path, bytes);
  REQUIRE_THROWS_AS(read_matrix(path), ValidationError);
}

TEST_CASE("non-finite payload value is rejected on read", "[tensorio]") {
  TempDir dir("inf");
  Matrix m(1, 2, 1.0);
  const auto path = dir / "m.emo1";
  write_matrix(m, path);
  std::string bytes = detail::read_file_bytes(path);
  // patch the first payload float to +inf (0x7f800000, little-endian)
  bytes[16] = '\x00';
  bytes[17] = '\x00';
  bytes[18] = '\x80';
  bytes[19] = '\x7f';
  detail::write_file_bytes(path, bytes);
  REQUIRE_THROWS_WITH(read_matrix(path),
                      Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("the on-disk layout is little-endian with the documented header",
          "[tensorio]") {
  TempDir dir("layout");
  Matrix m(1, 2);
  m.at(0, 0) = 1.0;  // 0x3f800000
  m.at(0, 1) = -2.0; // 0xc0000000
  const auto path = dir / "m.emo1";
  write_matrix(m, path);
  const std::string bytes = detail::read_file_bytes(path);
  const std::string expected = {
      'E',    'M',    'O',    '1',            // magic
      '\x01', '\x00', '\x00', '\x00',         // version 1
      '\x01', '\x00', '\x00', '\x00',         // rows 1
      '\x02', '\x00', '\x00', '\x00',         // cols 2
      '\x00', '\x00', '\x80', '\x3f',         // 1.0f
      '\x00', '\x00', '\x00', '\xc0',         // -2.0f
  };
  REQUIRE(bytes == expected);
}

TEST_CASE("embedding set loads rows with their labels", "[tensorio]") {
  TempDir dir("embed");
  Matrix m(4, 3);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    m.data[i] = static_cast<double>(i);
  write_matrix(m, dir / "e.emo1");
  write_labels({EmotionLabel::Neutral, EmotionLabel::Angry, EmotionLabel::Sad,
                EmotionLabel::Happy},
               dir / "labels.json");
  EmbeddingSet set = load_embedding_set(dir / "e.emo1", dir / "labels.json");
  REQUIRE(set.size() == 4);
  REQUIRE(set.dim() == 3);
  REQUIRE(set.labels[1] == EmotionLabel::Angry);
  REQUIRE(set.embeddings.at(1, 0) == 3.0);
}

TEST_CASE("label/row count mismatch is rejected", "[tensorio]") {
  TempDir dir("mismatch");
  write_matrix(Matrix(4, 3, 0.5), dir / "e.emo1");
  write_labels({EmotionLabel::Neutral, EmotionLabel::Angry, EmotionLabel::Sad},
               dir / "labels.json");
  REQUIRE_THROWS_WITH(load_embedding_set(dir / "e.emo1", dir / "labels.json"),
                      Catch::Matchers::ContainsSubstring("mismatch"));
}

TEST_CASE("labels outside the four-emotion set are rejected", "[tensorio]") {
  TempDir dir("surprise");
  detail::write_file_bytes(dir / "labels.json", "[\"Neutral\",\"Surprise\"]");
  REQUIRE_THROWS_WITH(read_labels(dir / "labels.json"),
                      Catch::Matchers::ContainsSubstring("Surprise"));
}

TEST_CASE("manifest roundtrip and validation", "[tensorio]") {
  TempDir dir("manifest");
  write_matrix(Matrix(2, 2, 1.0), dir / "weights.emo1");
  ModelManifest m;
  m.kind = "schedule";
  m.metadata["beta0"] = 0.05;
  m.metadata["beta1"] = 20.0;
  m.metadata["t_min"] = 1e-3;
  m.matrix_files["weights"] = "weights.emo1";
  write_manifest(m, dir / "sched.json");
  ModelManifest back = read_manifest(dir / "sched.json");
  REQUIRE(back.kind == "schedule");
  REQUIRE(back.metadata.at("beta1").get<double>() == 20.0);
  REQUIRE(back.matrix_files.at("weights") == "weights.emo1");

  SECTION("missing required key") {
    m.metadata.erase("t_min");
    write_manifest(m, dir / "bad.json");
    REQUIRE_THROWS_WITH(read_manifest(dir / "bad.json"),
                        Catch::Matchers::ContainsSubstring("t_min"));
  }
  SECTION("missing referenced matrix") {
    std::filesystem::remove(dir / "weights.emo1");
    REQUIRE_THROWS_WITH(read_manifest(dir / "sched.json"),
                        Catch::Matchers::ContainsSubstring("missing file"));
  }
  SECTION("unknown kind") {
    ModelManifest bad;
    bad.kind = "mystery";
    REQUIRE_THROWS_AS(write_manifest(bad, dir / "x.json"), ValidationError);
  }
}
