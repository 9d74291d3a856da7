/*
 * Copyright 2026 emotag contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <fstream>

#include "emotag/error.hpp"
#include "emotag/manifest.hpp"
#include "testsupport.hpp"

using namespace emotag;

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::trunc);
  out << content;
}

struct Fixture {
  test::TempDir dir;
  std::filesystem::path vocab = dir.path() / "vocab.txt";
  std::filesystem::path manifest = dir.path() / "manifest.tsv";

  Fixture() { write_file(vocab, "happy\nsad\n"); }
};

constexpr const char* kHeader = "track_id\tpath\tduration_s\tsplit\ttags\n";

}  // namespace

TEST_SUITE("manifest") {

TEST_CASE("three-row manifest parses with T=2") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) +
                             "a\ta.wav\t10.0\ttrain\thappy\n"
                             "b\tb.wav\t12.5\tvalid\thappy,sad\n"
                             "c\tc.wav\t8.0\ttest\tsad\n");
  const auto m = TrackManifest::load(f.manifest, f.vocab);
  CHECK(m.vocabulary.size() == 2);
  CHECK(m.records.size() == 3);
  CHECK(m.records[1].tags == std::vector<std::string>{"happy", "sad"});
  CHECK(m.records[2].split == Split::test);
}

TEST_CASE("unlabeled row with empty tags yields empty tag set") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) + "u\tu.wav\t5.0\tunlabeled\t\n");
  const auto m = TrackManifest::load(f.manifest, f.vocab);
  REQUIRE(m.records.size() == 1);
  CHECK(m.records[0].tags.empty());
  CHECK(m.records[0].split == Split::unlabeled);
}

TEST_CASE("unknown tag raises a vocabulary error") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) + "a\ta.wav\t10.0\ttrain\tangry\n");
  CHECK_THROWS_WITH_AS(TrackManifest::load(f.manifest, f.vocab),
                       doctest::Contains("vocabulary"), Error);
}

TEST_CASE("malformed row names the line number") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) +
                             "a\ta.wav\t10.0\ttrain\thappy\n"
                             "b\tonly-two-fields\n");
  try {
    TrackManifest::load(f.manifest, f.vocab);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == "parse");
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("duplicate track id raises integrity error") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) +
                             "a\ta.wav\t10.0\ttrain\thappy\n"
                             "a\tb.wav\t11.0\tvalid\tsad\n");
  try {
    TrackManifest::load(f.manifest, f.vocab);
    FAIL("expected integrity error");
  } catch (const Error& e) {
    CHECK(e.kind() == "integrity");
  }
}

TEST_CASE("unlabeled row carrying tags is rejected") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) + "a\ta.wav\t10.0\tunlabeled\thappy\n");
  CHECK_THROWS_AS(TrackManifest::load(f.manifest, f.vocab), Error);
}

TEST_CASE("non-positive duration is rejected") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) + "a\ta.wav\t0\ttrain\thappy\n");
  CHECK_THROWS_AS(TrackManifest::load(f.manifest, f.vocab), Error);
}

TEST_CASE("label matrix basics") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) +
                             "a\ta.wav\t10.0\ttrain\thappy\n"
                             "b\tb.wav\t11.0\ttrain\thappy,sad\n"
                             "c\tc.wav\t12.0\ttrain\t\n");
  const auto m = TrackManifest::load(f.manifest, f.vocab);
  const MatrixXf labels = m.label_matrix(Split::train);
  REQUIRE(labels.rows() == 3);
  REQUIRE(labels.cols() == 2);
  CHECK(labels(0, 0) == 1.0f);
  CHECK(labels(0, 1) == 0.0f);
  CHECK(labels(1, 0) == 1.0f);
  CHECK(labels(1, 1) == 1.0f);
  CHECK(labels.row(2).sum() == 0.0f);  // track with no tags: all-zero row

  CHECK_THROWS_AS(m.label_matrix(Split::unlabeled), Error);
  CHECK_THROWS_AS(m.label_matrix(Split::valid), Error);  // empty split

  // Pure function: repeated calls identical.
  CHECK(m.label_matrix(Split::train) == labels);
}

TEST_CASE("parse -> serialize -> parse is the identity") {
  Fixture f;
  write_file(f.manifest, std::string(kHeader) +
                             "a\taudio/a.wav\t10.5\ttrain\tsad,happy\n"
                             "b\tb.wav\t11\tvalid\thappy\n"
                             "u\tu.wav\t5\tunlabeled\t\n");
  const auto m1 = TrackManifest::load(f.manifest, f.vocab);
  const auto roundtrip = f.dir.path() / "roundtrip.tsv";
  m1.save(roundtrip);
  const auto m2 = TrackManifest::load(roundtrip, f.vocab);
  REQUIRE(m1.records.size() == m2.records.size());
  for (size_t i = 0; i < m1.records.size(); ++i) CHECK(m1.records[i] == m2.records[i]);
  CHECK(m1.vocabulary.tags == m2.vocabulary.tags);
}

TEST_CASE("vocabulary round-trips in order") {
  test::TempDir dir;
  const auto v = TagVocabulary::from_tags({"z", "a", "m"});
  v.save(dir.path() / "v.txt");
  const auto v2 = TagVocabulary::load(dir.path() / "v.txt");
  CHECK(v2.tags == std::vector<std::string>{"z", "a", "m"});
  CHECK(v2.index.at("m") == 2);
}

TEST_CASE("duplicate vocabulary entries rejected") {
  CHECK_THROWS_AS(TagVocabulary::from_tags({"a", "a"}), Error);
}

}  // TEST_SUITE
