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

#include "emotag/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "emotag/error.hpp"

namespace emotag {
namespace {

constexpr const char* kHeader = "track_id\tpath\tduration_s\tsplit\ttags";

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

TagVocabulary TagVocabulary::from_tags(std::vector<std::string> tags) {
  TagVocabulary v;
  v.tags = std::move(tags);
  for (int i = 0; i < static_cast<int>(v.tags.size()); ++i) {
    if (v.tags[i].empty()) fail("vocabulary", "empty tag name at index ", i);
    if (!v.index.emplace(v.tags[i], i).second)
      fail("vocabulary", "duplicate tag name '", v.tags[i], "'");
  }
  if (v.tags.empty()) fail("vocabulary", "vocabulary is empty");
  return v;
}

TagVocabulary TagVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open vocabulary file ", path.string());
  std::vector<std::string> tags;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (!line.empty()) tags.push_back(line);
  }
  return from_tags(std::move(tags));
}

void TagVocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail("io", "cannot write vocabulary file ", path.string());
  for (const auto& t : tags) out << t << "\n";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  if (s == "unlabeled") return Split::unlabeled;
  fail("parse", "unknown split '", s, "'");
}

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    case Split::unlabeled: return "unlabeled";
  }
  return "?";
}

TrackManifest TrackManifest::load(const std::filesystem::path& manifest_path,
                                  const std::filesystem::path& vocab_path) {
  TrackManifest m;
  m.vocabulary = TagVocabulary::load(vocab_path);

  std::ifstream in(manifest_path);
  if (!in) fail("io", "cannot open manifest ", manifest_path.string());

  std::string line;
  int line_no = 0;
  if (!std::getline(in, line))
    fail("parse", manifest_path.string(), ": empty file");
  ++line_no;
  if (strip_cr(line) != kHeader)
    fail("parse", manifest_path.string(), ":", line_no,
         ": bad header, expected '", kHeader, "'");

  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 5)
      fail("parse", manifest_path.string(), ":", line_no, ": expected 5 fields, got ",
           fields.size());

    TrackRecord r;
    r.track_id = fields[0];
    r.audio_path = fields[1];
    try {
      size_t pos = 0;
      r.duration_s = std::stod(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail("parse", manifest_path.string(), ":", line_no, ": bad duration '",
           fields[2], "'");
    }
    if (r.track_id.empty())
      fail("parse", manifest_path.string(), ":", line_no, ": empty track_id");
    if (!(r.duration_s > 0.0))
      fail("parse", manifest_path.string(), ":", line_no,
           ": duration must be > 0");
    try {
      r.split = parse_split(fields[3]);
    } catch (const Error&) {
      fail("parse", manifest_path.string(), ":", line_no, ": bad split '",
           fields[3], "'");
    }
    if (!fields[4].empty()) {
      for (auto& tag : split_on(fields[4], ',')) {
        if (tag.empty())
          fail("parse", manifest_path.string(), ":", line_no, ": empty tag name");
        if (!m.vocabulary.contains(tag))
          fail("vocabulary", "track '", r.track_id, "' uses tag '", tag,
               "' absent from the vocabulary");
        r.tags.push_back(tag);
      }
    }
    if (r.split == Split::unlabeled && !r.tags.empty())
      fail("integrity", "unlabeled track '", r.track_id, "' carries tags");
    if (!seen_ids.insert(r.track_id).second)
      fail("integrity", "duplicate track_id '", r.track_id, "'");
    m.records.push_back(std::move(r));
  }
  return m;
}

void TrackManifest::save(const std::filesystem::path& manifest_path) const {
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) fail("io", "cannot write manifest ", manifest_path.string());
  out << kHeader << "\n";
  for (const auto& r : records) {
    out << r.track_id << '\t' << r.audio_path << '\t' << r.duration_s << '\t'
        << to_string(r.split) << '\t';
    for (size_t i = 0; i < r.tags.size(); ++i) {
      if (i) out << ',';
      out << r.tags[i];
    }
    out << "\n";
  }
}

std::vector<const TrackRecord*> TrackManifest::split_records(Split split) const {
  std::vector<const TrackRecord*> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

const TrackRecord& TrackManifest::find(const std::string& track_id) const {
  for (const auto& r : records)
    if (r.track_id == track_id) return r;
  fail("integrity", "track_id '", track_id, "' not in manifest");
}

MatrixXf TrackManifest::label_matrix(Split split) const {
  if (split == Split::unlabeled)
    fail("empty-split", "labels are undefined for the unlabeled split");
  auto recs = split_records(split);
  if (recs.empty()) fail("empty-split", "split '", to_string(split), "' is empty");
  const int t = vocabulary.size();
  MatrixXf labels = MatrixXf::Zero(static_cast<Index>(recs.size()), t);
  for (Index i = 0; i < static_cast<Index>(recs.size()); ++i)
    for (const auto& tag : recs[i]->tags)
      labels(i, vocabulary.index.at(tag)) = 1.0f;
  return labels;
}

}  // namespace emotag
