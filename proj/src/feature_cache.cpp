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

#include "emotag/feature_cache.hpp"

#include <atomic>
#include <cstring>
#include <fstream>

#include <unistd.h>

#include "emotag/error.hpp"

namespace emotag {
namespace {

constexpr char kMagic[4] = {'E', 'M', 'O', 'F'};
constexpr uint8_t kVersion = 1;

// Pipeline frame rates at 44.1 kHz: mel is cached post-pooling
// (hop 512 * factor 10), hpcp at hop 2048.
double default_frame_rate(FeatureKind k) {
  return k == FeatureKind::mel ? 44100.0 / 5120.0 : 44100.0 / 2048.0;
}

void put_u32le(std::ofstream& out, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

const char* to_string(FeatureKind k) {
  return k == FeatureKind::mel ? "mel" : "hpcp";
}

void FeatureMatrix::validate() const {
  const int expected = kind == FeatureKind::mel ? kMelBins : kHpcpBins;
  if (rows() != expected)
    fail("shape", to_string(kind), " matrix for '", track_id, "' has ", rows(),
         " rows, expected ", expected);
  if (frames() <= 0)
    fail("shape", to_string(kind), " matrix for '", track_id, "' has no frames");
}

std::filesystem::path cache_path(const std::filesystem::path& dir,
                                 const std::string& track_id, FeatureKind kind) {
  return dir / (track_id + "." + to_string(kind) + ".emof");
}

bool cache_exists(const std::filesystem::path& dir, const std::string& track_id,
                  FeatureKind kind) {
  return std::filesystem::exists(cache_path(dir, track_id, kind));
}

void write_cache(const FeatureMatrix& m, const std::filesystem::path& dir) {
  m.validate();
  std::filesystem::create_directories(dir);
  const auto final_path = cache_path(dir, m.track_id, m.kind);
  // Unique temp name per writer so concurrent extractors never share one.
  static std::atomic<uint64_t> tmp_counter{0};
  const auto tmp_path = final_path.string() + ".tmp." + std::to_string(getpid()) +
                        "." + std::to_string(tmp_counter.fetch_add(1));

  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) fail("io", "cannot write cache file ", tmp_path);
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    out.put(static_cast<char>(m.kind));
    put_u32le(out, static_cast<uint32_t>(m.rows()));
    put_u32le(out, static_cast<uint32_t>(m.frames()));
    // Row-major payload; the in-memory matrix is column-major.
    std::vector<float> row(static_cast<size_t>(m.frames()));
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.frames(); ++c) row[static_cast<size_t>(c)] = m.data(r, c);
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) fail("io", "write failed for ", tmp_path);
  }
  std::filesystem::rename(tmp_path, final_path);
}

FeatureMatrix read_cache(const std::string& track_id, FeatureKind kind,
                         const std::filesystem::path& dir) {
  const auto path = cache_path(dir, track_id, kind);
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail("cache-miss", "no cached ", to_string(kind), " features for track '",
         track_id, "' (expected ", path.string(), "); run 'extract' first");

  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 14) fail("corrupt-cache", path.string(), ": truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail("corrupt-cache", path.string(), ": bad magic");
  if (bytes[4] != kVersion)
    fail("corrupt-cache", path.string(), ": unsupported version ", int(bytes[4]));
  if (bytes[5] > 1) fail("corrupt-cache", path.string(), ": bad kind byte ", int(bytes[5]));
  const auto file_kind = static_cast<FeatureKind>(bytes[5]);
  if (file_kind != kind)
    fail("corrupt-cache", path.string(), ": kind mismatch");
  const uint32_t rows = get_u32le(bytes.data() + 6);
  const uint32_t frames = get_u32le(bytes.data() + 10);
  const size_t expected = 14 + static_cast<size_t>(rows) * frames * sizeof(float);
  if (bytes.size() != expected)
    fail("corrupt-cache", path.string(), ": payload length ", bytes.size() - 14,
         " != rows*frames*4 = ", expected - 14);

  FeatureMatrix m;
  m.kind = file_kind;
  m.track_id = track_id;
  m.frame_rate = default_frame_rate(file_kind);
  m.data.resize(rows, frames);
  const uint8_t* p = bytes.data() + 14;
  for (uint32_t r = 0; r < rows; ++r)
    for (uint32_t c = 0; c < frames; ++c) {
      float v;
      std::memcpy(&v, p, sizeof(float));
      p += sizeof(float);
      m.data(r, c) = v;
    }
  m.validate();
  return m;
}

}  // namespace emotag
