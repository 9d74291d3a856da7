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

#include "emotag/audio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "emotag/error.hpp"

namespace emotag {
namespace {

uint32_t read_u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t read_u16le(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

double decode_sample(const uint8_t* p, uint16_t format, uint16_t bits) {
  if (format == 1) {  // integer PCM
    switch (bits) {
      case 8:
        return (static_cast<int>(*p) - 128) / 128.0;
      case 16: {
        int16_t v;
        std::memcpy(&v, p, 2);
        return v / 32768.0;
      }
      case 24: {
        int32_t v = (p[0] << 8) | (p[1] << 16) | (static_cast<int32_t>(p[2]) << 24);
        return (v >> 8) / 8388608.0;
      }
      case 32: {
        int32_t v;
        std::memcpy(&v, p, 4);
        return v / 2147483648.0;
      }
      default:
        break;
    }
  } else if (format == 3) {  // IEEE float
    if (bits == 32) {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    if (bits == 64) {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  fail("decode", "unsupported WAV sample format ", format, "/", bits, " bits");
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("decode", "cannot open audio file ", path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail("decode", path.string(), ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    uint32_t len = read_u32le(bytes.data() + pos + 4);
    if (pos + 8 + len > bytes.size()) fail("decode", path.string(), ": truncated chunk");
    const uint8_t* body = bytes.data() + pos + 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) fail("decode", path.string(), ": short fmt chunk");
      format = read_u16le(body);
      if (format == 0xFFFE && len >= 40)  // WAVE_FORMAT_EXTENSIBLE
        format = read_u16le(body + 24);
      channels = read_u16le(body + 2);
      rate = read_u32le(body + 4);
      bits = read_u16le(body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = body;
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }
  if (!data || channels == 0 || rate == 0)
    fail("decode", path.string(), ": missing fmt or data chunk");

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_size = bytes_per_sample * channels;
  if (frame_size == 0) fail("decode", path.string(), ": zero frame size");
  const size_t n_frames = data_len / frame_size;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(n_frames);
  for (size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c)
      acc += decode_sample(data + i * frame_size + c * bytes_per_sample, format, bits);
    clip.samples[i] = static_cast<float>(acc / channels);
  }
  return clip;
}

void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
               int sample_rate) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("io", "cannot write wav ", path.string());

  auto put_u32 = [&](uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](uint16_t v) {
    uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
  };

  const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(static_cast<uint32_t>(sample_rate));
  put_u32(static_cast<uint32_t>(sample_rate) * 2);
  put_u16(2);
  put_u16(16);
  out.write("data", 4);
  put_u32(data_len);
  for (float s : samples) {
    double v = std::round(std::fmin(1.0, std::fmax(-1.0, s)) * 32767.0);
    auto iv = static_cast<int16_t>(v);
    uint8_t b[2] = {static_cast<uint8_t>(iv & 0xFF),
                    static_cast<uint8_t>((iv >> 8) & 0xFF)};
    out.write(reinterpret_cast<char*>(b), 2);
  }
}

std::vector<float> resample(const std::vector<float>& in, int from_rate, int to_rate) {
  if (from_rate == to_rate) return in;
  if (from_rate <= 0 || to_rate <= 0) fail("decode", "bad sample rates");
  const auto n_in = static_cast<int64_t>(in.size());
  const auto n_out = static_cast<int64_t>(
      std::llround(static_cast<double>(n_in) * to_rate / from_rate));
  std::vector<float> out(static_cast<size_t>(n_out));

  // Anti-aliasing cutoff in input-sample units; full band when upsampling.
  const double fc = 0.5 * std::min(1.0, static_cast<double>(to_rate) / from_rate);
  constexpr int kHalfTaps = 24;
  const double step = static_cast<double>(from_rate) / to_rate;

  for (int64_t i = 0; i < n_out; ++i) {
    const double center = i * step;
    const auto j0 = static_cast<int64_t>(std::ceil(center)) - kHalfTaps;
    double acc = 0.0, wsum = 0.0;
    for (int64_t j = j0; j < j0 + 2 * kHalfTaps; ++j) {
      const double x = center - static_cast<double>(j);
      const double sinc =
          x == 0.0 ? 2.0 * fc : std::sin(2.0 * M_PI * fc * x) / (M_PI * x);
      const double hann = 0.5 + 0.5 * std::cos(M_PI * x / kHalfTaps);
      const double w = sinc * hann;
      wsum += w;
      if (j >= 0 && j < n_in) acc += w * in[static_cast<size_t>(j)];
    }
    // Kernel-sum normalization keeps DC at unit gain.
    out[static_cast<size_t>(i)] = static_cast<float>(acc / (wsum == 0.0 ? 1.0 : wsum));
  }
  return out;
}

AudioClip load_audio(const TrackRecord& record, int sample_rate,
                     const std::filesystem::path& audio_root) {
  AudioClip clip;
  try {
    clip = read_wav(audio_root / record.audio_path);
  } catch (const Error& e) {
    fail("decode", "track '", record.track_id, "': ", e.what());
  }
  if (clip.sample_rate != sample_rate) {
    clip.samples = resample(clip.samples, clip.sample_rate, sample_rate);
    clip.sample_rate = sample_rate;
  }
  return clip;
}

}  // namespace emotag
