// Copyright (c) 2026 The goaec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "goaec/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "goaec/error.hpp"

namespace goaec::audio {

bool supported_sample_rate(std::uint32_t rate) {
  return rate == 8000 || rate == 16000 || rate == 22050 || rate == 44100;
}

void AudioClip::validate() const {
  if (!supported_sample_rate(sample_rate)) {
    throw InvalidArgument("unsupported sample rate " + std::to_string(sample_rate));
  }
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}
std::uint16_t get_u16(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

}  // namespace

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  clip.validate();
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, clip.sample_rate);
  put_u32(out, clip.sample_rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (std::int16_t s : clip.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

AudioClip decode_wav(const std::vector<std::uint8_t>& b, const std::string& source_name) {
  auto fail = [&](const std::string& why) { return DataError(source_name + ": " + why); };
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  AudioClip clip;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = get_u32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw fail("truncated chunk");
    if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
      if (size < 16) throw fail("short fmt chunk");
      const auto format = get_u16(b, body);
      const auto channels = get_u16(b, body + 2);
      clip.sample_rate = get_u32(b, body + 4);
      const auto bits = get_u16(b, body + 14);
      if (format != 1 || channels != 1 || bits != 16) throw fail("only mono 16-bit PCM is supported");
      have_fmt = true;
    } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        clip.samples[i] = static_cast<std::int16_t>(get_u16(b, body + 2 * i));
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw fail("no data chunk");
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
  const auto bytes = encode_wav(clip);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

std::vector<double> resample_linear(const std::vector<std::int16_t>& in, std::size_t out_len) {
  std::vector<double> out(out_len);
  if (in.empty() || out_len == 0) return out;
  if (in.size() == 1 || out_len == 1) {
    std::fill(out.begin(), out.end(), static_cast<double>(in.front()));
    return out;
  }
  const double step = static_cast<double>(in.size() - 1) / static_cast<double>(out_len - 1);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double x = step * static_cast<double>(i);
    const auto k = std::min(static_cast<std::size_t>(x), in.size() - 2);
    const double frac = x - static_cast<double>(k);
    out[i] = (1.0 - frac) * in[k] + frac * in[k + 1];
  }
  return out;
}

std::int16_t saturate(double value, std::size_t* clipped) {
  const double r = std::nearbyint(value);
  if (r > 32767.0 || r < -32768.0) {
    if (clipped) ++*clipped;
    return r > 0 ? std::int16_t{32767} : std::int16_t{-32768};
  }
  return static_cast<std::int16_t>(r);
}

double mean_power(const std::vector<std::int16_t>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (std::int16_t s : samples) acc += static_cast<double>(s) * s;
  return acc / static_cast<double>(samples.size());
}

double mean_power(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return acc / static_cast<double>(samples.size());
}

}  // namespace goaec::audio
