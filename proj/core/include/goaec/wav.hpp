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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace goaec::audio {

// Mono 16-bit PCM.
struct AudioClip {
  std::vector<std::int16_t> samples;
  std::uint32_t sample_rate = 16000;

  double duration_seconds() const {
    return sample_rate ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }

  // Throws InvalidArgument for unsupported sample rates.
  void validate() const;
};

bool supported_sample_rate(std::uint32_t rate);

// RIFF/WAVE, PCM format 1, 16 bits, one channel. Reading rejects anything
// else with DataError.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
AudioClip decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& source_name = "<memory>");
void write_wav(const AudioClip& clip, const std::filesystem::path& path);
AudioClip read_wav(const std::filesystem::path& path);

// Linear-interpolation resampling to `out_len` samples.
std::vector<double> resample_linear(const std::vector<std::int16_t>& in, std::size_t out_len);

// Rounds and saturates to the 16-bit range; counts saturated samples.
std::int16_t saturate(double value, std::size_t* clipped = nullptr);

double mean_power(const std::vector<std::int16_t>& samples);
double mean_power(const std::vector<double>& samples);

}  // namespace goaec::audio
