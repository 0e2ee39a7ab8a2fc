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
#include <string>
#include <string_view>

namespace goaec {

// 64-bit FNV-1a. Stable across platforms and runs; used for seeds,
// fingerprints, and split assignment, never for security.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Hashes a sequence of fields with an unambiguous separator.
template <typename... Parts>
std::uint64_t hash_fields(const Parts&... parts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  ((h = fnv1a64(std::string_view(parts), h), h = fnv1a64(std::string_view("\x1f", 1), h)), ...);
  return h;
}

// splitmix64 finalizer. FNV-1a's high bits are poorly mixed for short
// inputs; run hashes through this before reading them as a uniform value.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::string to_hex(std::uint64_t value);

}  // namespace goaec
