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

#include <cstddef>
#include <string>
#include <string_view>

namespace goaec::utf8 {

// Decodes UTF-8 into scalar values; malformed sequences become U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view chars);
std::string encode(char32_t c);

// Number of scalar values in a UTF-8 string.
std::size_t length(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace goaec::utf8
