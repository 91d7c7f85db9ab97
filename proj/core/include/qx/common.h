// Copyright 2026 The qxplain Authors.
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

#ifndef QX_COMMON_H_
#define QX_COMMON_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qx {

std::string ToLower(std::string_view s);
std::string Trim(std::string_view s);
// Lowercases and collapses runs of whitespace into one space.
std::string NormalizeText(std::string_view s);
std::vector<std::string> Split(std::string_view s, char delim);
bool StartsWith(std::string_view s, std::string_view prefix);

// Shortest representation that parses back to the same double; "inf",
// "-inf" for infinities. Used for every persisted number.
std::string FormatExact(double v);
// Human-facing number: at most two decimals, trailing zeros trimmed.
std::string FormatDisplay(double v);
std::optional<double> ParseDouble(std::string_view s);

std::string Sha256Hex(std::string_view data);

// e.g. "20261016T060512123Z" (millisecond resolution, UTC).
std::string UtcTimestampCompact();
std::string UtcTimestampIso();

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view content);

}  // namespace qx

#endif  // QX_COMMON_H_
