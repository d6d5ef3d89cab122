// Copyright 2026 The dceeval Authors
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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dceeval::csv {

using Row = std::vector<std::string>;

/// Quote a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

/// Join escaped fields with commas; no line terminator.
std::string format_row(const Row& fields);

/// RFC 4180 parser. Accepts LF or CRLF line endings; a trailing newline does
/// not produce an empty row. Throws on an unterminated quoted field.
std::vector<Row> parse(std::string_view text);

std::vector<Row> read_file(const std::filesystem::path& path);

/// Shortest decimal representation that round-trips; +inf as "inf".
std::string format_number(double value);

/// Inverse of format_number. Throws with the offending text on failure.
double parse_number(std::string_view text);

}  // namespace dceeval::csv
