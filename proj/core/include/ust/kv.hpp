// Copyright 2026 The UST Authors
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
#include <iosfwd>
#include <map>
#include <string>

namespace ust::kv {

using Map = std::map<std::string, std::string>;

/// Flat `key=value` lines; `#` starts a comment; blank lines ignored.
Map parse(std::istream& is, const std::string& source_name = "<stream>");
Map parse_file(const std::filesystem::path& path);
std::string format(const Map& map);

/// Shortest decimal text that parses back to exactly `v`.
std::string from_double(double v);

double to_double(const std::string& key, const std::string& value);
std::int64_t to_int(const std::string& key, const std::string& value);
std::size_t to_size(const std::string& key, const std::string& value);
bool to_bool(const std::string& key, const std::string& value);

}  // namespace ust::kv
