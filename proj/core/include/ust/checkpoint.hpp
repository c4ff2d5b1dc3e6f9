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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ust/nn.hpp"

namespace ust {

/// Text checkpoint:
///
///   UST-CHECKPOINT <version> <hidden_size>
///   meta <key> <value>            (zero or more)
///   param <name> <rank> <d0> ...  (one per tensor, followed by a line of values)
///   <v0> <v1> ...
///
/// Values are written with 17 significant digits.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  int version = kFormatVersion;
  std::size_t hidden_size = 0;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> records;

  const Tensor* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies parameter values and buffers into records.
void capture_state(const nn::StateRefs& refs, Checkpoint& ckpt);
/// Restores every parameter and buffer from records; missing names or
/// mismatched shapes are a DataError.
void restore_state(const Checkpoint& ckpt, nn::StateRefs& refs);

}  // namespace ust
