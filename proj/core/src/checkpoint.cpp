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

#include "ust/kv.hpp"
#include "ust/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ust/errors.hpp"

namespace ust {

namespace {

constexpr const char* kMagic = "UST-CHECKPOINT";

std::string format_double(double v) { return kv::from_double(v); }

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : records)
    if (n == name) return &t;
  return nullptr;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os << kMagic << ' ' << ckpt.version << ' ' << ckpt.hidden_size << '\n';
  for (const auto& [k, v] : ckpt.meta) os << "meta " << k << ' ' << v << '\n';
  for (const auto& [name, t] : ckpt.records) {
    os << "param " << name << ' ' << t.rank();
    for (std::size_t d : t.shape()) os << ' ' << d;
    os << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) os << ' ';
      os << format_double(t[i]);
    }
    os << '\n';
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  Checkpoint ckpt;
  std::string line;
  if (!std::getline(is, line)) throw DataError("checkpoint: empty input");
  {
    std::istringstream hs(line);
    std::string magic;
    hs >> magic >> ckpt.version >> ckpt.hidden_size;
    if (magic != kMagic || !hs) throw DataError("checkpoint: bad header '" + line + "'");
    if (ckpt.version != Checkpoint::kFormatVersion) {
      throw DataError("checkpoint: unsupported format version " + std::to_string(ckpt.version));
    }
  }
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls >> std::ws, value);
      ckpt.meta[key] = value;
    } else if (kind == "param") {
      std::string name;
      std::size_t rank = 0;
      ls >> name >> rank;
      std::vector<std::size_t> shape(rank);
      for (auto& d : shape) ls >> d;
      if (!ls) throw DataError("checkpoint line " + std::to_string(line_no) + ": bad record header");
      std::string values_line;
      if (!std::getline(is, values_line)) throw DataError("checkpoint: missing values for " + name);
      ++line_no;
      std::vector<double> values;
      values.reserve(shape_product(shape));
      std::istringstream vs(values_line);
      std::string tok;
      while (vs >> tok) values.push_back(std::strtod(tok.c_str(), nullptr));
      if (values.size() != shape_product(shape)) {
        throw DataError("checkpoint line " + std::to_string(line_no) + ": " + name + " expects " +
                        std::to_string(shape_product(shape)) + " values, found " + std::to_string(values.size()));
      }
      ckpt.records.emplace_back(name, Tensor(std::move(shape), std::move(values)));
    } else {
      throw DataError("checkpoint line " + std::to_string(line_no) + ": unknown record '" + kind + "'");
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint " + path.string());
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

void capture_state(const nn::StateRefs& refs, Checkpoint& ckpt) {
  for (const ad::Parameter* p : refs.params) ckpt.records.emplace_back(p->name, p->value);
  for (const auto& [name, t] : refs.buffers) ckpt.records.emplace_back(name, *t);
}

void restore_state(const Checkpoint& ckpt, nn::StateRefs& refs) {
  auto load = [&](const std::string& name, Tensor& dst) {
    const Tensor* src = ckpt.find(name);
    if (src == nullptr) throw DataError("checkpoint is missing '" + name + "'");
    if (src->shape() != dst.shape()) {
      throw DataError("checkpoint shape for '" + name + "' is " + src->shape_string() + ", model expects " +
                      dst.shape_string());
    }
    dst = *src;
  };
  for (ad::Parameter* p : refs.params) {
    load(p->name, p->value);
    p->zero_grad();
  }
  for (auto& [name, t] : refs.buffers) load(name, *t);
}

}  // namespace ust
