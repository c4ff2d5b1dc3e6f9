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

#include "ust/encoder.hpp"

#include <string>

#include "ust/errors.hpp"

namespace ust {

EmbeddingBlock::EmbeddingBlock(const std::string& name, std::size_t in, std::size_t hidden, nn::Rng& rng)
    : linear0(name + ".linear0", in, hidden, rng),
      norm0(name + ".norm0", hidden),
      linear1(name + ".linear1", hidden, hidden, rng),
      norm1(name + ".norm1", hidden) {}

void EmbeddingBlock::collect(nn::StateRefs& refs) {
  linear0.collect(refs);
  norm0.collect(refs);
  linear1.collect(refs);
  norm1.collect(refs);
}

EncoderParams::EncoderParams(const EncoderConfig& cfg, nn::Rng& rng) : config(cfg) {
  if (cfg.hidden == 0 || cfg.input_width == 0) throw ConfigError("encoder widths must be positive");
  stages.reserve(cfg.refinements + 1);
  for (std::size_t s = 0; s <= cfg.refinements; ++s) {
    const std::size_t in = s == 0 ? cfg.input_width : cfg.hidden + cfg.input_width;
    stages.emplace_back("encoder.stage" + std::to_string(s), in, cfg.hidden, rng);
  }
}

void EncoderParams::collect(nn::StateRefs& refs) {
  for (auto& s : stages) s.collect(refs);
}

nn::Var embed_stage(nn::Tape& tape, nn::Var rows, EmbeddingBlock& block, Mode mode) {
  if (rows.value().cols() != block.input_width()) {
    throw DimensionError("embedding expects width " + std::to_string(block.input_width()) + ", got " +
                         rows.value().shape_string());
  }
  const bool train = mode == Mode::kTrain;
  nn::Var x = ad::relu(block.norm0(tape, block.linear0(tape, rows), train));
  return ad::relu(block.norm1(tape, block.linear1(tape, x), train));
}

nn::Var batch_st_pooling(nn::Tape& tape, std::span<const PointSet* const> batch, EncoderParams& params, Mode mode,
                         EncoderTrace* trace) {
  if (batch.empty()) throw EmptySetError("batch_st_pooling: empty batch");
  const std::size_t q = params.config.input_width;
  std::size_t total = 0;
  for (const PointSet* ps : batch) {
    if (ps->size() == 0) throw EmptySetError("batch_st_pooling: empty point set");
    if (ps->encoding.cols() != q) {
      throw DimensionError("point set width " + std::to_string(ps->encoding.cols()) + " does not match encoder input " +
                           std::to_string(q));
    }
    total += ps->size();
  }

  Tensor stacked = Tensor::matrix(total, q);
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> owner(total);
  std::vector<bool> mask(total, true);
  std::size_t row = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const PointSet& ps = *batch[b];
    for (std::size_t k = 0; k < ps.size(); ++k, ++row) {
      std::copy(ps.encoding.row(k).begin(), ps.encoding.row(k).end(), stacked.row(row).begin());
      owner[row] = b;
      if (!ps.mask.empty()) mask[row] = ps.mask[k];
    }
    offsets.push_back(row);
  }

  nn::Var raw = tape.constant(std::move(stacked));
  nn::Var context;
  for (std::size_t s = 0; s < params.stages.size(); ++s) {
    nn::Var input = s == 0 ? raw : ad::concat_cols(ad::gather_rows(context, owner), raw);
    nn::Var embedded = embed_stage(tape, input, params.stages[s], mode);
    ad::PoolResult pooled = ad::segment_max(embedded, offsets, mask);
    context = pooled.pooled;
    if (trace != nullptr) {
      trace->embeddings.push_back(embedded);
      trace->pools.push_back(std::move(pooled));
    }
  }
  if (trace != nullptr) trace->offsets = offsets;
  return context;
}

Tensor st_pooling(const PointSet& ps, EncoderParams& params, Mode mode) {
  nn::Tape tape(false);
  const PointSet* one[] = {&ps};
  nn::Var ctx = batch_st_pooling(tape, one, params, mode);
  const Tensor& v = ctx.value();
  return Tensor({v.cols()}, std::vector<double>(v.values().begin(), v.values().end()));
}

}  // namespace ust
