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

#include <cstddef>
#include <span>
#include <vector>

#include "ust/nn.hpp"
#include "ust/representation.hpp"

namespace ust {

enum class Mode { kTrain, kEval };

struct EncoderConfig {
  std::size_t input_width = 10;
  std::size_t hidden = 128;
  std::size_t refinements = 2;
};

/// Two (linear -> batch-norm -> ReLU) layers applied row-wise.
struct EmbeddingBlock {
  nn::Linear linear0;
  nn::BatchNorm norm0;
  nn::Linear linear1;
  nn::BatchNorm norm1;

  EmbeddingBlock() = default;
  EmbeddingBlock(const std::string& name, std::size_t in, std::size_t hidden, nn::Rng& rng);

  std::size_t input_width() const { return linear0.in_features(); }
  void collect(nn::StateRefs& refs);
};

/// Stage 0 embeds raw rows (width Q); stage r >= 1 embeds [context_{r-1}, raw row]
/// (width H + Q). Stages never share weights.
struct EncoderParams {
  EncoderConfig config;
  std::vector<EmbeddingBlock> stages;

  EncoderParams() = default;
  EncoderParams(const EncoderConfig& config, nn::Rng& rng);
  void collect(nn::StateRefs& refs);
};

nn::Var embed_stage(nn::Tape& tape, nn::Var rows, EmbeddingBlock& block, Mode mode);

/// Per-stage intermediates, kept when the caller asks for them.
struct EncoderTrace {
  std::vector<nn::Var> embeddings;  // [sum K x H] per stage, pre-pool
  std::vector<ad::PoolResult> pools;
  std::vector<std::size_t> offsets;
};

/// Segmented batch encoding: row b of the result is the context of sample b.
/// Samples are never pooled together; batch-norm statistics (train mode) are shared.
nn::Var batch_st_pooling(nn::Tape& tape, std::span<const PointSet* const> batch, EncoderParams& params,
                         Mode mode, EncoderTrace* trace = nullptr);

/// Single point set, no gradient; returns the [H] context.
Tensor st_pooling(const PointSet& ps, EncoderParams& params, Mode mode);

}  // namespace ust
