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
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ust/tensor.hpp"

namespace ust::ad {

/// A trainable tensor with its gradient slot. Gradients accumulate across
/// `Tape::backward` calls until `zero_grad` is called.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad();
};

class Tape;

/// Handle to a node recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  bool valid() const { return tape != nullptr; }
};

/// Linear reverse-mode tape. Nodes are appended in evaluation order, so walking
/// the tape backwards is a valid topological order.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  /// With `record_gradients` false, no backward closures are stored and
  /// `backward` is unavailable (inference mode).
  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  Var constant(Tensor value);
  /// Registers a parameter as a leaf. Registering the same parameter twice
  /// returns the same node.
  Var parameter(Parameter& p);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient of the last `backward` call w.r.t. the node (zero-shaped if none).
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from a 1x1 node. Parameter gradients are added to
  /// `Parameter::grad`.
  void backward(Var loss);

  // Op-implementation interface.
  Var push(Tensor value, bool needs_grad, BackwardFn fn);
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  bool any_needs_grad(std::initializer_list<Var> vars) const;
  /// Gradient accumulator for a node, allocated on first use.
  Tensor& grad_acc(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  bool recording_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// ---- operations ----------------------------------------------------------

Var matmul(Var a, Var b);
/// x [K x Din] * weight [Din x Dout] + bias [Dout], bias broadcast over rows.
Var linear(Var x, Var weight, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
/// out row r = a row indices[r]; backward scatter-adds.
Var gather_rows(Var a, std::vector<std::size_t> indices);
/// out row r = candidates[choice[r]] row r. All candidates share a shape.
Var select_rows(const std::vector<Var>& candidates, const std::vector<std::size_t>& choice);
Var sum(Var a);
Var mean(Var a);
/// [n x m] -> [n x 1]
Var row_sum(Var a);

struct PoolResult {
  Var pooled;                        // [B x D]
  std::vector<std::size_t> argmax;   // B*D global row indices, row-major
};

/// Max pool rows over segments [offsets[b], offsets[b+1]). `mask`, when
/// non-empty, excludes rows whose bit is false. Ties keep the first row.
/// Throws EmptySetError for a segment with no unmasked row.
PoolResult segment_max(Var x, const std::vector<std::size_t>& offsets,
                       const std::vector<bool>& mask = {});

struct BatchNormBuffers {
  Tensor running_mean;
  Tensor running_var;
};

struct BatchNormOptions {
  bool train = true;
  double momentum = 0.1;
  double epsilon = 1e-5;
};

/// Per-channel normalisation over all rows. Train mode updates the running
/// buffers (unbiased variance for the running estimate).
Var batch_norm(Var x, Var gamma, Var beta, BatchNormBuffers& buffers,
               const BatchNormOptions& options);

// ---- kernels shared with tests and oracles -------------------------------

/// out(r,:) = (accumulate ? out(r,:) : 0) + sum_i a(r,i) * b(i,:). Each output row is
/// computed with the same operation sequence, independent of its position.
void gemm_rows(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
Tensor transpose(const Tensor& a);

}  // namespace ust::ad
