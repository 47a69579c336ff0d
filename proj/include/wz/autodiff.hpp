// Copyright 2026 The wzlearn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wz {

// Rows index independent examples of a batch, columns index features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A learnable array together with its gradient accumulator and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix init);

  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::int64_t step_count = 0;

  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update of every parameter, then zeroes the gradients.
void adam_step(std::span<Parameter* const> params, const AdamOptions& opts = {});

/// Handle to a node of a Graph. Only meaningful for the graph that issued it.
struct Var {
  int index = -1;
};

/// Append-only tape for reverse-mode differentiation.
///
/// Every node stores its forward value as a (batch x features) matrix. Nodes
/// are appended in evaluation order, so the node list is already a valid
/// topological order and backward() is a single reverse sweep.
class Graph {
 public:
  Var parameter(Parameter& p);
  Var constant(Matrix value);

  /// input (B x n), weights (m x n), bias (1 x m) -> input * weights^T + bias.
  Var dense(Var input, Var weights, Var bias);
  Var leaky_relu(Var input, double slope);
  /// Row-wise log of the normalized exponentials.
  Var log_softmax(Var logits);
  /// Row-wise log-sum-exp, (B x K) -> (B x 1).
  Var logsumexp(Var logits);
  Var exp(Var input);
  Var square(Var input);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  /// (1 x n) -> (rows x n)
  Var broadcast_rows(Var row, Eigen::Index rows);
  /// (B x n), (B x m) -> (B x (n + m))
  Var concat_cols(Var a, Var b);
  /// (B x n) -> (B x 1)
  Var row_sum(Var a);
  /// Mean over all entries -> (1 x 1)
  Var mean(Var a);

  const Matrix& value(Var v) const;
  const Matrix& grad(Var v) const;
  double scalar(Var v) const;

  /// Propagates d(root)/d(node) to every node and adds the result into the
  /// grad of every Parameter referenced by the graph. The root must be 1 x 1.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kParameter,
    kConstant,
    kDense,
    kLeakyRelu,
    kLogSoftmax,
    kLogSumExp,
    kExp,
    kSquare,
    kAdd,
    kSub,
    kMul,
    kScale,
    kBroadcastRows,
    kConcatCols,
    kRowSum,
    kMean,
  };

  struct Node {
    explicit Node(Op op_, int a_ = -1, int b_ = -1, int c_ = -1) : op(op_), a(a_), b(b_), c(c_) {}

    Op op;
    int a = -1;
    int b = -1;
    int c = -1;
    double scalar = 0.0;
    Parameter* param = nullptr;
    Matrix value;
    Matrix grad;
  };

  Var push(Node node);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace wz
