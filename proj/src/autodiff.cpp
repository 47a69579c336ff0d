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

#include "wz/autodiff.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "wz/errors.hpp"

namespace wz {

namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " +
                      shape_of(b));
  }
}

Eigen::VectorXd row_max(const Matrix& m) { return m.rowwise().maxCoeff(); }

}  // namespace

Parameter::Parameter(std::string name_, Matrix init)
    : name(std::move(name_)),
      value(std::move(init)),
      grad(Matrix::Zero(value.rows(), value.cols())),
      adam_m(Matrix::Zero(value.rows(), value.cols())),
      adam_v(Matrix::Zero(value.rows(), value.cols())) {}

void adam_step(std::span<Parameter* const> params, const AdamOptions& opts) {
  for (Parameter* p : params) {
    p->step_count += 1;
    const double t = static_cast<double>(p->step_count);
    const double bias1 = 1.0 - std::pow(opts.beta1, t);
    const double bias2 = 1.0 - std::pow(opts.beta2, t);
    p->adam_m = opts.beta1 * p->adam_m + (1.0 - opts.beta1) * p->grad;
    p->adam_v = opts.beta2 * p->adam_v + (1.0 - opts.beta2) * p->grad.cwiseAbs2();
    const auto m_hat = p->adam_m.array() / bias1;
    const auto v_hat = p->adam_v.array() / bias2;
    p->value.array() -= opts.lr * m_hat / (v_hat.sqrt() + opts.eps);
    p->zero_grad();
  }
}

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Graph::Node& Graph::node(Var v) const {
  if (v.index < 0 || static_cast<std::size_t>(v.index) >= nodes_.size()) {
    throw UsageError("autodiff: invalid node handle");
  }
  return nodes_[static_cast<std::size_t>(v.index)];
}

const Matrix& Graph::value(Var v) const { return node(v).value; }

const Matrix& Graph::grad(Var v) const { return node(v).grad; }

double Graph::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw UsageError("autodiff: node is not scalar");
  return m(0, 0);
}

Var Graph::parameter(Parameter& p) {
  Node n(Op::kParameter);
  n.param = &p;
  n.value = p.value;
  return push(std::move(n));
}

Var Graph::constant(Matrix value) {
  Node n(Op::kConstant);
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::dense(Var input, Var weights, Var bias) {
  const Matrix& x = value(input);
  const Matrix& w = value(weights);
  const Matrix& b = value(bias);
  if (x.cols() != w.cols() || b.rows() != 1 || b.cols() != w.rows()) {
    throw ConfigError("dense: shape mismatch input " + shape_of(x) + ", weights " +
                      shape_of(w) + ", bias " + shape_of(b));
  }
  Node n(Op::kDense, input.index, weights.index, bias.index);
  n.value.noalias() = x * w.transpose();
  n.value.rowwise() += b.row(0);
  return push(std::move(n));
}

Var Graph::leaky_relu(Var input, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("leaky_relu: slope must lie in (0, 1)");
  Node n(Op::kLeakyRelu, input.index);
  n.scalar = slope;
  const Matrix& x = value(input);
  // max(v, slope * v) equals the leaky branch for slope in (0, 1) and vectorizes.
  n.value = x.cwiseMax(slope * x);
  return push(std::move(n));
}

Var Graph::log_softmax(Var logits) {
  const Matrix& x = value(logits);
  if (x.cols() < 1) throw ConfigError("log_softmax: empty logits");
  if (!x.allFinite()) throw NumericError("log_softmax: non-finite logit");
  const Eigen::VectorXd m = row_max(x);
  Matrix shifted = x.colwise() - m;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log().matrix();
  Node n(Op::kLogSoftmax, logits.index);
  n.value = shifted.colwise() - lse;
  return push(std::move(n));
}

Var Graph::logsumexp(Var logits) {
  const Matrix& x = value(logits);
  if (x.cols() < 1) throw ConfigError("logsumexp: empty input");
  if (!x.allFinite()) throw NumericError("logsumexp: non-finite input");
  const Eigen::VectorXd m = row_max(x);
  const Matrix shifted = x.colwise() - m;
  Node n(Op::kLogSumExp, logits.index);
  n.value = (shifted.array().exp().rowwise().sum().log().matrix() + m);
  return push(std::move(n));
}

Var Graph::exp(Var input) {
  Node n(Op::kExp, input.index);
  n.value = value(input).array().exp().matrix();
  return push(std::move(n));
}

Var Graph::square(Var input) {
  Node n(Op::kSquare, input.index);
  n.value = value(input).cwiseAbs2();
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Node n(Op::kAdd, a.index, b.index);
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Node n(Op::kSub, a.index, b.index);
  n.value = value(a) - value(b);
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Node n(Op::kMul, a.index, b.index);
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Var Graph::scale(Var a, double factor) {
  Node n(Op::kScale, a.index);
  n.scalar = factor;
  n.value = factor * value(a);
  return push(std::move(n));
}

Var Graph::broadcast_rows(Var row, Eigen::Index rows) {
  const Matrix& r = value(row);
  if (r.rows() != 1) throw ConfigError("broadcast_rows: expected a single row, got " + shape_of(r));
  Node n(Op::kBroadcastRows, row.index);
  n.value = r.replicate(rows, 1);
  return push(std::move(n));
}

Var Graph::concat_cols(Var a, Var b) {
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  if (x.rows() != y.rows()) {
    throw ConfigError("concat_cols: row mismatch " + shape_of(x) + " vs " + shape_of(y));
  }
  Node n(Op::kConcatCols, a.index, b.index);
  n.value.resize(x.rows(), x.cols() + y.cols());
  n.value << x, y;
  return push(std::move(n));
}

Var Graph::row_sum(Var a) {
  Node n(Op::kRowSum, a.index);
  n.value = value(a).rowwise().sum();
  return push(std::move(n));
}

Var Graph::mean(Var a) {
  const Matrix& x = value(a);
  if (x.size() == 0) throw ConfigError("mean: empty input");
  Node n(Op::kMean, a.index);
  n.value = Matrix::Constant(1, 1, x.mean());
  return push(std::move(n));
}

void Graph::backward(Var root) {
  if (value(root).size() != 1) throw UsageError("backward: root must be scalar");
  for (std::size_t i = 0; i <= static_cast<std::size_t>(root.index); ++i) {
    nodes_[i].grad.setZero(nodes_[i].value.rows(), nodes_[i].value.cols());
  }
  nodes_[static_cast<std::size_t>(root.index)].grad(0, 0) = 1.0;

  for (int i = root.index; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    const Matrix& g = n.grad;
    auto grad_of = [this](int idx) -> Matrix& { return nodes_[static_cast<std::size_t>(idx)].grad; };
    auto value_of = [this](int idx) -> const Matrix& {
      return nodes_[static_cast<std::size_t>(idx)].value;
    };
    switch (n.op) {
      case Op::kParameter:
        n.param->grad += g;
        break;
      case Op::kConstant:
        break;
      case Op::kDense:
        grad_of(n.a).noalias() += g * value_of(n.b);
        grad_of(n.b).noalias() += g.transpose() * value_of(n.a);
        grad_of(n.c) += g.colwise().sum();
        break;
      case Op::kLeakyRelu: {
        const double slope = n.scalar;
        grad_of(n.a).array() +=
            (value_of(n.a).array() >= 0.0).select(g.array(), slope * g.array());
        break;
      }
      case Op::kLogSoftmax: {
        const Matrix probs = n.value.array().exp().matrix();
        const Eigen::VectorXd total = g.rowwise().sum();
        grad_of(n.a) += g - (probs.array().colwise() * total.array()).matrix();
        break;
      }
      case Op::kLogSumExp: {
        const Matrix& x = value_of(n.a);
        const Matrix probs = (x.colwise() - n.value.col(0)).array().exp().matrix();
        grad_of(n.a).array() += probs.array().colwise() * g.col(0).array();
        break;
      }
      case Op::kExp:
        grad_of(n.a) += g.cwiseProduct(n.value);
        break;
      case Op::kSquare:
        grad_of(n.a) += 2.0 * g.cwiseProduct(value_of(n.a));
        break;
      case Op::kAdd:
        grad_of(n.a) += g;
        grad_of(n.b) += g;
        break;
      case Op::kSub:
        grad_of(n.a) += g;
        grad_of(n.b) -= g;
        break;
      case Op::kMul:
        grad_of(n.a) += g.cwiseProduct(value_of(n.b));
        grad_of(n.b) += g.cwiseProduct(value_of(n.a));
        break;
      case Op::kScale:
        grad_of(n.a) += n.scalar * g;
        break;
      case Op::kBroadcastRows:
        grad_of(n.a) += g.colwise().sum();
        break;
      case Op::kConcatCols: {
        const Eigen::Index left = value_of(n.a).cols();
        grad_of(n.a) += g.leftCols(left);
        grad_of(n.b) += g.rightCols(g.cols() - left);
        break;
      }
      case Op::kRowSum:
        grad_of(n.a).colwise() += g.col(0);
        break;
      case Op::kMean:
        grad_of(n.a).array() += g(0, 0) / static_cast<double>(value_of(n.a).size());
        break;
    }
  }
}

}  // namespace wz
