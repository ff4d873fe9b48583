// Copyright (c) 2026 The sattr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sattr/nn/graph.h"

#include <cmath>

#include "sattr/error.h"

namespace sattr::nn {

Parameter& ParameterStore::Add(const std::string& name, Matrix init) {
  SATTR_CHECK(!Has(name), "duplicate parameter " << name);
  order_.push_back(name);
  Parameter& p = params_[name];
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  return p;
}

Parameter& ParameterStore::Get(const std::string& name) {
  auto it = params_.find(name);
  SATTR_CHECK(it != params_.end(), "unknown parameter " << name);
  return it->second;
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  SATTR_CHECK(it != params_.end(), "unknown parameter " << name);
  return it->second;
}

void ParameterStore::ZeroGrad() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

long ParameterStore::NumScalars() const {
  long n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

bool ParameterStore::AllFinite() const {
  for (const auto& [name, p] : params_)
    if (!p.value.allFinite()) return false;
  return true;
}

bool ParameterStore::operator==(const ParameterStore& other) const {
  if (order_ != other.order_) return false;
  for (const auto& [name, p] : params_) {
    const Parameter& q = other.Get(name);
    if (p.value.rows() != q.value.rows() || p.value.cols() != q.value.cols() ||
        p.value != q.value)
      return false;
  }
  return true;
}

Graph::Node Graph::Push(Matrix value, std::initializer_list<Node> inputs) {
  NodeData data;
  data.value = std::move(value);
  for (Node in : inputs) data.requires_grad |= nodes_[in].requires_grad;
  nodes_.push_back(std::move(data));
  return static_cast<Node>(nodes_.size() - 1);
}

Graph::Node Graph::Constant(Matrix value) { return Push(std::move(value), {}); }

Graph::Node Graph::Param(Parameter& param) {
  Node n = Push(param.value, {});
  At(n).requires_grad = true;
  At(n).param = &param;
  return n;
}

Graph::Node Graph::MatMul(Node a, Node b) {
  SATTR_CHECK(Value(a).cols() == Value(b).rows(),
              "MatMul shape mismatch " << Value(a).rows() << "x"
                                       << Value(a).cols() << " * "
                                       << Value(b).rows() << "x"
                                       << Value(b).cols());
  Node n = Push(Value(a) * Value(b), {a, b});
  At(n).backward = [this, a, b, n] {
    const Matrix& g = At(n).grad;
    if (Needs(a)) At(a).grad.noalias() += g * Value(b).transpose();
    if (Needs(b)) At(b).grad.noalias() += Value(a).transpose() * g;
  };
  return n;
}

Graph::Node Graph::MatMulTransB(Node a, Node b) {
  SATTR_CHECK(Value(a).cols() == Value(b).cols(),
              "MatMulTransB shape mismatch");
  Node n = Push(Value(a) * Value(b).transpose(), {a, b});
  At(n).backward = [this, a, b, n] {
    const Matrix& g = At(n).grad;
    if (Needs(a)) At(a).grad.noalias() += g * Value(b);
    if (Needs(b)) At(b).grad.noalias() += g.transpose() * Value(a);
  };
  return n;
}

Graph::Node Graph::Add(Node a, Node b) {
  SATTR_CHECK(Value(a).rows() == Value(b).rows() &&
                  Value(a).cols() == Value(b).cols(),
              "Add shape mismatch");
  Node n = Push(Value(a) + Value(b), {a, b});
  At(n).backward = [this, a, b, n] {
    if (Needs(a)) At(a).grad += At(n).grad;
    if (Needs(b)) At(b).grad += At(n).grad;
  };
  return n;
}

Graph::Node Graph::AddBias(Node a, Node bias) {
  SATTR_CHECK(Value(bias).rows() == 1 && Value(bias).cols() == Value(a).cols(),
              "AddBias shape mismatch");
  Matrix v = Value(a);
  v.rowwise() += Value(bias).row(0);
  Node n = Push(std::move(v), {a, bias});
  At(n).backward = [this, a, bias, n] {
    if (Needs(a)) At(a).grad += At(n).grad;
    if (Needs(bias)) At(bias).grad += At(n).grad.colwise().sum();
  };
  return n;
}

Graph::Node Graph::Scale(Node a, double factor) {
  Node n = Push(Value(a) * factor, {a});
  At(n).backward = [this, a, n, factor] {
    if (Needs(a)) At(a).grad += factor * At(n).grad;
  };
  return n;
}

Graph::Node Graph::Tanh(Node a) {
  Node n = Push(Value(a).array().tanh().matrix(), {a});
  At(n).backward = [this, a, n] {
    if (!Needs(a)) return;
    const Matrix& y = Value(n);
    At(a).grad.array() += At(n).grad.array() * (1.0 - y.array().square());
  };
  return n;
}

Graph::Node Graph::RowSoftmax(Node a) {
  Matrix y = Value(a);
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    double mx = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - mx).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  Node n = Push(std::move(y), {a});
  At(n).backward = [this, a, n] {
    if (!Needs(a)) return;
    const Matrix& y = Value(n);
    const Matrix& g = At(n).grad;
    Eigen::VectorXd dot = (g.array() * y.array()).rowwise().sum();
    At(a).grad.array() +=
        y.array() * (g.array().colwise() - dot.array());
  };
  return n;
}

Graph::Node Graph::LayerNorm(Node a, Node gain, Node bias, double eps) {
  const Matrix& x = Value(a);
  const Eigen::Index cols = x.cols();
  SATTR_CHECK(Value(gain).rows() == 1 && Value(gain).cols() == cols &&
                  Value(bias).rows() == 1 && Value(bias).cols() == cols,
              "LayerNorm shape mismatch");
  Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / double(cols)) + eps)
          .rsqrt();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix y = xhat.array().rowwise() * Value(gain).row(0).array();
  y.rowwise() += Value(bias).row(0);
  Node n = Push(std::move(y), {a, gain, bias});
  At(n).backward = [this, a, gain, bias, n, xhat, inv_std, cols] {
    const Matrix& g = At(n).grad;
    if (Needs(gain))
      At(gain).grad += (g.array() * xhat.array()).colwise().sum().matrix();
    if (Needs(bias)) At(bias).grad += g.colwise().sum();
    if (!Needs(a)) return;
    Matrix dxhat = g.array().rowwise() * Value(gain).row(0).array();
    Eigen::VectorXd sum_d = dxhat.rowwise().sum();
    Eigen::VectorXd sum_dx = (dxhat.array() * xhat.array()).rowwise().sum();
    Matrix dx = (double(cols) * dxhat.array()).colwise() - sum_d.array();
    dx.array() -= xhat.array().colwise() * sum_dx.array();
    dx = dx.array().colwise() * (inv_std.array() / double(cols));
    At(a).grad += dx;
  };
  return n;
}

Graph::Node Graph::ConcatCols(const std::vector<Node>& parts) {
  SATTR_CHECK(!parts.empty(), "ConcatCols of nothing");
  const Eigen::Index rows = Value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Node p : parts) {
    SATTR_CHECK(Value(p).rows() == rows, "ConcatCols row mismatch");
    cols += Value(p).cols();
  }
  Matrix v(rows, cols);
  Eigen::Index offset = 0;
  bool needs = false;
  for (Node p : parts) {
    v.middleCols(offset, Value(p).cols()) = Value(p);
    offset += Value(p).cols();
    needs |= Needs(p);
  }
  Node n = Push(std::move(v), {});
  At(n).requires_grad = needs;
  At(n).backward = [this, parts, n] {
    Eigen::Index offset = 0;
    for (Node p : parts) {
      const Eigen::Index c = Value(p).cols();
      if (Needs(p)) At(p).grad += At(n).grad.middleCols(offset, c);
      offset += c;
    }
  };
  return n;
}

Graph::Node Graph::SliceCols(Node a, int begin, int count) {
  SATTR_CHECK(begin >= 0 && count >= 0 && begin + count <= Value(a).cols(),
              "SliceCols out of range");
  Node n = Push(Value(a).middleCols(begin, count), {a});
  At(n).backward = [this, a, n, begin, count] {
    if (Needs(a)) At(a).grad.middleCols(begin, count) += At(n).grad;
  };
  return n;
}

Graph::Node Graph::Reshape(Node a, int rows, int cols) {
  SATTR_CHECK(static_cast<Eigen::Index>(rows) * cols == Value(a).size(),
              "Reshape size mismatch");
  Matrix v = Eigen::Map<const Matrix>(Value(a).data(), rows, cols);
  Node n = Push(std::move(v), {a});
  At(n).backward = [this, a, n] {
    if (!Needs(a)) return;
    Matrix& ga = At(a).grad;
    ga += Eigen::Map<const Matrix>(At(n).grad.data(), ga.rows(), ga.cols());
  };
  return n;
}

Graph::Node Graph::GatherRows(Node table, const std::vector<int>& ids) {
  const Matrix& t = Value(table);
  Matrix v(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    SATTR_CHECK(ids[i] >= 0 && ids[i] < t.rows(), "GatherRows id out of range");
    v.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  Node n = Push(std::move(v), {table});
  At(n).backward = [this, table, ids, n] {
    if (!Needs(table)) return;
    for (size_t i = 0; i < ids.size(); ++i)
      At(table).grad.row(ids[i]) += At(n).grad.row(static_cast<Eigen::Index>(i));
  };
  return n;
}

Graph::Node Graph::Sum(Node a) {
  Matrix v(1, 1);
  v(0, 0) = Value(a).sum();
  Node n = Push(std::move(v), {a});
  At(n).backward = [this, a, n] {
    if (Needs(a)) At(a).grad.array() += At(n).grad(0, 0);
  };
  return n;
}

Graph::Node Graph::SoftmaxCrossEntropy(Node logits,
                                       const std::vector<int>& labels) {
  const Matrix& z = Value(logits);
  SATTR_CHECK(static_cast<Eigen::Index>(labels.size()) == z.rows(),
              "label count " << labels.size() << " != rows " << z.rows());
  Matrix prob(z.rows(), z.cols());
  double loss = 0.0;
  int count = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double mx = z.row(r).maxCoeff();
    Eigen::RowVectorXd e = (z.row(r).array() - mx).exp().matrix();
    double total = e.sum();
    prob.row(r) = e / total;
    if (labels[r] < 0) continue;
    SATTR_CHECK(labels[r] < z.cols(), "label out of range");
    loss += -(z(r, labels[r]) - mx - std::log(total));
    ++count;
  }
  Matrix v(1, 1);
  v(0, 0) = count > 0 ? loss / count : 0.0;
  Node n = Push(std::move(v), {logits});
  At(n).backward = [this, logits, labels, prob, count, n] {
    if (!Needs(logits) || count == 0) return;
    const double scale = At(n).grad(0, 0) / count;
    Matrix& g = At(logits).grad;
    for (Eigen::Index r = 0; r < prob.rows(); ++r) {
      if (labels[r] < 0) continue;
      g.row(r) += scale * prob.row(r);
      g(r, labels[r]) -= scale;
    }
  };
  return n;
}

void Graph::Backward(Node root) {
  SATTR_CHECK(Value(root).size() == 1, "Backward needs a scalar root");
  for (NodeData& node : nodes_)
    if (node.requires_grad)
      node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  nodes_[root].grad(0, 0) = 1.0;
  for (Node i = root; i >= 0; --i) {
    NodeData& node = nodes_[i];
    if (!node.requires_grad) continue;
    if (node.backward) node.backward();
    if (node.param != nullptr) node.param->grad += node.grad;
  }
}

}  // namespace sattr::nn
