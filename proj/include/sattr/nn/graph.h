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

#ifndef SATTR_NN_GRAPH_H_
#define SATTR_NN_GRAPH_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sattr::nn {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  Matrix value;
  Matrix grad;
};

// Named parameters in insertion order. References stay valid for the
// lifetime of the store.
class ParameterStore {
 public:
  Parameter& Add(const std::string& name, Matrix init);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Has(const std::string& name) const { return params_.count(name) > 0; }
  const std::vector<std::string>& names() const { return order_; }

  void ZeroGrad();
  long NumScalars() const;
  bool AllFinite() const;

  bool operator==(const ParameterStore& other) const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, Parameter> params_;
};

// Define-by-run computation graph over dense matrices. Build the forward
// pass with the op methods, then call Backward on a 1x1 node to accumulate
// gradients into the Parameters that were used.
class Graph {
 public:
  using Node = int;

  Node Constant(Matrix value);
  Node Param(Parameter& param);

  Node MatMul(Node a, Node b);
  Node MatMulTransB(Node a, Node b);  // a * b^T
  Node Add(Node a, Node b);
  Node AddBias(Node a, Node bias);    // bias is 1 x cols, broadcast on rows
  Node Scale(Node a, double factor);
  Node Tanh(Node a);
  Node RowSoftmax(Node a);
  Node LayerNorm(Node a, Node gain, Node bias, double eps = 1e-5);
  Node ConcatCols(const std::vector<Node>& parts);
  Node SliceCols(Node a, int begin, int count);
  // Column-major reinterpretation of the same values.
  Node Reshape(Node a, int rows, int cols);
  Node GatherRows(Node table, const std::vector<int>& ids);
  Node Sum(Node a);
  // Mean over rows with label >= 0 of -log softmax(row)[label]; 1x1.
  Node SoftmaxCrossEntropy(Node logits, const std::vector<int>& labels);

  const Matrix& Value(Node node) const { return nodes_[node].value; }
  const Matrix& Grad(Node node) const { return nodes_[node].grad; }

  void Backward(Node root);

 private:
  struct NodeData {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void()> backward;
  };

  Node Push(Matrix value, std::initializer_list<Node> inputs);
  bool Needs(Node node) const { return nodes_[node].requires_grad; }
  NodeData& At(Node node) { return nodes_[node]; }

  std::vector<NodeData> nodes_;
};

}  // namespace sattr::nn

#endif  // SATTR_NN_GRAPH_H_
