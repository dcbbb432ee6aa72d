/*
Copyright (c) 2026 The gasline Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#include "gasline/module_graph.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "gasline/error.hpp"

namespace gasline {

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return "Input";
    case OpKind::ParamRow: return "ParamRow";
    case OpKind::MatMulParam: return "MatMulParam";
    case OpKind::ElemAdd: return "ElemAdd";
    case OpKind::ElemMul: return "ElemMul";
    case OpKind::ReduceSumLastDim: return "ReduceSumLastDim";
    case OpKind::LeakyReLU: return "LeakyReLU";
    case OpKind::Exp: return "Exp";
    case OpKind::ScaleRows: return "ScaleRows";
    case OpKind::Identity: return "Identity";
    case OpKind::FusedElementwise: return "FusedElementwise";
  }
  return "?";
}

bool is_fusible(OpKind kind) {
  switch (kind) {
    case OpKind::ParamRow:
    case OpKind::ElemAdd:
    case OpKind::ElemMul:
    case OpKind::LeakyReLU:
    case OpKind::Exp:
    case OpKind::Identity:
    case OpKind::FusedElementwise:
      return true;
    default:
      return false;
  }
}

namespace {

TensorOp make_op(OpKind kind, std::vector<NodeId> inputs) {
  TensorOp op;
  op.kind = kind;
  op.inputs = std::move(inputs);
  return op;
}

// Fixed operand count per kind; fused nodes take any number.
std::optional<std::size_t> fixed_arity(OpKind kind) {
  switch (kind) {
    case OpKind::Input:
    case OpKind::ParamRow:
      return 0;
    case OpKind::ElemAdd:
    case OpKind::ElemMul:
    case OpKind::ScaleRows:
      return 2;
    case OpKind::FusedElementwise:
      return std::nullopt;
    default:
      return 1;
  }
}

std::string describe(const ModuleGraph& m, NodeId id) {
  return "module '" + m.name() + "' node " + std::to_string(id) + " (" +
         to_string(m.node(id).kind) + ")";
}

}  // namespace

NodeId ModuleGraph::append(TensorOp op) {
  nodes_.push_back(std::move(op));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId ModuleGraph::input(std::string name, std::size_t cols) {
  TensorOp op = make_op(OpKind::Input, {});
  op.name = std::move(name);
  op.cols = cols;
  return append(std::move(op));
}

NodeId ModuleGraph::param_row(std::string param) {
  TensorOp op = make_op(OpKind::ParamRow, {});
  op.name = std::move(param);
  return append(std::move(op));
}

NodeId ModuleGraph::matmul_param(NodeId x, std::string param) {
  TensorOp op = make_op(OpKind::MatMulParam, {x});
  op.name = std::move(param);
  return append(std::move(op));
}

NodeId ModuleGraph::add(NodeId a, NodeId b) { return append(make_op(OpKind::ElemAdd, {a, b})); }
NodeId ModuleGraph::mul(NodeId a, NodeId b) { return append(make_op(OpKind::ElemMul, {a, b})); }

NodeId ModuleGraph::reduce_sum(NodeId x, std::size_t groups) {
  TensorOp op = make_op(OpKind::ReduceSumLastDim, {x});
  op.groups = groups;
  return append(std::move(op));
}

NodeId ModuleGraph::leaky_relu(NodeId x, float slope) {
  TensorOp op = make_op(OpKind::LeakyReLU, {x});
  op.slope = slope;
  return append(std::move(op));
}

NodeId ModuleGraph::exp(NodeId x) { return append(make_op(OpKind::Exp, {x})); }

NodeId ModuleGraph::scale_rows(NodeId x, NodeId scale) {
  return append(make_op(OpKind::ScaleRows, {x, scale}));
}

NodeId ModuleGraph::identity(NodeId x) { return append(make_op(OpKind::Identity, {x})); }

void ModuleGraph::output(std::string name, NodeId node) {
  outputs_.push_back({std::move(name), node});
}

void ModuleGraph::set_param(std::string name, Matrix value) {
  params_.insert_or_assign(std::move(name), std::move(value));
}

std::vector<NodeId> ModuleGraph::input_slots() const {
  std::vector<NodeId> slots;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == OpKind::Input) slots.push_back(i);
  }
  return slots;
}

std::size_t ModuleGraph::num_inputs() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const TensorOp& op) { return op.kind == OpKind::Input; }));
}

std::optional<std::size_t> ModuleGraph::input_index(const std::string& name) const {
  std::size_t slot = 0;
  for (const auto& op : nodes_) {
    if (op.kind != OpKind::Input) continue;
    if (op.name == name) return slot;
    ++slot;
  }
  return std::nullopt;
}

std::size_t ModuleGraph::input_cols(std::size_t slot) const {
  const auto slots = input_slots();
  if (slot >= slots.size()) {
    throw NotFoundError("module '" + name_ + "' has no input slot " + std::to_string(slot));
  }
  return nodes_[slots[slot]].cols;
}

std::optional<std::size_t> ModuleGraph::output_index(const std::string& name) const {
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    if (outputs_[i].name == name) return i;
  }
  return std::nullopt;
}

const Matrix& ModuleGraph::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw NotFoundError("module '" + name_ + "' has no parameter '" + name + "'");
  }
  return it->second;
}

std::vector<NodeId> topological_order(const ModuleGraph& m) {
  const std::size_t n = m.size();
  std::vector<std::size_t> pending(n, 0);
  std::vector<std::vector<NodeId>> consumers(n);
  for (NodeId i = 0; i < n; ++i) {
    // Duplicate operands count once so the in-degree matches the consumer list.
    std::set<NodeId> distinct(m.node(i).inputs.begin(), m.node(i).inputs.end());
    for (NodeId in : distinct) {
      if (in >= n) {
        throw ContractError(describe(m, i) + " references missing node " + std::to_string(in));
      }
      consumers[in].push_back(i);
    }
    pending[i] = distinct.size();
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<NodeId> order;
  order.reserve(n);
  while (!ready.empty()) {
    const NodeId id = ready.top();
    ready.pop();
    order.push_back(id);
    for (NodeId c : consumers[id]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  if (order.size() != n) throw ContractError("module '" + m.name() + "' contains a cycle");
  return order;
}

namespace {

std::size_t fused_body_cols(const ModuleGraph& m, NodeId id, const TensorOp& op,
                            const std::vector<std::size_t>& cols) {
  if (op.body.empty()) throw ShapeError(describe(m, id) + " has an empty body");
  const std::size_t k = op.inputs.size();
  std::vector<std::size_t> reg(k + op.body.size(), 0);
  for (std::size_t i = 0; i < k; ++i) reg[i] = cols[op.inputs[i]];
  for (std::size_t i = 0; i < op.body.size(); ++i) {
    const MicroOp& u = op.body[i];
    const std::size_t self = k + i;
    auto operand = [&](std::uint32_t r) {
      if (r >= self) {
        throw ShapeError(describe(m, id) + " body op " + std::to_string(i) +
                         " reads register " + std::to_string(r) + " before it is written");
      }
      return reg[r];
    };
    switch (u.kind) {
      case OpKind::ParamRow: {
        const Matrix& p = m.param(u.param);
        if (p.rows() != 1) {
          throw ShapeError(describe(m, id) + " parameter '" + u.param + "' must be 1xc, is " +
                           shape_string(p));
        }
        reg[self] = p.cols();
        break;
      }
      case OpKind::ElemAdd:
      case OpKind::ElemMul: {
        const std::size_t a = operand(u.lhs);
        const std::size_t b = operand(u.rhs);
        if (a != b) {
          throw ShapeError(describe(m, id) + " body op " + std::to_string(i) +
                           " combines cols " + std::to_string(a) + " and " + std::to_string(b));
        }
        reg[self] = a;
        break;
      }
      case OpKind::LeakyReLU:
      case OpKind::Exp:
      case OpKind::Identity:
        reg[self] = operand(u.lhs);
        break;
      default:
        throw ShapeError(describe(m, id) + " body op " + std::to_string(i) + " has kind " +
                         to_string(u.kind) + ", which cannot be fused");
    }
  }
  for (std::size_t r = 0; r < reg.size(); ++r) {
    if (reg[r] != reg.back()) {
      throw ShapeError(describe(m, id) + " register " + std::to_string(r) + " has cols " +
                       std::to_string(reg[r]) + ", body result has " +
                       std::to_string(reg.back()));
    }
  }
  return reg.back();
}

}  // namespace

std::vector<std::size_t> infer_shapes(const ModuleGraph& m) {
  const auto order = topological_order(m);
  std::vector<std::size_t> cols(m.size(), 0);
  std::vector<bool> from_input(m.size(), false);
  std::set<std::string> input_names;
  for (NodeId id : order) {
    const TensorOp& op = m.node(id);
    if (auto arity = fixed_arity(op.kind); arity && op.inputs.size() != *arity) {
      throw ShapeError(describe(m, id) + " expects " + std::to_string(*arity) +
                       " inputs, has " + std::to_string(op.inputs.size()));
    }
    auto in = [&](std::size_t i) { return cols[op.inputs[i]]; };
    for (NodeId src : op.inputs) from_input[id] = from_input[id] || from_input[src];
    switch (op.kind) {
      case OpKind::Input:
        if (!input_names.insert(op.name).second) {
          throw ShapeError("module '" + m.name() + "' declares input '" + op.name + "' twice");
        }
        cols[id] = op.cols;
        from_input[id] = true;
        break;
      case OpKind::ParamRow: {
        const Matrix& p = m.param(op.name);
        if (p.rows() != 1) {
          throw ShapeError(describe(m, id) + " parameter '" + op.name + "' must be 1xc, is " +
                           shape_string(p));
        }
        cols[id] = p.cols();
        break;
      }
      case OpKind::MatMulParam: {
        const Matrix& w = m.param(op.name);
        if (w.rows() != in(0)) {
          throw ShapeError(describe(m, id) + " multiplies cols " + std::to_string(in(0)) +
                           " by parameter '" + op.name + "' of shape " + shape_string(w));
        }
        cols[id] = w.cols();
        break;
      }
      case OpKind::ElemAdd:
      case OpKind::ElemMul:
        if (in(0) != in(1)) {
          throw ShapeError(describe(m, id) + " shape conflict: cols " + std::to_string(in(0)) +
                           " vs " + std::to_string(in(1)));
        }
        cols[id] = in(0);
        break;
      case OpKind::ReduceSumLastDim:
        if (op.groups == 0 || in(0) % op.groups != 0) {
          throw ShapeError(describe(m, id) + " cannot split cols " + std::to_string(in(0)) +
                           " into " + std::to_string(op.groups) + " groups");
        }
        cols[id] = op.groups;
        break;
      case OpKind::ScaleRows:
        if (in(1) == 0 || in(0) % in(1) != 0) {
          throw ShapeError(describe(m, id) + " scale of cols " + std::to_string(in(1)) +
                           " does not divide cols " + std::to_string(in(0)));
        }
        cols[id] = in(0);
        break;
      case OpKind::LeakyReLU:
      case OpKind::Exp:
      case OpKind::Identity:
        cols[id] = in(0);
        break;
      case OpKind::FusedElementwise:
        cols[id] = fused_body_cols(m, id, op, cols);
        break;
    }
  }
  for (const auto& out : m.outputs()) {
    if (out.node >= m.size()) {
      throw ContractError("module '" + m.name() + "' output '" + out.name +
                          "' references missing node " + std::to_string(out.node));
    }
    if (!from_input[out.node]) {
      throw ContractError("module '" + m.name() + "' output '" + out.name +
                          "' is not reachable from any input slot");
    }
  }
  return cols;
}

std::size_t check_batch_inputs(const std::string& module, std::span<const std::size_t> slot_cols,
                               std::span<const MatrixView> inputs) {
  if (inputs.size() != slot_cols.size()) {
    throw ShapeError("module '" + module + "' expects " + std::to_string(slot_cols.size()) +
                     " inputs, got " + std::to_string(inputs.size()));
  }
  std::size_t rows = inputs.empty() ? 0 : inputs[0].rows();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].cols() != slot_cols[i] || inputs[i].rows() != rows) {
      throw ShapeError("module '" + module + "' input " + std::to_string(i) + " is " +
                       shape_string(inputs[i]) + ", expected " + shape_string(rows, slot_cols[i]));
    }
  }
  return rows;
}

bool has_reduction(const ModuleGraph& m) {
  return std::any_of(m.nodes().begin(), m.nodes().end(), [](const TensorOp& op) {
    return op.kind == OpKind::ReduceSumLastDim;
  });
}

std::size_t flops_per_row(const ModuleGraph& m) {
  const auto cols = infer_shapes(m);
  std::size_t total = 0;
  for (NodeId id = 0; id < m.size(); ++id) {
    const TensorOp& op = m.node(id);
    switch (op.kind) {
      case OpKind::MatMulParam:
        total += 2 * cols[op.inputs[0]] * cols[id];
        break;
      case OpKind::ElemAdd:
      case OpKind::ElemMul:
      case OpKind::LeakyReLU:
      case OpKind::Exp:
        total += cols[id];
        break;
      case OpKind::ReduceSumLastDim:
      case OpKind::ScaleRows:
        total += cols[op.inputs[0]];
        break;
      case OpKind::FusedElementwise:
        for (const auto& u : op.body) {
          if (u.kind != OpKind::ParamRow && u.kind != OpKind::Identity) total += cols[id];
        }
        break;
      default:
        break;
    }
  }
  return total;
}

}  // namespace gasline
