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
#include "gasline/interpreter.hpp"

#include <algorithm>

#include "gasline/error.hpp"
#include "gasline/kernels.hpp"

namespace gasline {

namespace {

Matrix apply_micro(const ModuleGraph& m, const MicroOp& u, const std::vector<Matrix>& regs,
                   std::size_t rows) {
  switch (u.kind) {
    case OpKind::ParamRow: return broadcast_row(m.param(u.param).values(), rows);
    case OpKind::ElemAdd: return elem_add(regs[u.lhs], regs[u.rhs]);
    case OpKind::ElemMul: return elem_mul(regs[u.lhs], regs[u.rhs]);
    case OpKind::LeakyReLU: return leaky_relu(regs[u.lhs], u.slope);
    case OpKind::Exp: return elem_exp(regs[u.lhs]);
    case OpKind::Identity: return regs[u.lhs];
    default: throw ShapeError(std::string("cannot interpret fused op ") + to_string(u.kind));
  }
}

}  // namespace

std::vector<Matrix> interpret_module(const ModuleGraph& m, std::span<const MatrixView> inputs) {
  infer_shapes(m);
  const auto slots = m.input_slots();
  std::vector<std::size_t> slot_cols;
  for (NodeId s : slots) slot_cols.push_back(m.node(s).cols);
  const std::size_t rows = check_batch_inputs(m.name(), slot_cols, inputs);

  std::vector<Matrix> value(m.size());
  for (NodeId id : topological_order(m)) {
    const TensorOp& op = m.node(id);
    auto in = [&](std::size_t i) -> const Matrix& { return value[op.inputs[i]]; };
    switch (op.kind) {
      case OpKind::Input: {
        // Slots are numbered by id order; topological order may visit them differently.
        const auto it = std::find(slots.begin(), slots.end(), id);
        value[id] = Matrix::from_view(inputs[static_cast<std::size_t>(it - slots.begin())]);
        break;
      }
      case OpKind::ParamRow: value[id] = broadcast_row(m.param(op.name).values(), rows); break;
      case OpKind::MatMulParam: value[id] = matmul(in(0), m.param(op.name)); break;
      case OpKind::ElemAdd: value[id] = elem_add(in(0), in(1)); break;
      case OpKind::ElemMul: value[id] = elem_mul(in(0), in(1)); break;
      case OpKind::ReduceSumLastDim: value[id] = reduce_sum_last_dim(in(0), op.groups); break;
      case OpKind::LeakyReLU: value[id] = leaky_relu(in(0), op.slope); break;
      case OpKind::Exp: value[id] = elem_exp(in(0)); break;
      case OpKind::ScaleRows: value[id] = scale_rows(in(0), in(1)); break;
      case OpKind::Identity: value[id] = in(0); break;
      case OpKind::FusedElementwise: {
        std::vector<Matrix> regs;
        regs.reserve(op.inputs.size() + op.body.size());
        for (NodeId src : op.inputs) regs.push_back(value[src]);
        for (const MicroOp& u : op.body) regs.push_back(apply_micro(m, u, regs, rows));
        value[id] = std::move(regs.back());
        break;
      }
    }
  }

  std::vector<Matrix> out;
  out.reserve(m.outputs().size());
  for (const auto& slot : m.outputs()) out.push_back(value[slot.node]);
  return out;
}

std::map<std::string, Matrix> interpret_module(const ModuleGraph& m,
                                               const std::map<std::string, Matrix>& inputs) {
  std::vector<MatrixView> positional;
  for (NodeId s : m.input_slots()) {
    const std::string& name = m.node(s).name;
    auto it = inputs.find(name);
    if (it == inputs.end()) {
      throw NotFoundError("module '" + m.name() + "' input '" + name + "' not supplied");
    }
    positional.emplace_back(it->second);
  }
  if (positional.size() != inputs.size()) {
    throw NotFoundError("module '" + m.name() + "' was given inputs it does not declare");
  }
  auto values = interpret_module(m, std::span<const MatrixView>(positional));
  std::map<std::string, Matrix> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.emplace(m.outputs()[i].name, std::move(values[i]));
  }
  return out;
}

}  // namespace gasline
