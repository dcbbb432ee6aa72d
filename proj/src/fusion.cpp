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
#include "gasline/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "gasline/error.hpp"
#include "kernels_internal.hpp"

namespace gasline {

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::MatMul: return "MatMul";
    case KernelKind::FusedElementwise: return "FusedElementwise";
    case KernelKind::ReduceSumLastDim: return "ReduceSumLastDim";
    case KernelKind::ScaleRows: return "ScaleRows";
  }
  return "?";
}

namespace {

constexpr NodeId kNoTarget = static_cast<NodeId>(-1);
constexpr std::size_t kTileElems = 2048;

struct Usage {
  std::vector<std::set<NodeId>> consumers;
  std::vector<bool> is_output;
};

Usage compute_usage(const ModuleGraph& m) {
  Usage u{std::vector<std::set<NodeId>>(m.size()), std::vector<bool>(m.size(), false)};
  for (NodeId id = 0; id < m.size(); ++id) {
    for (NodeId in : m.node(id).inputs) u.consumers[in].insert(id);
  }
  for (const auto& out : m.outputs()) u.is_output[out.node] = true;
  return u;
}

// Operand of a body instruction under construction: an external input
// (by old node id) or an earlier body instruction.
struct Operand {
  bool external = false;
  std::uint32_t index = 0;
};

struct PendingOp {
  MicroOp op;
  Operand lhs;
  Operand rhs;
};

class BodyBuilder {
 public:
  BodyBuilder(const ModuleGraph& m, const std::vector<NodeId>& target, NodeId root)
      : m_(m), target_(target), root_(root) {}

  TensorOp build() {
    visit(root_);
    TensorOp fused;
    fused.kind = OpKind::FusedElementwise;
    const auto k = static_cast<std::uint32_t>(externals_.size());
    auto reg = [&](Operand o) { return o.external ? o.index : k + o.index; };
    for (const auto& p : pending_) {
      MicroOp u = p.op;
      u.lhs = reg(p.lhs);
      u.rhs = reg(p.rhs);
      fused.body.push_back(std::move(u));
    }
    fused.inputs = externals_;  // old ids; remapped by the caller
    return fused;
  }

 private:
  bool member(NodeId id) const { return target_[id] != kNoTarget; }

  Operand resolve(NodeId id) {
    if (member(id)) return visit(id);
    for (std::uint32_t i = 0; i < externals_.size(); ++i) {
      if (externals_[i] == id) return {true, i};
    }
    externals_.push_back(id);
    return {true, static_cast<std::uint32_t>(externals_.size() - 1)};
  }

  Operand push(MicroOp op, Operand lhs = {}, Operand rhs = {}) {
    pending_.push_back({std::move(op), lhs, rhs});
    return {false, static_cast<std::uint32_t>(pending_.size() - 1)};
  }

  Operand visit(NodeId id) {
    if (auto it = memo_.find(id); it != memo_.end()) return it->second;
    const TensorOp& op = m_.node(id);
    Operand result;
    if (op.kind == OpKind::FusedElementwise) {
      std::vector<Operand> regmap;
      for (NodeId in : op.inputs) regmap.push_back(resolve(in));
      for (const MicroOp& u : op.body) {
        MicroOp copy = u;
        const Operand lhs = u.kind == OpKind::ParamRow ? Operand{} : regmap[u.lhs];
        const bool binary = u.kind == OpKind::ElemAdd || u.kind == OpKind::ElemMul;
        const Operand rhs = binary ? regmap[u.rhs] : Operand{};
        regmap.push_back(push(std::move(copy), lhs, rhs));
      }
      result = regmap.back();
    } else {
      MicroOp u;
      u.kind = op.kind;
      switch (op.kind) {
        case OpKind::ParamRow:
          u.param = op.name;
          result = push(std::move(u));
          break;
        case OpKind::ElemAdd:
        case OpKind::ElemMul: {
          const Operand a = resolve(op.inputs[0]);
          const Operand b = resolve(op.inputs[1]);
          result = push(std::move(u), a, b);
          break;
        }
        case OpKind::LeakyReLU:
          u.slope = op.slope;
          [[fallthrough]];
        default: {
          const Operand a = resolve(op.inputs[0]);
          result = push(std::move(u), a);
          break;
        }
      }
    }
    memo_[id] = result;
    return result;
  }

  const ModuleGraph& m_;
  const std::vector<NodeId>& target_;
  NodeId root_;
  std::vector<NodeId> externals_;
  std::vector<PendingOp> pending_;
  std::map<NodeId, Operand> memo_;
};

// One grouping round followed by compaction into topological order. Returns
// the number of nodes absorbed.
std::size_t fuse_round(const ModuleGraph& m, ModuleGraph& out) {
  const auto order = topological_order(m);
  const Usage usage = compute_usage(m);
  std::vector<NodeId> target(m.size(), kNoTarget);
  std::size_t absorbed = 0;
  for (NodeId id = 0; id < m.size(); ++id) {
    const auto& consumers = usage.consumers[id];
    if (!is_fusible(m.node(id).kind) || usage.is_output[id] || consumers.size() != 1) continue;
    const NodeId consumer = *consumers.begin();
    if (!is_fusible(m.node(consumer).kind)) continue;
    target[id] = consumer;
    ++absorbed;
  }
  std::vector<bool> is_root(m.size(), false);
  for (NodeId id = 0; id < m.size(); ++id) {
    if (target[id] == kNoTarget) continue;
    NodeId r = target[id];
    while (target[r] != kNoTarget) r = target[r];
    is_root[r] = true;
  }

  out = ModuleGraph(m.name());
  std::vector<NodeId> new_id(m.size(), kNoTarget);
  for (NodeId id : order) {
    if (target[id] != kNoTarget) continue;
    TensorOp op = is_root[id] ? BodyBuilder(m, target, id).build() : m.node(id);
    for (NodeId& in : op.inputs) in = new_id[in];
    new_id[id] = out.append(std::move(op));
  }
  for (const auto& slot : m.outputs()) out.output(slot.name, new_id[slot.node]);
  for (const auto& [name, value] : m.params()) out.set_param(name, value);
  return absorbed;
}

}  // namespace

ModuleGraph fuse(const ModuleGraph& m) {
  infer_shapes(m);
  // Absorbing a group can leave an upstream node with a single distinct
  // consumer, so rounds repeat until nothing merges.
  ModuleGraph current = m;
  while (true) {
    ModuleGraph next;
    const std::size_t absorbed = fuse_round(current, next);
    current = std::move(next);
    if (absorbed == 0) return current;
  }
}

std::size_t FusedProgram::tile_rows(std::size_t cols) const noexcept {
  return std::max<std::size_t>(1, tile_elems_ / std::max<std::size_t>(cols, 1));
}

FusedProgram compile_module(const ModuleGraph& source) {
  const ModuleGraph m = fuse(source);
  const auto cols = infer_shapes(m);
  const Usage usage = compute_usage(m);

  FusedProgram p;
  p.name_ = m.name();
  p.tile_elems_ = kTileElems;
  std::vector<std::uint32_t> buffer_of(m.size(), 0);
  std::vector<std::optional<std::size_t>> step_of_node(m.size());
  auto new_buffer = [&](std::size_t c) {
    p.buffer_cols_.push_back(c);
    return static_cast<std::uint32_t>(p.buffer_cols_.size() - 1);
  };
  for (NodeId id : m.input_slots()) {
    buffer_of[id] = new_buffer(cols[id]);
    p.input_cols_.push_back(cols[id]);
  }

  for (NodeId id : topological_order(m)) {
    const TensorOp& op = m.node(id);
    if (op.kind == OpKind::Input) continue;
    ProgramStep step;
    for (NodeId in : op.inputs) step.inputs.push_back(buffer_of[in]);
    step.cols = cols[id];
    switch (op.kind) {
      case OpKind::MatMulParam:
        step.kernel = KernelKind::MatMul;
        step.weight = m.param(op.name);
        break;
      case OpKind::ScaleRows:
        step.kernel = KernelKind::ScaleRows;
        break;
      case OpKind::ReduceSumLastDim: {
        const NodeId src = op.inputs[0];
        const auto producer = step_of_node[src];
        if (producer && p.steps_[*producer].kernel == KernelKind::FusedElementwise &&
            p.steps_[*producer].reduce_groups == 0 && usage.consumers[src].size() == 1 &&
            !usage.is_output[src]) {
          ProgramStep& fused = p.steps_[*producer];
          fused.reduce_groups = op.groups;
          fused.cols = op.groups;
          fused.output = new_buffer(op.groups);
          buffer_of[id] = fused.output;
          step_of_node[id] = producer;
          continue;
        }
        step.kernel = KernelKind::ReduceSumLastDim;
        step.groups = op.groups;
        break;
      }
      default: {
        step.kernel = KernelKind::FusedElementwise;
        step.body_cols = cols[id];
        if (op.kind == OpKind::FusedElementwise) {
          step.body = op.body;
        } else {
          MicroOp u;
          u.kind = op.kind;
          u.slope = op.slope;
          u.lhs = 0;
          u.rhs = 1;
          if (op.kind == OpKind::ParamRow) u.param = op.name;
          step.body.push_back(std::move(u));
        }
        const std::size_t trows = p.tile_rows(step.body_cols);
        step.param_tiles.resize(step.body.size());
        for (std::size_t i = 0; i < step.body.size(); ++i) {
          if (step.body[i].kind != OpKind::ParamRow) continue;
          const Matrix& row = m.param(step.body[i].param);
          auto& tile = step.param_tiles[i];
          tile.reserve(trows * row.cols());
          for (std::size_t r = 0; r < trows; ++r) {
            tile.insert(tile.end(), row.values().begin(), row.values().end());
          }
        }
        break;
      }
    }
    step.output = new_buffer(step.cols);
    buffer_of[id] = step.output;
    step_of_node[id] = p.steps_.size();
    p.steps_.push_back(std::move(step));
  }

  for (const auto& slot : m.outputs()) {
    p.output_buffers_.push_back(buffer_of[slot.node]);
    p.output_cols_.push_back(cols[slot.node]);
  }
  return p;
}

std::vector<Matrix> FusedProgram::run(std::span<const MatrixView> inputs) const {
  ProgramWorkspace ws;
  return run(inputs, ws);
}

std::vector<Matrix> FusedProgram::run(std::span<const MatrixView> inputs,
                                      ProgramWorkspace& ws) const {
  const std::size_t rows = check_batch_inputs(name_, input_cols_, inputs);
  const std::size_t num_buffers = buffer_cols_.size();
  auto& ptr = ws.buffer_ptrs_;
  auto& writable = ws.writable_;
  ptr.assign(num_buffers, nullptr);
  writable.assign(num_buffers, nullptr);
  for (std::size_t i = 0; i < inputs.size(); ++i) ptr[i] = inputs[i].data();

  // Outputs written in place when they are the sole owner of a step buffer.
  std::vector<Matrix> out(output_buffers_.size());
  std::vector<bool> copy_later(output_buffers_.size(), false);
  for (std::size_t i = 0; i < output_buffers_.size(); ++i) {
    const std::uint32_t b = output_buffers_[i];
    out[i] = Matrix(rows, output_cols_[i]);
    if (b < inputs.size() || writable[b] != nullptr) {
      copy_later[i] = true;
    } else {
      writable[b] = out[i].data();
      ptr[b] = writable[b];
    }
  }
  ws.buffers_.resize(num_buffers);
  for (const auto& step : steps_) {
    if (writable[step.output] != nullptr) continue;
    auto& buf = ws.buffers_[step.output];
    buf.resize(rows * buffer_cols_[step.output]);
    writable[step.output] = buf.data();
    ptr[step.output] = buf.data();
  }

  auto& in = ws.operands_;
  for (const auto& step : steps_) {
    in.clear();
    for (std::uint32_t b : step.inputs) in.push_back(ptr[b]);
    float* dst = writable[step.output];
    switch (step.kernel) {
      case KernelKind::MatMul:
        detail::matmul_into(MatrixView(in[0], rows, step.weight.rows()), step.weight, dst);
        break;
      case KernelKind::ReduceSumLastDim:
        detail::reduce_sum_into(in[0], rows, buffer_cols_[step.inputs[0]], step.groups, dst);
        break;
      case KernelKind::ScaleRows:
        detail::scale_rows_into(in[0], rows, step.cols, in[1], buffer_cols_[step.inputs[1]], dst);
        break;
      case KernelKind::FusedElementwise:
        run_fused(step, rows, in, dst, ws);
        break;
    }
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!copy_later[i]) continue;
    const float* src = ptr[output_buffers_[i]];
    std::copy(src, src + out[i].size(), out[i].data());
  }
  return out;
}

void FusedProgram::run_fused(const ProgramStep& step, std::size_t rows,
                             std::span<const float* const> in, float* out,
                             ProgramWorkspace& ws) const {
  const std::size_t cols = step.body_cols;
  const std::size_t k = in.size();
  const std::size_t nb = step.body.size();
  const std::size_t trows = tile_rows(cols);
  const std::size_t telems = trows * cols;
  if (ws.registers_.size() < nb * telems) ws.registers_.resize(nb * telems);
  auto& reg = ws.reg_ptrs_;
  reg.assign(k + nb, nullptr);
  const bool reduce = step.reduce_groups != 0;

  for (std::size_t r0 = 0; r0 < rows; r0 += trows) {
    const std::size_t r1 = std::min(rows, r0 + trows);
    const std::size_t count = (r1 - r0) * cols;
    for (std::size_t j = 0; j < k; ++j) reg[j] = in[j] + r0 * cols;
    for (std::size_t i = 0; i < nb; ++i) {
      const MicroOp& u = step.body[i];
      const bool direct = i + 1 == nb && !reduce;
      float* dst = direct ? out + r0 * cols : ws.registers_.data() + i * telems;
      const float* a = u.kind == OpKind::ParamRow ? step.param_tiles[i].data() : reg[u.lhs];
      switch (u.kind) {
        case OpKind::ParamRow:
          if (!direct) {
            reg[k + i] = a;
            continue;
          }
          std::copy(a, a + count, dst);
          break;
        case OpKind::Identity:
          std::copy(a, a + count, dst);
          break;
        case OpKind::ElemAdd: {
          const float* b = reg[u.rhs];
          for (std::size_t e = 0; e < count; ++e) dst[e] = a[e] + b[e];
          break;
        }
        case OpKind::ElemMul: {
          const float* b = reg[u.rhs];
          for (std::size_t e = 0; e < count; ++e) dst[e] = a[e] * b[e];
          break;
        }
        case OpKind::LeakyReLU: {
          const float slope = u.slope;
          for (std::size_t e = 0; e < count; ++e) dst[e] = a[e] >= 0.0f ? a[e] : slope * a[e];
          break;
        }
        case OpKind::Exp:
          for (std::size_t e = 0; e < count; ++e) dst[e] = std::exp(a[e]);
          break;
        default:
          throw ExecutionError(std::string("unexpected fused op ") + to_string(u.kind));
      }
      reg[k + i] = dst;
    }
    if (reduce) {
      detail::reduce_sum_into(reg[k + nb - 1], r1 - r0, cols, step.reduce_groups,
                              out + r0 * step.reduce_groups);
    }
  }
}

}  // namespace gasline
