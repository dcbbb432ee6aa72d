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
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gasline/matrix.hpp"

namespace gasline {

using NodeId = std::uint32_t;

enum class OpKind : std::uint8_t {
  Input,             // named entry slot with declared cols
  ParamRow,          // 1 x c parameter broadcast over the batch
  MatMulParam,       // x * W
  ElemAdd,
  ElemMul,
  ReduceSumLastDim,  // per-group row sum; groups = 1 is sum(-1)
  LeakyReLU,
  Exp,
  ScaleRows,         // x scaled per row (and per column block) by a narrow input
  Identity,
  FusedElementwise,  // produced by fuse(); see MicroOp
};

const char* to_string(OpKind kind);

/// Elementwise kinds (including ParamRow leaves and fused nodes) may be merged
/// into a FusedElementwise node.
bool is_fusible(OpKind kind);

/// One instruction of a FusedElementwise body. Operands index a register file
/// where registers [0, k) hold the node's k external inputs and register k + i
/// holds the result of body instruction i. The last instruction is the result.
struct MicroOp {
  OpKind kind = OpKind::Identity;  // ParamRow, ElemAdd, ElemMul, LeakyReLU, Exp, Identity
  std::uint32_t lhs = 0;
  std::uint32_t rhs = 0;
  float slope = 0.0f;
  std::string param;

  bool operator==(const MicroOp&) const = default;
};

struct TensorOp {
  OpKind kind = OpKind::Identity;
  std::vector<NodeId> inputs;
  std::string name;          // Input slot name, or parameter name
  std::size_t cols = 0;      // Input only
  float slope = 0.2f;        // LeakyReLU only
  std::size_t groups = 1;    // ReduceSumLastDim only
  std::vector<MicroOp> body; // FusedElementwise only

  bool operator==(const TensorOp&) const = default;
};

struct OutputSlot {
  std::string name;
  NodeId node = 0;

  bool operator==(const OutputSlot&) const = default;
};

/// Dataflow IR of one vertex or edge module. Rows are a symbolic batch size
/// shared by every node; only column counts are static.
///
/// The builder methods append nodes whose operands already exist, so graphs
/// built through them are acyclic by construction. append() accepts arbitrary
/// operand ids; infer_shapes() rejects cycles and dangling references.
class ModuleGraph {
 public:
  explicit ModuleGraph(std::string name = "module") : name_(std::move(name)) {}

  NodeId input(std::string name, std::size_t cols);
  NodeId param_row(std::string param);
  NodeId matmul_param(NodeId x, std::string param);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId reduce_sum(NodeId x, std::size_t groups = 1);
  NodeId leaky_relu(NodeId x, float slope = 0.2f);
  NodeId exp(NodeId x);
  NodeId scale_rows(NodeId x, NodeId scale);
  NodeId identity(NodeId x);

  void output(std::string name, NodeId node);
  void set_param(std::string name, Matrix value);

  /// Appends a node without any checking.
  NodeId append(TensorOp op);

  const std::string& name() const noexcept { return name_; }
  const std::vector<TensorOp>& nodes() const noexcept { return nodes_; }
  const TensorOp& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Input nodes in creation order; slot i is the i-th Input node.
  std::vector<NodeId> input_slots() const;
  std::size_t num_inputs() const;
  std::optional<std::size_t> input_index(const std::string& name) const;
  /// Declared cols of input slot i.
  std::size_t input_cols(std::size_t slot) const;

  const std::vector<OutputSlot>& outputs() const noexcept { return outputs_; }
  std::optional<std::size_t> output_index(const std::string& name) const;

  const std::map<std::string, Matrix>& params() const noexcept { return params_; }
  bool has_param(const std::string& name) const { return params_.contains(name); }
  /// Throws NotFoundError naming the module and parameter.
  const Matrix& param(const std::string& name) const;

  bool operator==(const ModuleGraph&) const = default;

 private:
  std::string name_;
  std::vector<TensorOp> nodes_;
  std::vector<OutputSlot> outputs_;
  std::map<std::string, Matrix> params_;
};

/// Nodes in dependency order, ties broken by smallest id. ContractError on a
/// cycle or an operand id that does not exist.
std::vector<NodeId> topological_order(const ModuleGraph& m);

/// Column count of every node, indexed by node id. Throws ShapeError on arity
/// or shape conflicts, NotFoundError on unknown parameters and ContractError
/// on cycles or outputs not reachable from any input slot.
std::vector<std::size_t> infer_shapes(const ModuleGraph& m);

/// Checks a positional input list against slot cols and returns the shared
/// batch row count. ShapeError on count, cols or row mismatch.
std::size_t check_batch_inputs(const std::string& module, std::span<const std::size_t> slot_cols,
                               std::span<const MatrixView> inputs);

/// True when the module contains a ReduceSumLastDim node.
bool has_reduction(const ModuleGraph& m);

/// Arithmetic cost of evaluating one batch row of the module: 2*k*m per
/// MatMulParam, cols per elementwise op, input cols per reduction and per
/// ScaleRows. Identity and ParamRow cost nothing.
std::size_t flops_per_row(const ModuleGraph& m);

}  // namespace gasline
