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
#include <span>
#include <vector>

#include "gasline/matrix.hpp"
#include "gasline/module_graph.hpp"

namespace gasline {

/// Collapses every maximal group of single-consumer fusible nodes into one
/// FusedElementwise node. A node is absorbed into its consumer only when both
/// are fusible, the node feeds exactly one distinct consumer and it is not an
/// output slot. Groups are trees rooted at the node that stays visible.
/// The result is compacted in topological order and fuse is idempotent.
ModuleGraph fuse(const ModuleGraph& m);

enum class KernelKind : std::uint8_t { MatMul, FusedElementwise, ReduceSumLastDim, ScaleRows };

const char* to_string(KernelKind kind);

/// One step of a compiled program. Buffer ids [0, num_inputs) are the program
/// inputs; every other id is written by exactly one step.
struct ProgramStep {
  KernelKind kernel = KernelKind::FusedElementwise;
  std::vector<std::uint32_t> inputs;
  std::uint32_t output = 0;
  std::size_t cols = 0;  // columns of the output buffer

  // MatMul
  Matrix weight;

  // FusedElementwise: register-file body as in MicroOp, evaluated tile by
  // tile. param_tiles[i] holds the broadcast tile of body[i] when it is a
  // ParamRow. A nonzero reduce_groups appends a sum-over-column-blocks
  // epilogue, making the output reduce_groups wide.
  std::vector<MicroOp> body;
  std::vector<std::vector<float>> param_tiles;
  std::size_t body_cols = 0;
  std::size_t reduce_groups = 0;

  // ReduceSumLastDim
  std::size_t groups = 1;
};

/// Scratch memory reused across calls of one program. Not shareable between
/// concurrent calls.
class ProgramWorkspace {
 public:
  ProgramWorkspace() = default;

 private:
  friend class FusedProgram;
  std::vector<std::vector<float>> buffers_;
  std::vector<float> registers_;
  std::vector<const float*> buffer_ptrs_;
  std::vector<float*> writable_;
  std::vector<const float*> operands_;
  std::vector<const float*> reg_ptrs_;
};

/// Compiled, slot-bound form of a module. Immutable after compile_module and
/// safe to run from several threads, each with its own workspace.
class FusedProgram {
 public:
  std::size_t num_inputs() const noexcept { return input_cols_.size(); }
  std::size_t num_outputs() const noexcept { return output_buffers_.size(); }
  std::size_t input_cols(std::size_t slot) const { return input_cols_.at(slot); }
  std::size_t output_cols(std::size_t slot) const { return output_cols_.at(slot); }
  const std::vector<ProgramStep>& steps() const noexcept { return steps_; }
  /// Rows per fused tile for a body of the given width.
  std::size_t tile_rows(std::size_t cols) const noexcept;

  std::vector<Matrix> run(std::span<const MatrixView> inputs) const;
  std::vector<Matrix> run(std::span<const MatrixView> inputs, ProgramWorkspace& ws) const;

 private:
  friend FusedProgram compile_module(const ModuleGraph& m);

  void run_fused(const ProgramStep& step, std::size_t rows, std::span<const float* const> in,
                 float* out, ProgramWorkspace& ws) const;

  std::string name_;
  std::vector<std::size_t> input_cols_;
  std::vector<std::size_t> buffer_cols_;
  std::vector<std::uint32_t> output_buffers_;
  std::vector<std::size_t> output_cols_;
  std::vector<ProgramStep> steps_;
  std::size_t tile_elems_ = 0;
};

/// Fuses (if not already fused) and lowers a module into a FusedProgram. All
/// shape errors surface here; running the result never raises shape errors
/// once inputs match the slots.
FusedProgram compile_module(const ModuleGraph& m);

}  // namespace gasline
