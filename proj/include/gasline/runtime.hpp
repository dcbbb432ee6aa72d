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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gasline/feature_store.hpp"
#include "gasline/fusion.hpp"
#include "gasline/partition.hpp"
#include "gasline/plan.hpp"

namespace gasline {

/// Boundary rows of one source feature, packed densely for one remote part.
struct MessageBatch {
  PartId from_part = 0;
  PartId to_part = 0;
  RefId ref = 0;
  std::vector<VertexId> row_ids;  // == send_list(from_part, to_part)
  Matrix payload;                 // payload.row(i) is the value of row_ids[i]
};

/// Values a partition owns, indexed by ref id. Vertex features hold the
/// owned range's rows; edge features hold one row per local edge in local
/// CSC order.
struct PartitionState {
  std::vector<std::optional<Matrix>> values;

  const Matrix& at(RefId ref) const;
};

struct StepStats {
  std::string name;
  double time_ms = 0.0;
  std::size_t flops = 0;
  std::size_t bytes_shipped = 0;
  std::size_t batches = 0;
  std::size_t rows = 0;           // rows computed by the step's module or kernel
  std::size_t gathered_rows = 0;  // per-edge rows assembled for the edge module
};

struct ExecutionReport {
  std::vector<StepStats> steps;

  std::size_t total_flops() const;
  std::size_t total_bytes_shipped() const;
  double total_time_ms() const;
  /// Flat JSON object: step name -> {time_ms, flops, bytes_shipped, ...}.
  std::string to_json() const;
};

struct ExecuteOptions {
  /// Caps worker threads; 0 means one thread per partition. Partition p runs
  /// on thread p mod threads, and results do not depend on the cap.
  std::size_t max_threads = 0;
  /// Called by each worker before every phase of every step. An exception
  /// thrown here is reported like any worker failure.
  std::function<void(PartId part, std::size_t step)> on_step;
};

struct ExecutionResult {
  FeatureStore store;
  ExecutionReport report;
};

/// Runs a plan over P partition workers in bulk-synchronous supersteps.
/// ValidationError if validate() fails, ContractError if P disagrees with the
/// partitioning, ExecutionError naming the step when a worker fails. The
/// returned store holds the inputs plus every step output under its name.
ExecutionResult execute(const Plan& plan, const PartitionedGraph& pg, const FeatureStore& store,
                        std::size_t parts, const ExecuteOptions& options = {});

/// Slices every store feature the plan reads into part p's local layout.
PartitionState load_partition(const Plan& plan, const PartitionedGraph& pg, PartId p,
                              const FeatureStore& store);

/// Scatter phase of part p: one batch per (remote part with a nonempty send
/// list, distinct source feature). Empty for steps other than MessagePassing.
std::vector<MessageBatch> scatter(const PartitionedGraph& pg, PartId p, const Step& step,
                                  const PartitionState& state);

/// Apply and gather phases of part q: assembles per-edge source, destination
/// and edge rows in local CSC order, runs the edge program once on the whole
/// batch and folds by destination in ascending edge-id order. Returns the
/// owned output rows (local edge rows when the aggregator is None).
Matrix apply_gather(const PartitionedGraph& pg, PartId q, const MessagePassingStep& step,
                    const FusedProgram& program, const PartitionState& state,
                    std::span<const MessageBatch> received, ProgramWorkspace& ws);

/// Closed-form arithmetic cost of the plan on the graph: module cost per row
/// times n or m, plus m * cols for each aggregation and 5 * m * cols for each
/// edge softmax.
std::size_t count_flops(const Plan& plan, const Graph& graph);

/// Per-step flops in the same closed form.
std::vector<std::size_t> step_flops(const Plan& plan, const Graph& graph);

/// Single-threaded whole-graph interpretation of the plan, for reference.
FeatureStore run_plan_serial(const Plan& plan, const Graph& graph, const FeatureStore& store);

}  // namespace gasline
