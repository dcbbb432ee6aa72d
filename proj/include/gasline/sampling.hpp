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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gasline/graph.hpp"
#include "gasline/matrix.hpp"
#include "gasline/models.hpp"
#include "gasline/runtime.hpp"

namespace gasline {

/// Fanout meaning "every in-edge".
inline constexpr std::size_t kFanoutAll = std::numeric_limits<std::size_t>::max();

/// One fanout per hop, so depth == fanouts.size().
struct SamplingConfig {
  std::vector<std::size_t> fanouts;
  std::uint64_t seed = 0;
  std::vector<VertexId> targets;

  std::size_t depth() const noexcept { return fanouts.size(); }
};

/// Sampled in-neighbourhood of one target. Local vertex i is global
/// nodes[i]; local 0 is the target. Edges connect local ids.
struct SampledSubgraph {
  VertexId target = 0;
  /// hops[0] == {target}; hops[i] holds the vertices first reached at hop i.
  std::vector<std::vector<VertexId>> hops;
  std::vector<VertexId> nodes;
  /// Global ids of the sampled edges, ascending.
  std::vector<EdgeId> edge_ids;
  std::vector<Edge> edges;

  Graph local_graph() const;
};

/// Per target, repeatedly samples min(fanout, in_degree) in-edges without
/// replacement for every vertex first reached at the previous hop (partial
/// Fisher-Yates over in-edge slots, generator seeded with seed ^ target).
/// ContractError on out-of-range targets or a zero fanout.
std::vector<SampledSubgraph> khop_sample(const Graph& graph, const SamplingConfig& config);

/// Sum of subgraph sizes over the size of their union; at least 1.
double redundancy_factor(std::span<const SampledSubgraph> subgraphs);

struct SamplingResult {
  Matrix outputs;  // one row per subgraph, in target order
  std::size_t node_rows = 0;   // vertex rows computed, summed over layers
  std::size_t edge_evals = 0;  // edge-module rows evaluated, summed over layers
  std::size_t flops = 0;       // count_flops of the model plan on each subgraph
  double time_ms = 0.0;
  double redundancy = 1.0;
};

/// Evaluates the model's reference oracle on every subgraph independently and
/// keeps the target row. x holds full-graph input features. GCN normalization
/// uses the full graph's in-degrees, so the ALL-fanout limit is lossless.
SamplingResult subgraph_infer(const Model& model, const Graph& graph,
                              std::span<const SampledSubgraph> subgraphs, const Matrix& x);

struct RunCounters {
  std::size_t flops = 0;
  double time_ms = 0.0;
  double redundancy = 1.0;
};

RunCounters counters(const ExecutionReport& report);
RunCounters counters(const SamplingResult& result);

struct ComparisonRecord {
  std::size_t targets = 0;
  std::size_t full_flops = 0;
  std::size_t sampling_flops = 0;
  double flops_ratio = 1.0;  // sampling / full
  double full_time_ms = 0.0;
  double sampling_time_ms = 0.0;
  double time_ratio = 1.0;   // sampling / full
  double redundancy_factor = 1.0;
  double max_deviation = 0.0;  // max |difference| over target rows

  std::string to_json() const;
};

/// full_rows and sampled_rows hold the target rows of each run, in the same
/// order. ShapeError when they disagree in shape.
ComparisonRecord compare_runs(const RunCounters& full, const RunCounters& sampled,
                              MatrixView full_rows, MatrixView sampled_rows);

/// Rows of x at the given vertices.
Matrix select_rows(MatrixView x, std::span<const VertexId> rows);

}  // namespace gasline
