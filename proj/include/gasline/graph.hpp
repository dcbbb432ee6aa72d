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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace gasline {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Edge {
  VertexId src = 0;
  VertexId dst = 0;

  bool operator==(const Edge&) const = default;
};

/// Parsed edge-list file. Edge id = position in `edges`.
struct EdgeList {
  std::vector<Edge> edges;
  /// From a "# vertices <n>" header comment, when present.
  std::optional<std::size_t> declared_vertices;
};

/// Reads "src<TAB>dst" lines. Lines starting with '#' and blank lines are
/// skipped; a "# vertices <n>" comment declares the vertex count. Throws
/// ParseError with the 1-based line number on malformed lines or ids that do
/// not fit in 32 bits.
EdgeList load_edge_list(std::istream& in);
EdgeList load_edge_list(const std::filesystem::path& path);

/// Writes the header comment followed by one "src\tdst" line per edge.
void write_edge_list(std::ostream& out, std::span<const Edge> edges, std::size_t num_vertices);

/// Immutable CSR + CSC topology with stable edge ids. Within each destination
/// the CSC slots are in ascending edge id; this is the aggregation order used
/// everywhere.
class Graph {
 public:
  Graph() : out_offsets_(1, 0), in_offsets_(1, 0) {}

  std::size_t num_vertices() const noexcept { return out_offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }

  std::span<const std::size_t> out_offsets() const noexcept { return out_offsets_; }
  std::span<const VertexId> out_targets() const noexcept { return out_targets_; }
  std::span<const EdgeId> out_edge_ids() const noexcept { return out_edge_ids_; }
  std::span<const std::size_t> in_offsets() const noexcept { return in_offsets_; }
  std::span<const VertexId> in_sources() const noexcept { return in_sources_; }
  std::span<const EdgeId> in_edge_ids() const noexcept { return in_edge_ids_; }

  std::size_t in_degree(VertexId v) const { return in_offsets_[v + 1] - in_offsets_[v]; }
  std::size_t out_degree(VertexId v) const { return out_offsets_[v + 1] - out_offsets_[v]; }
  std::span<const VertexId> in_neighbors(VertexId v) const {
    return std::span(in_sources_).subspan(in_offsets_[v], in_degree(v));
  }
  std::span<const EdgeId> in_edges(VertexId v) const {
    return std::span(in_edge_ids_).subspan(in_offsets_[v], in_degree(v));
  }
  std::span<const VertexId> out_neighbors(VertexId v) const {
    return std::span(out_targets_).subspan(out_offsets_[v], out_degree(v));
  }

  /// True when every vertex has at least one self-loop.
  bool has_self_loop_everywhere() const;

 private:
  friend Graph build_graph(std::span<const Edge> edges, std::size_t num_vertices);

  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_;
  std::vector<VertexId> out_targets_;
  std::vector<EdgeId> out_edge_ids_;
  std::vector<std::size_t> in_offsets_;
  std::vector<VertexId> in_sources_;
  std::vector<EdgeId> in_edge_ids_;
};

/// Builds CSR/CSC. Parallel edges are kept. ContractError when an endpoint is
/// not below num_vertices.
Graph build_graph(std::span<const Edge> edges, std::size_t num_vertices);

/// Appends (v, v) for every vertex lacking a self-loop, in ascending v, with
/// edge ids following all existing ids. Idempotent.
Graph add_self_loops(const Graph& g);

}  // namespace gasline
