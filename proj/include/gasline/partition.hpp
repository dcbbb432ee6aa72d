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
#include <memory>
#include <span>
#include <vector>

#include "gasline/graph.hpp"

namespace gasline {

using PartId = std::uint32_t;

struct VertexRange {
  VertexId lo = 0;
  VertexId hi = 0;

  std::size_t size() const noexcept { return hi - lo; }
  bool contains(VertexId v) const noexcept { return v >= lo && v < hi; }
  bool operator==(const VertexRange&) const = default;
};

/// In-edges of one partition's owned destinations, in global CSC order.
/// offsets are local (offsets[0] == 0) and indexed by v - range.lo.
struct LocalCsc {
  std::vector<std::size_t> offsets;
  std::vector<VertexId> sources;
  std::vector<EdgeId> edge_ids;

  std::size_t num_edges() const noexcept { return sources.size(); }
};

/// Contiguous vertex-range partitioning with edge-cut ownership: each edge
/// belongs to the partition owning its destination.
class PartitionedGraph {
 public:
  std::size_t num_parts() const noexcept { return ranges_.size(); }
  const Graph& graph() const noexcept { return *graph_; }
  std::shared_ptr<const Graph> shared_graph() const noexcept { return graph_; }

  const VertexRange& range(PartId p) const { return ranges_.at(p); }
  PartId owner(VertexId v) const;
  const LocalCsc& local_csc(PartId p) const { return local_.at(p); }

  /// Ascending vertices owned by `from` that are sources of at least one edge
  /// whose destination `to` owns. Empty when from == to.
  std::span<const VertexId> send_list(PartId from, PartId to) const {
    return send_lists_.at(from * num_parts() + to);
  }
  /// Sum of |send_list(p, q)| over all p != q.
  std::size_t total_send_rows() const;

 private:
  friend PartitionedGraph partition_contiguous(std::shared_ptr<const Graph> g, std::size_t parts);

  std::shared_ptr<const Graph> graph_;
  std::vector<VertexRange> ranges_;
  std::vector<LocalCsc> local_;
  std::vector<std::vector<VertexId>> send_lists_;
};

/// The first n mod P ranges get ceil(n/P) vertices, the rest floor(n/P).
/// P > n is allowed and yields empty trailing parts; P == 0 is a ContractError.
PartitionedGraph partition_contiguous(std::shared_ptr<const Graph> g, std::size_t parts);
PartitionedGraph partition_contiguous(const Graph& g, std::size_t parts);

}  // namespace gasline
