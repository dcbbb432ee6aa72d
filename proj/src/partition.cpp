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
#include "gasline/partition.hpp"

#include <algorithm>

#include "gasline/error.hpp"

namespace gasline {

PartId PartitionedGraph::owner(VertexId v) const {
  const std::size_t n = graph_->num_vertices();
  const std::size_t p = num_parts();
  if (v >= n) throw ContractError("vertex " + std::to_string(v) + " out of range");
  const std::size_t small = n / p;
  const std::size_t big_parts = n % p;
  const std::size_t big_span = big_parts * (small + 1);
  if (v < big_span) return static_cast<PartId>(v / (small + 1));
  return static_cast<PartId>(big_parts + (v - big_span) / small);
}

std::size_t PartitionedGraph::total_send_rows() const {
  std::size_t total = 0;
  for (const auto& list : send_lists_) total += list.size();
  return total;
}

PartitionedGraph partition_contiguous(std::shared_ptr<const Graph> g, std::size_t parts) {
  if (parts == 0) throw ContractError("partition count must be at least 1");
  PartitionedGraph pg;
  pg.graph_ = std::move(g);
  const Graph& graph = *pg.graph_;
  const std::size_t n = graph.num_vertices();
  const std::size_t small = n / parts;
  const std::size_t big_parts = n % parts;
  VertexId lo = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t size = small + (p < big_parts ? 1 : 0);
    pg.ranges_.push_back({lo, static_cast<VertexId>(lo + size)});
    lo = static_cast<VertexId>(lo + size);
  }

  pg.local_.resize(parts);
  pg.send_lists_.assign(parts * parts, {});
  const auto in_offsets = graph.in_offsets();
  for (PartId q = 0; q < parts; ++q) {
    const VertexRange r = pg.ranges_[q];
    LocalCsc& local = pg.local_[q];
    const std::size_t begin = in_offsets[r.lo];
    const std::size_t end = in_offsets[r.hi];
    local.offsets.reserve(r.size() + 1);
    for (VertexId v = r.lo; v <= r.hi; ++v) local.offsets.push_back(in_offsets[v] - begin);
    local.sources.assign(graph.in_sources().begin() + begin, graph.in_sources().begin() + end);
    local.edge_ids.assign(graph.in_edge_ids().begin() + begin, graph.in_edge_ids().begin() + end);
    for (VertexId u : local.sources) {
      const PartId p = pg.owner(u);
      if (p != q) pg.send_lists_[p * parts + q].push_back(u);
    }
  }
  for (auto& list : pg.send_lists_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return pg;
}

PartitionedGraph partition_contiguous(const Graph& g, std::size_t parts) {
  return partition_contiguous(std::make_shared<const Graph>(g), parts);
}

}  // namespace gasline
