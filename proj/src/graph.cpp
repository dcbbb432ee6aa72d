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
#include "gasline/graph.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>

#include "gasline/error.hpp"

namespace gasline {

namespace {

// Parses a whole string_view as an unsigned integer.
template <typename T>
bool parse_uint(std::string_view s, T& out, bool& overflow) {
  overflow = false;
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec == std::errc::result_out_of_range) {
    overflow = true;
    return false;
  }
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::optional<std::size_t> parse_vertices_header(std::string_view line) {
  constexpr std::string_view kPrefix = "# vertices ";
  if (!line.starts_with(kPrefix)) return std::nullopt;
  std::size_t n = 0;
  bool overflow = false;
  if (!parse_uint(line.substr(kPrefix.size()), n, overflow)) return std::nullopt;
  return n;
}

}  // namespace

EdgeList load_edge_list(std::istream& in) {
  EdgeList list;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (auto n = parse_vertices_header(line)) list.declared_vertices = n;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("expected \"src<TAB>dst\", got \"" + std::string(line) + "\"", line_no);
    }
    Edge e;
    bool overflow_src = false;
    bool overflow_dst = false;
    const bool ok_src = parse_uint(line.substr(0, tab), e.src, overflow_src);
    const bool ok_dst = parse_uint(line.substr(tab + 1), e.dst, overflow_dst);
    if (overflow_src || overflow_dst) {
      throw ParseError("vertex id does not fit in 32 bits", line_no);
    }
    if (!ok_src || !ok_dst) {
      throw ParseError("malformed edge \"" + std::string(line) + "\"", line_no);
    }
    if (list.edges.size() == std::numeric_limits<EdgeId>::max()) {
      throw ParseError("too many edges for 32-bit edge ids", line_no);
    }
    list.edges.push_back(e);
  }
  return list;
}

EdgeList load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open edge list " + path.string());
  return load_edge_list(in);
}

void write_edge_list(std::ostream& out, std::span<const Edge> edges, std::size_t num_vertices) {
  out << "# vertices " << num_vertices << '\n';
  for (const Edge& e : edges) out << e.src << '\t' << e.dst << '\n';
}

bool Graph::has_self_loop_everywhere() const {
  for (VertexId v = 0; v < num_vertices(); ++v) {
    bool found = false;
    for (VertexId u : in_neighbors(v)) found = found || u == v;
    if (!found) return false;
  }
  return true;
}

Graph build_graph(std::span<const Edge> edges, std::size_t num_vertices) {
  if (edges.size() > std::numeric_limits<EdgeId>::max()) {
    throw ContractError("edge count exceeds 32-bit edge ids");
  }
  Graph g;
  g.edges_.assign(edges.begin(), edges.end());
  g.out_offsets_.assign(num_vertices + 1, 0);
  g.in_offsets_.assign(num_vertices + 1, 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    if (edge.src >= num_vertices || edge.dst >= num_vertices) {
      throw ContractError("edge " + std::to_string(e) + " (" + std::to_string(edge.src) + " -> " +
                          std::to_string(edge.dst) + ") has an endpoint not below " +
                          std::to_string(num_vertices) + " vertices");
    }
    ++g.out_offsets_[edge.src + 1];
    ++g.in_offsets_[edge.dst + 1];
  }
  for (std::size_t v = 0; v < num_vertices; ++v) {
    g.out_offsets_[v + 1] += g.out_offsets_[v];
    g.in_offsets_[v + 1] += g.in_offsets_[v];
  }
  g.out_targets_.resize(edges.size());
  g.out_edge_ids_.resize(edges.size());
  g.in_sources_.resize(edges.size());
  g.in_edge_ids_.resize(edges.size());
  std::vector<std::size_t> out_cursor(g.out_offsets_.begin(), g.out_offsets_.end() - 1);
  std::vector<std::size_t> in_cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
  // Visiting edges in id order keeps every adjacency run sorted by edge id.
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    const std::size_t o = out_cursor[edge.src]++;
    g.out_targets_[o] = edge.dst;
    g.out_edge_ids_[o] = static_cast<EdgeId>(e);
    const std::size_t i = in_cursor[edge.dst]++;
    g.in_sources_[i] = edge.src;
    g.in_edge_ids_[i] = static_cast<EdgeId>(e);
  }
  return g;
}

Graph add_self_loops(const Graph& g) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  for (VertexId v = 0; v < g.num_vertices(); ++v) {
    bool found = false;
    for (VertexId u : g.in_neighbors(v)) found = found || u == v;
    if (!found) edges.push_back({v, v});
  }
  return build_graph(edges, g.num_vertices());
}

}  // namespace gasline
