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
#include "gasline/generators.hpp"

#include <algorithm>
#include <unordered_set>
#include <vector>

#include "gasline/error.hpp"
#include "gasline/rng.hpp"

namespace gasline {

const char* to_string(GraphKind kind) {
  return kind == GraphKind::ErdosRenyi ? "erdos_renyi" : "power_law";
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "erdos_renyi") return GraphKind::ErdosRenyi;
  if (name == "power_law") return GraphKind::PowerLaw;
  throw ParseError("unknown graph kind '" + name + "' (expected erdos_renyi or power_law)");
}

namespace {

void check_ids(std::size_t n) {
  if (n > (std::size_t{1} << 32)) throw ContractError("vertex count does not fit in 32 bits");
}

}  // namespace

EdgeList erdos_renyi(std::size_t n, std::size_t m, std::uint64_t seed) {
  check_ids(n);
  const std::size_t pairs = n < 2 ? 0 : n * (n - 1);
  if (m > pairs) {
    throw ContractError(std::to_string(m) + " edges do not fit in a simple directed graph on " +
                        std::to_string(n) + " vertices");
  }
  Lcg64 rng(seed);
  EdgeList out;
  out.declared_vertices = n;
  out.edges.reserve(m);
  std::unordered_set<std::uint64_t> seen;
  if (m > pairs / 2) {
    // Dense: choose the pairs to keep by partial Fisher-Yates over all pairs.
    std::vector<std::uint64_t> all;
    all.reserve(pairs);
    for (std::uint64_t u = 0; u < n; ++u) {
      for (std::uint64_t v = 0; v < n; ++v) {
        if (u != v) all.push_back(u * n + v);
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(all[i], all[i + rng.below(all.size() - i)]);
      out.edges.push_back({static_cast<VertexId>(all[i] / n), static_cast<VertexId>(all[i] % n)});
    }
    return out;
  }
  while (out.edges.size() < m) {
    const auto u = static_cast<VertexId>(rng.below(n));
    const auto v = static_cast<VertexId>(rng.below(n));
    if (u == v || !seen.insert(std::uint64_t{u} * n + v).second) continue;
    out.edges.push_back({u, v});
  }
  return out;
}

EdgeList power_law(std::size_t n, std::size_t m, std::uint64_t seed) {
  check_ids(n);
  Lcg64 rng(seed);
  EdgeList out;
  out.declared_vertices = n;
  if (n < 2) return out;
  out.edges.reserve(m);
  // urn holds every vertex once plus once per in-edge, so a uniform draw picks
  // u with probability proportional to in_degree(u) + 1.
  std::vector<VertexId> urn;
  urn.reserve(n + m);
  urn.push_back(0);
  const std::size_t arrivals = n - 1;
  std::vector<VertexId> chosen;
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t i = v - 1;
    const std::size_t want = m / arrivals + (i < m % arrivals ? 1 : 0);
    chosen.clear();
    if (want >= v) {
      for (VertexId u = 0; u < v; ++u) chosen.push_back(u);
    } else {
      while (chosen.size() < want) {
        const VertexId u = urn[rng.below(urn.size())];
        if (std::find(chosen.begin(), chosen.end(), u) == chosen.end()) chosen.push_back(u);
      }
    }
    for (VertexId u : chosen) {
      out.edges.push_back({static_cast<VertexId>(v), u});
      urn.push_back(u);
    }
    urn.push_back(static_cast<VertexId>(v));
  }
  return out;
}

EdgeList generate_graph(GraphKind kind, std::size_t n, std::size_t m, std::uint64_t seed) {
  return kind == GraphKind::ErdosRenyi ? erdos_renyi(n, m, seed) : power_law(n, m, seed);
}

Matrix random_features(std::size_t n, std::size_t width, std::uint64_t seed) {
  Lcg64 rng(seed);
  Matrix x(n, width);
  for (auto& v : x.values()) v = 2.0f * rng.uniform() - 1.0f;
  return x;
}

}  // namespace gasline
