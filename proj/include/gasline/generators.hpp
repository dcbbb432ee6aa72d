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
#include <string>

#include "gasline/graph.hpp"
#include "gasline/matrix.hpp"

namespace gasline {

enum class GraphKind : std::uint8_t { ErdosRenyi, PowerLaw };

const char* to_string(GraphKind kind);
/// ParseError for names other than "erdos_renyi" and "power_law".
GraphKind parse_graph_kind(const std::string& name);

/// m distinct directed edges (u, v), u != v, uniform over all such pairs.
/// ContractError when m exceeds n * (n - 1).
EdgeList erdos_renyi(std::size_t n, std::size_t m, std::uint64_t seed);

/// Preferential attachment: vertices arrive in id order and vertex v links to
/// distinct earlier vertices u with probability proportional to
/// in_degree(u) + 1. Edges point new -> old, so early vertices become hubs
/// with large in-degree. The m edges are spread as evenly as possible over
/// vertices 1..n-1 (fewer when a vertex has too few predecessors).
EdgeList power_law(std::size_t n, std::size_t m, std::uint64_t seed);

EdgeList generate_graph(GraphKind kind, std::size_t n, std::size_t m, std::uint64_t seed);

/// n x width features uniform in [-1, 1).
Matrix random_features(std::size_t n, std::size_t width, std::uint64_t seed);

}  // namespace gasline
