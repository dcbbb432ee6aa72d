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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gasline/graph.hpp"
#include "gasline/matrix.hpp"
#include "gasline/plan.hpp"
#include "gasline/rng.hpp"
#include "gasline/runtime.hpp"

namespace gasline {

/// Multi-head graph attention. Heads are laid out head-major: columns
/// [h * f_out, (h + 1) * f_out) belong to head h, and layer outputs
/// concatenate heads.
struct GatConfig {
  std::size_t f_in = 1;
  std::size_t f_out = 1;
  std::size_t heads = 1;
  float leaky_slope = 0.2f;
  bool add_self_loops = true;
  std::size_t layers = 1;
};

/// Symmetrically normalized graph convolution, c_v = 1 / sqrt(in_degree + 1),
/// with the self term added analytically instead of as a graph edge.
struct GcnConfig {
  std::size_t f_in = 1;
  std::size_t f_out = 1;
  std::size_t layers = 1;
};

struct GatLayer {
  Matrix W;        // layer_in x heads * f_out
  Matrix att_src;  // 1 x heads * f_out
  Matrix att_dst;  // 1 x heads * f_out
};

struct GcnLayer {
  Matrix W;  // layer_in x f_out
};

struct GatModel {
  GatConfig config;
  std::vector<GatLayer> layers;
};

struct GcnModel {
  GcnConfig config;
  std::vector<GcnLayer> layers;
};

using Model = std::variant<GatModel, GcnModel>;

/// Name of the vertex feature every model plan reads.
inline constexpr const char* kInputFeature = "input";
/// Name of the final layer's output feature.
inline constexpr const char* kOutputFeature = "output";
/// Per-vertex GCN normalization, attached by prepare_store.
inline constexpr const char* kGcnNormFeature = "gcn_norm";

std::size_t layer_input_cols(const Model& model, std::size_t layer);
std::size_t output_cols(const Model& model);
std::size_t num_layers(const Model& model);

/// Xavier-uniform matrix: w = (2u - 1) * sqrt(6 / (fan_in + fan_out)), with
/// u from Lcg64::uniform in row-major order.
Matrix xavier_uniform(Lcg64& rng, std::size_t rows, std::size_t cols, std::size_t fan_in,
                      std::size_t fan_out);

/// Deterministic parameters. Per layer, in order: W (fan_in = layer input
/// cols, fan_out = heads * f_out), then att_src and att_dst (fan_in = f_out,
/// fan_out = 1). ContractError on zero widths, heads or layers.
GatModel init_gat(const GatConfig& config, std::uint64_t seed);
GcnModel init_gcn(const GcnConfig& config, std::uint64_t seed);

/// Declarative model description: "gat" or "gcn" plus hyperparameters.
struct ModelSpec {
  std::string name = "gat";
  std::size_t f_in = 1;
  std::size_t f_out = 1;
  std::size_t heads = 1;
  std::size_t layers = 1;
  float leaky_slope = 0.2f;
  bool add_self_loops = true;
  std::uint64_t seed = 0;
};

/// Parses "name key=value ...", keys f_in, f_out, heads, layers, slope,
/// self_loops (0/1 or true/false) and seed. ParseError on unknown names or keys.
ModelSpec parse_model_spec(std::string_view text);
Model make_model(const ModelSpec& spec);

/// Plan with one layer after another. Layers after the first apply ReLU to
/// their input. Intermediate outputs are named "l<layer>.<what>"; the last
/// layer's output is kOutputFeature. ShapeError on malformed parameters.
Plan build_gat_plan(const GatModel& model);
Plan build_gcn_plan(const GcnModel& model);
Plan build_plan(const Model& model);

/// Graph the plan runs on: GAT with self-loops adds the missing ones.
Graph prepare_graph(const Model& model, const Graph& graph);
/// Store for the prepared graph with the input and any derived features.
/// in_degrees overrides the graph's in-degrees for the GCN normalization.
FeatureStore prepare_store(const Model& model, const Graph& prepared, Matrix x,
                           std::optional<std::span<const std::size_t>> in_degrees = std::nullopt);

struct ModelRun {
  Matrix output;
  ExecutionReport report;
  std::size_t plan_flops = 0;
};

/// Prepares graph and store, partitions into `parts` and executes.
ModelRun run_model(const Model& model, const Graph& graph, const Matrix& x, std::size_t parts,
                   const ExecuteOptions& options = {});

/// Scalar-loop oracles in double precision over the raw (unprepared) graph.
/// They share no kernels with the engine.
Matrix reference_gat(const Graph& graph, const GatModel& model, MatrixView x);
Matrix reference_gcn(const Graph& graph, const GcnModel& model, MatrixView x,
                     std::optional<std::span<const std::size_t>> in_degrees = std::nullopt);
Matrix reference(const Model& model, const Graph& graph, MatrixView x,
                 std::optional<std::span<const std::size_t>> in_degrees = std::nullopt);

}  // namespace gasline
