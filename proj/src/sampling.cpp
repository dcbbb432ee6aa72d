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
#include "gasline/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gasline/error.hpp"
#include "gasline/rng.hpp"

namespace gasline {

Graph SampledSubgraph::local_graph() const { return build_graph(edges, nodes.size()); }

std::vector<SampledSubgraph> khop_sample(const Graph& graph, const SamplingConfig& config) {
  for (std::size_t f : config.fanouts) {
    if (f == 0) throw ContractError("fanouts must be at least 1");
  }
  std::vector<SampledSubgraph> out;
  out.reserve(config.targets.size());
  std::vector<EdgeId> slots;
  for (VertexId target : config.targets) {
    if (target >= graph.num_vertices()) {
      throw ContractError("target " + std::to_string(target) + " is not a vertex of a " +
                          std::to_string(graph.num_vertices()) + "-vertex graph");
    }
    Lcg64 rng(config.seed ^ target);
    SampledSubgraph sg;
    sg.target = target;
    std::unordered_map<VertexId, VertexId> local{{target, 0}};
    sg.nodes.push_back(target);
    sg.hops.push_back({target});
    for (std::size_t hop = 0; hop < config.depth(); ++hop) {
      const std::size_t fanout = config.fanouts[hop];
      std::vector<VertexId> next;
      for (VertexId v : sg.hops.back()) {
        const auto ids = graph.in_edges(v);
        slots.assign(ids.begin(), ids.end());
        const std::size_t take = std::min(fanout, slots.size());
        if (take < slots.size()) {
          for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(slots.size() - i));
            std::swap(slots[i], slots[j]);
          }
        }
        for (std::size_t i = 0; i < take; ++i) {
          sg.edge_ids.push_back(slots[i]);
          const VertexId u = graph.edge(slots[i]).src;
          if (local.emplace(u, static_cast<VertexId>(sg.nodes.size())).second) {
            sg.nodes.push_back(u);
            next.push_back(u);
          }
        }
      }
      sg.hops.push_back(std::move(next));
    }
    std::sort(sg.edge_ids.begin(), sg.edge_ids.end());
    for (EdgeId id : sg.edge_ids) {
      const Edge e = graph.edge(id);
      sg.edges.push_back({local.at(e.src), local.at(e.dst)});
    }
    out.push_back(std::move(sg));
  }
  return out;
}

double redundancy_factor(std::span<const SampledSubgraph> subgraphs) {
  if (subgraphs.empty()) throw ContractError("redundancy_factor needs at least one subgraph");
  std::size_t total = 0;
  std::unordered_set<VertexId> all;
  for (const auto& sg : subgraphs) {
    total += sg.nodes.size();
    all.insert(sg.nodes.begin(), sg.nodes.end());
  }
  return static_cast<double>(total) / static_cast<double>(all.size());
}

Matrix select_rows(MatrixView x, std::span<const VertexId> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) throw ContractError("row " + std::to_string(rows[i]) + " out of range");
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

SamplingResult subgraph_infer(const Model& model, const Graph& graph,
                              std::span<const SampledSubgraph> subgraphs, const Matrix& x) {
  if (x.rows() != graph.num_vertices()) {
    throw ShapeError("features have " + std::to_string(x.rows()) + " rows for a " +
                     std::to_string(graph.num_vertices()) + "-vertex graph");
  }
  const Plan plan = build_plan(model);
  const std::size_t layers = num_layers(model);
  SamplingResult res;
  res.outputs = Matrix(subgraphs.size(), output_cols(model));
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> degrees;
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    const SampledSubgraph& sg = subgraphs[i];
    const Graph local = sg.local_graph();
    const Graph prepared = prepare_graph(model, local);
    degrees.clear();
    for (VertexId v : sg.nodes) degrees.push_back(graph.in_degree(v));
    const Matrix xl = select_rows(x, sg.nodes);
    const Matrix h = reference(model, local, xl, degrees);
    std::copy(h.row(0).begin(), h.row(0).end(), res.outputs.row(i).begin());
    res.node_rows += layers * sg.nodes.size();
    res.edge_evals += layers * prepared.num_edges();
    res.flops += count_flops(plan, prepared);
  }
  res.time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (!subgraphs.empty()) res.redundancy = redundancy_factor(subgraphs);
  return res;
}

RunCounters counters(const ExecutionReport& report) {
  return {report.total_flops(), report.total_time_ms(), 1.0};
}

RunCounters counters(const SamplingResult& result) {
  return {result.flops, result.time_ms, result.redundancy};
}

namespace {

double ratio(double num, double den) {
  if (num == den) return 1.0;
  if (den == 0) return std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace

ComparisonRecord compare_runs(const RunCounters& full, const RunCounters& sampled,
                              MatrixView full_rows, MatrixView sampled_rows) {
  if (full_rows.rows() != sampled_rows.rows() || full_rows.cols() != sampled_rows.cols()) {
    throw ShapeError("target rows differ in shape: " + std::to_string(full_rows.rows()) + "x" +
                     std::to_string(full_rows.cols()) + " vs " +
                     std::to_string(sampled_rows.rows()) + "x" + std::to_string(sampled_rows.cols()));
  }
  ComparisonRecord r;
  r.targets = full_rows.rows();
  r.full_flops = full.flops;
  r.sampling_flops = sampled.flops;
  r.flops_ratio = ratio(static_cast<double>(sampled.flops), static_cast<double>(full.flops));
  r.full_time_ms = full.time_ms;
  r.sampling_time_ms = sampled.time_ms;
  r.time_ratio = ratio(sampled.time_ms, full.time_ms);
  r.redundancy_factor = sampled.redundancy;
  r.max_deviation = max_abs_error(sampled_rows, full_rows);
  return r;
}

std::string ComparisonRecord::to_json() const {
  nlohmann::ordered_json j;
  j["targets"] = targets;
  j["full_flops"] = full_flops;
  j["sampling_flops"] = sampling_flops;
  j["flops_ratio"] = flops_ratio;
  j["full_time_ms"] = full_time_ms;
  j["sampling_time_ms"] = sampling_time_ms;
  j["time_ratio"] = time_ratio;
  j["redundancy_factor"] = redundancy_factor;
  j["max_deviation"] = max_deviation;
  return j.dump(2);
}

}  // namespace gasline
