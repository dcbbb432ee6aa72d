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
#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <set>

#include "gasline/error.hpp"
#include "gasline/models.hpp"
#include "gasline/sampling.hpp"
#include "random_modules.hpp"

using namespace gasline;
using gasline::testing::random_graph;
using gasline::testing::random_matrix;

namespace {

Graph from_edges(std::vector<Edge> e, std::size_t n) { return build_graph(e, n); }

std::set<VertexId> node_set(const SampledSubgraph& sg) {
  return {sg.nodes.begin(), sg.nodes.end()};
}

std::vector<VertexId> all_vertices(std::size_t n) {
  std::vector<VertexId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<VertexId>(i);
  return v;
}

// In-ancestors of target within `depth` hops, by reverse BFS over the edge list.
std::set<VertexId> ancestors(const Graph& g, VertexId target, std::size_t depth) {
  std::vector<std::size_t> dist(g.num_vertices(), SIZE_MAX);
  std::deque<VertexId> q{target};
  dist[target] = 0;
  while (!q.empty()) {
    const VertexId v = q.front();
    q.pop_front();
    if (dist[v] == depth) continue;
    for (const Edge& e : g.edges()) {
      if (e.dst == v && dist[e.src] == SIZE_MAX) {
        dist[e.src] = dist[v] + 1;
        q.push_back(e.src);
      }
    }
  }
  std::set<VertexId> out;
  for (VertexId v = 0; v < g.num_vertices(); ++v) {
    if (dist[v] != SIZE_MAX) out.insert(v);
  }
  return out;
}

}  // namespace

TEST(KhopSample, TriangleOneHop) {
  const Graph g = from_edges({{0, 1}, {1, 2}, {2, 0}}, 3);
  const auto sgs = khop_sample(g, {{kFanoutAll}, 1, {0}});
  ASSERT_EQ(sgs.size(), 1u);
  EXPECT_EQ(node_set(sgs[0]), (std::set<VertexId>{0, 2}));
  EXPECT_EQ(sgs[0].nodes.front(), 0u);
  EXPECT_EQ(sgs[0].edge_ids, std::vector<EdgeId>{2});
  ASSERT_EQ(sgs[0].edges.size(), 1u);
  EXPECT_EQ(sgs[0].edges[0], (Edge{1, 0}));
}

TEST(KhopSample, DepthZeroIsTargetOnly) {
  std::mt19937 rng(1);
  const Graph g = random_graph(rng, 30, 200);
  const auto sgs = khop_sample(g, {{}, 5, {4, 9}});
  for (const auto& sg : sgs) {
    EXPECT_EQ(sg.nodes, std::vector<VertexId>{sg.target});
    EXPECT_TRUE(sg.edges.empty());
    EXPECT_EQ(sg.hops.size(), 1u);
  }
}

TEST(KhopSample, FullFanoutReachesAllAncestors) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    const Graph g = random_graph(rng, n, rng() % (3 * n));
    const std::size_t depth = rng() % 2 == 0 ? n : 1 + rng() % 3;
    const VertexId t = static_cast<VertexId>(rng() % n);
    const auto sgs = khop_sample(g, {std::vector<std::size_t>(depth, kFanoutAll), 3, {t}});
    EXPECT_EQ(node_set(sgs[0]), ancestors(g, t, depth)) << "trial " << trial;
  }
}

TEST(KhopSample, StructuralInvariantsAndDeterminism) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 100;
    const Graph g = random_graph(rng, n, rng() % (8 * n));
    SamplingConfig cfg{{1 + rng() % 4, 1 + rng() % 4}, rng(), {}};
    for (int k = 0; k < 5; ++k) cfg.targets.push_back(static_cast<VertexId>(rng() % n));
    const auto a = khop_sample(g, cfg);
    const auto b = khop_sample(g, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].nodes, b[i].nodes);
      EXPECT_EQ(a[i].edge_ids, b[i].edge_ids);
      EXPECT_EQ(a[i].nodes.front(), cfg.targets[i]);
      EXPECT_EQ(a[i].hops.size(), 3u);
      EXPECT_TRUE(std::is_sorted(a[i].edge_ids.begin(), a[i].edge_ids.end()));
      EXPECT_EQ(std::set<EdgeId>(a[i].edge_ids.begin(), a[i].edge_ids.end()).size(),
                a[i].edge_ids.size());
      std::vector<std::size_t> sampled_in(a[i].nodes.size(), 0);
      for (std::size_t k = 0; k < a[i].edges.size(); ++k) {
        const Edge local = a[i].edges[k];
        const Edge global = g.edge(a[i].edge_ids[k]);
        ASSERT_LT(local.src, a[i].nodes.size());
        ASSERT_LT(local.dst, a[i].nodes.size());
        EXPECT_EQ(a[i].nodes[local.src], global.src);
        EXPECT_EQ(a[i].nodes[local.dst], global.dst);
        ++sampled_in[local.dst];
      }
      for (std::size_t hop = 0; hop < 2; ++hop) {
        for (VertexId v : a[i].hops[hop]) {
          const std::size_t local =
              std::find(a[i].nodes.begin(), a[i].nodes.end(), v) - a[i].nodes.begin();
          EXPECT_EQ(sampled_in[local], std::min(cfg.fanouts[hop], g.in_degree(v)));
        }
      }
    }
  }
}

TEST(KhopSample, RejectsBadConfigs) {
  const Graph g = from_edges({{0, 1}}, 2);
  EXPECT_THROW(khop_sample(g, {{0}, 0, {0}}), ContractError);
  EXPECT_THROW(khop_sample(g, {{1}, 0, {2}}), ContractError);
}

TEST(Redundancy, HandExamples) {
  const Graph path = from_edges({{0, 1}, {1, 2}}, 3);
  const auto sgs = khop_sample(path, {{kFanoutAll}, 0, {0, 1, 2}});
  EXPECT_EQ(node_set(sgs[0]), (std::set<VertexId>{0}));
  EXPECT_EQ(node_set(sgs[1]), (std::set<VertexId>{0, 1}));
  EXPECT_EQ(node_set(sgs[2]), (std::set<VertexId>{1, 2}));
  EXPECT_DOUBLE_EQ(redundancy_factor(sgs), 5.0 / 3.0);

  const Graph pairs = from_edges({{0, 1}, {2, 3}, {4, 5}}, 6);
  EXPECT_DOUBLE_EQ(redundancy_factor(khop_sample(pairs, {{kFanoutAll}, 0, {1, 3, 5}})), 1.0);
  EXPECT_DOUBLE_EQ(redundancy_factor(khop_sample(path, {{kFanoutAll}, 0, {2, 2, 2, 2}})), 4.0);
  EXPECT_THROW(redundancy_factor({}), ContractError);
}

TEST(Redundancy, AtLeastOneAndOneIffDisjoint) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    const Graph g = random_graph(rng, n, rng() % (2 * n));
    SamplingConfig cfg{{kFanoutAll}, 1, {}};
    const std::size_t k = 1 + rng() % 5;
    for (std::size_t i = 0; i < k; ++i) cfg.targets.push_back(static_cast<VertexId>(rng() % n));
    const auto sgs = khop_sample(g, cfg);
    bool disjoint = true;
    for (std::size_t i = 0; i < sgs.size(); ++i) {
      for (std::size_t j = i + 1; j < sgs.size(); ++j) {
        const auto a = node_set(sgs[i]);
        for (VertexId v : sgs[j].nodes) disjoint = disjoint && !a.contains(v);
      }
    }
    const double r = redundancy_factor(sgs);
    EXPECT_GE(r, 1.0);
    EXPECT_EQ(r == 1.0, disjoint) << "trial " << trial;
  }
}

TEST(SubgraphInfer, FullFanoutIsLossless) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 16; ++trial) {
    const std::size_t n = 2 + rng() % 299;
    const Graph g = random_graph(rng, n, rng() % (4 * n));
    const std::size_t layers = 1 + trial % 2;
    Model model;
    if (trial % 4 < 2) {
      model = init_gat({3, 2, 1 + rng() % 2, 0.2f, true, layers}, trial);
    } else {
      model = init_gcn({3, 4, layers}, trial);
    }
    const Matrix x = random_matrix(rng, n, 3, -2, 2);
    SamplingConfig cfg{std::vector<std::size_t>(layers, kFanoutAll), 9, {}};
    for (int k = 0; k < 12; ++k) cfg.targets.push_back(static_cast<VertexId>(rng() % n));
    const auto sgs = khop_sample(g, cfg);
    const SamplingResult sampled = subgraph_infer(model, g, sgs, x);
    const Matrix full = run_model(model, g, x, 3).output;
    EXPECT_LT(max_relative_error(sampled.outputs, select_rows(full, cfg.targets)), 1e-5)
        << "trial " << trial;
  }
}

TEST(SubgraphInfer, DepthZeroGcnIsSelfTerm) {
  std::mt19937 rng(6);
  const Graph g = random_graph(rng, 20, 80);
  const GcnModel model = init_gcn({3, 2, 1}, 4);
  const Matrix x = random_matrix(rng, 20, 3);
  const SamplingConfig cfg{{}, 0, {0, 5, 11}};
  const SamplingResult r = subgraph_infer(model, g, khop_sample(g, cfg), x);
  for (std::size_t i = 0; i < cfg.targets.size(); ++i) {
    const VertexId v = cfg.targets[i];
    const double c2 = 1.0 / (static_cast<double>(g.in_degree(v)) + 1.0);
    for (std::size_t f = 0; f < 2; ++f) {
      double xp = 0;
      for (std::size_t t = 0; t < 3; ++t) xp += x(v, t) * model.layers[0].W(t, f);
      EXPECT_NEAR(r.outputs(i, f), c2 * xp, 1e-6);
    }
  }
  EXPECT_EQ(r.node_rows, 3u);
  EXPECT_EQ(r.edge_evals, 0u);
}

TEST(SubgraphInfer, SmallFanoutLosesInformation) {
  std::mt19937 rng(7);
  const std::size_t n = 200;
  const Graph g = random_graph(rng, n, 20 * n);
  const GcnModel model = init_gcn({4, 4, 2}, 1);
  const Matrix x = random_matrix(rng, n, 4, -2, 2);
  const SamplingConfig cfg{{1, 1}, 3, all_vertices(20)};
  const SamplingResult s = subgraph_infer(model, g, khop_sample(g, cfg), x);
  const Matrix full = select_rows(run_model(model, g, x, 2).output, cfg.targets);
  EXPECT_GT(max_abs_error(s.outputs, full), 1e-3);
}

TEST(SubgraphInfer, FullGraphInferenceDominatesOnFlops) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 30 + rng() % 60;
    const Graph g = random_graph(rng, n, 6 * n);
    const Model model = trial % 2 ? Model(init_gat({4, 4, 2, 0.2f, true, 2}, 1))
                                  : Model(init_gcn({4, 4, 2}, 1));
    const Matrix x = random_matrix(rng, n, 4);
    const SamplingConfig cfg{{kFanoutAll, kFanoutAll}, 0, all_vertices(n)};
    const auto sgs = khop_sample(g, cfg);
    const SamplingResult s = subgraph_infer(model, g, sgs, x);
    const ModelRun full = run_model(model, g, x, 4);
    EXPECT_EQ(full.report.total_flops(), full.plan_flops);
    // Dense enough that 1-hop neighbourhoods overlap, so the bound is strict.
    EXPECT_GT(s.flops, full.plan_flops);
    EXPECT_GT(s.redundancy, 1.0);
    const auto rec = compare_runs(counters(full.report), counters(s), full.output, s.outputs);
    EXPECT_GT(rec.flops_ratio, 1.0);
    EXPECT_LT(rec.max_deviation, 1e-4);
  }
}

TEST(SubgraphInfer, FewTargetsFavourSampling) {
  std::mt19937 rng(9);
  const std::size_t n = 500;
  const Graph g = random_graph(rng, n, 1500);
  const GcnModel model = init_gcn({4, 4, 2}, 2);
  const Matrix x = random_matrix(rng, n, 4);
  const SamplingConfig cfg{{kFanoutAll, kFanoutAll}, 0, {17}};
  const SamplingResult s = subgraph_infer(model, g, khop_sample(g, cfg), x);
  const ModelRun full = run_model(model, g, x, 2);
  EXPECT_LT(s.flops, full.plan_flops);
}

TEST(CompareRuns, SelfComparisonIsNeutral) {
  std::mt19937 rng(10);
  const Graph g = random_graph(rng, 40, 160);
  const GatModel model = init_gat({3, 3, 1, 0.2f, true, 1}, 0);
  const Matrix x = random_matrix(rng, 40, 3);
  const ModelRun run = run_model(model, g, x, 2);
  const auto rec = compare_runs(counters(run.report), counters(run.report), run.output, run.output);
  EXPECT_DOUBLE_EQ(rec.flops_ratio, 1.0);
  EXPECT_DOUBLE_EQ(rec.time_ratio, 1.0);
  EXPECT_DOUBLE_EQ(rec.redundancy_factor, 1.0);
  EXPECT_DOUBLE_EQ(rec.max_deviation, 0.0);
  const auto j = nlohmann::json::parse(rec.to_json());
  for (const char* key : {"flops_ratio", "time_ratio", "redundancy_factor", "max_deviation"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_THROW(compare_runs(counters(run.report), counters(run.report), run.output,
                            select_rows(run.output, std::vector<VertexId>{0})),
               ShapeError);
}
