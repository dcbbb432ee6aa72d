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

#include <cmath>
#include <random>

#include "gasline/error.hpp"
#include "gasline/models.hpp"
#include "gasline/partition.hpp"
#include "gasline/runtime.hpp"
#include "random_modules.hpp"

using namespace gasline;
using gasline::testing::random_graph;
using gasline::testing::random_matrix;

namespace {

Graph triangle() {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {2, 0}};
  return build_graph(e, 3);
}

Matrix engine(const Model& model, const Graph& g, const Matrix& x, std::size_t parts) {
  return run_model(model, g, x, parts).output;
}

}  // namespace

TEST(GatPlan, FourStepsPerLayerWithHeadConcat) {
  const GatModel one = init_gat({3, 4, 2, 0.2f, true, 1}, 1);
  const Plan plan = build_gat_plan(one);
  ASSERT_EQ(plan.steps().size(), 4u);
  EXPECT_TRUE(std::holds_alternative<TransformStep>(plan.steps()[0]));
  EXPECT_TRUE(std::holds_alternative<MessagePassingStep>(plan.steps()[1]));
  EXPECT_TRUE(std::holds_alternative<EdgeSoftmaxStep>(plan.steps()[2]));
  EXPECT_TRUE(std::holds_alternative<MessagePassingStep>(plan.steps()[3]));
  const auto& t = std::get<TransformStep>(plan.steps()[0]);
  ASSERT_EQ(t.outputs.size(), 3u);
  EXPECT_EQ(plan.info(t.outputs[0]).cols, 2u);  // alpha_src, one per head
  EXPECT_EQ(plan.info(t.outputs[1]).cols, 2u);
  EXPECT_EQ(plan.info(t.outputs[2]).cols, 8u);  // x', heads * f_out
  EXPECT_EQ(std::get<MessagePassingStep>(plan.steps()[1]).aggregator, Aggregator::None);
  EXPECT_EQ(plan.info(*plan.find_output(kOutputFeature)).cols, 8u);
  EXPECT_TRUE(plan.requires_self_loops());

  const GatModel two = init_gat({3, 4, 2, 0.2f, true, 2}, 1);
  EXPECT_EQ(build_gat_plan(two).steps().size(), 8u);
  EXPECT_EQ(two.layers[1].W.rows(), 8u);
}

TEST(GatPlan, TwoNodeHandExample) {
  GatModel model{{2, 2, 1, 0.2f, true, 1}, {}};
  model.layers.push_back({Matrix::identity(2), Matrix{{1, 0}}, Matrix{{0, 1}}});
  const std::vector<Edge> e{{0, 1}};
  const Graph g = build_graph(e, 2);
  const Matrix x = Matrix::identity(2);
  // Vertex 1 sees logits leaky(1 + 1) = 2 from vertex 0 and leaky(1 + 0) = 1
  // from itself.
  const double w = std::exp(2.0) / (std::exp(2.0) + std::exp(1.0));
  for (const Matrix& h : {engine(model, g, x, 1), engine(model, g, x, 2), reference_gat(g, model, x)}) {
    EXPECT_FLOAT_EQ(h(0, 0), 1.0f);
    EXPECT_FLOAT_EQ(h(0, 1), 0.0f);
    EXPECT_NEAR(h(1, 0), w, 1e-6);
    EXPECT_NEAR(h(1, 1), 1.0 - w, 1e-6);
    EXPECT_NEAR(h(1, 0), 0.7311, 1e-4);
    EXPECT_NEAR(h(1, 1), 0.2689, 1e-4);
  }
}

TEST(GatPlan, EmptyGraphWithSelfLoopsReturnsProjection) {
  std::mt19937 rng(3);
  const GatModel model = init_gat({3, 2, 2, 0.2f, true, 1}, 7);
  const Graph g = build_graph({}, 5);
  const Matrix x = random_matrix(rng, 5, 3);
  const Matrix h = engine(model, g, x, 2);
  const Matrix ref = reference_gat(g, model, x);
  for (std::size_t v = 0; v < 5; ++v) {
    for (std::size_t j = 0; j < 4; ++j) {
      double xp = 0;
      for (std::size_t t = 0; t < 3; ++t) xp += x(v, t) * model.layers[0].W(t, j);
      EXPECT_NEAR(h(v, j), xp, 1e-6);
      EXPECT_NEAR(ref(v, j), xp, 1e-6);
    }
  }
}

TEST(GatPlan, WithoutSelfLoopsIsolatedVerticesAreZero) {
  const GatModel model = init_gat({2, 2, 1, 0.2f, false, 1}, 2);
  const std::vector<Edge> e{{0, 1}};
  const Graph g = build_graph(e, 3);
  const Matrix x{{1, 2}, {3, 4}, {5, 6}};
  const Matrix h = engine(model, g, x, 1);
  EXPECT_EQ(h.row(0)[0], 0.0f);
  EXPECT_EQ(h.row(2)[1], 0.0f);
  EXPECT_LT(max_relative_error(h, reference_gat(g, model, x)), 1e-5);
}

TEST(GatPlan, AttentionSumsToOnePerDestination) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5 + rng() % 80;
    const Graph g = random_graph(rng, n, rng() % (6 * n));
    const std::size_t heads = 1 + rng() % 3;
    const GatModel model = init_gat({3, 2, heads, 0.2f, true, 1}, trial);
    const Plan plan = build_gat_plan(model);
    const Graph prepared = prepare_graph(model, g);
    const FeatureStore store = prepare_store(model, prepared, random_matrix(rng, n, 3, -3, 3));
    const auto res = execute(plan, partition_contiguous(prepared, 3), store, 3);
    const Matrix& att = res.store.get(Scope::Edge, "l0.attention");
    std::vector<std::vector<double>> sum(n, std::vector<double>(heads, 0.0));
    for (EdgeId id = 0; id < prepared.num_edges(); ++id) {
      for (std::size_t h = 0; h < heads; ++h) sum[prepared.edge(id).dst][h] += att(id, h);
    }
    for (const auto& s : sum) {
      for (double v : s) ASSERT_NEAR(v, 1.0, 1e-6);
    }
  }
}

TEST(GatPlan, SoftmaxIsShiftInvariantPerDestination) {
  std::mt19937 rng(12);
  const std::size_t n = 30;
  const Graph g = random_graph(rng, n, 200);
  const Matrix logits = random_matrix(rng, 200, 2, -4, 4);
  Plan plan;
  const FeatureRef w = plan.edge_softmax(plan.get_edge("logits", 2));
  plan.set_name(w, "w");
  auto run = [&](const Matrix& l) {
    FeatureStore s(n, 200);
    s.attach(Scope::Edge, "logits", l);
    return execute(plan, partition_contiguous(g, 2), s, 2).store.get(Scope::Edge, "w");
  };
  const Matrix base = run(logits);
  for (VertexId target : {0u, 7u, 29u}) {
    for (float shift : {-25.0f, 3.5f, 40.0f}) {
      Matrix shifted = logits;
      for (EdgeId id = 0; id < 200; ++id) {
        if (g.edge(id).dst != target) continue;
        for (std::size_t h = 0; h < 2; ++h) shifted(id, h) += shift;
      }
      EXPECT_LE(max_abs_error(run(shifted), base), 1e-6) << target << " " << shift;
    }
  }
}

TEST(GatPlan, FlopsOnTriangleMatchHandExpansion) {
  const std::size_t f_in = 2, heads = 2, f_out = 3, hf = heads * f_out;
  const GatModel model = init_gat({f_in, f_out, heads, 0.2f, true, 1}, 0);
  const Graph g = prepare_graph(model, triangle());
  const std::size_t n = 3, m = 6;
  ASSERT_EQ(g.num_edges(), m);
  // Vertex transform: x W, then two (mul, head reduce) pairs.
  const std::size_t vertex = n * (2 * f_in * hf + 2 * (hf + hf));
  const std::size_t logits = m * (heads + heads);  // add, leaky_relu
  const std::size_t softmax = 5 * m * heads;
  const std::size_t aggregate = m * hf + m * hf;  // per-head scale, then sum
  EXPECT_EQ(count_flops(build_gat_plan(model), g), vertex + logits + softmax + aggregate);
  EXPECT_EQ(vertex + logits + softmax + aggregate, 300u);
}

TEST(GcnPlan, IsolatedVertexKeepsProjection) {
  GcnModel model{{2, 2, 1}, {{Matrix{{1, 2}, {3, 4}}}}};
  const Graph g = build_graph({}, 1);
  const Matrix x{{1, 1}};
  EXPECT_EQ(engine(model, g, x, 1), (Matrix{{4, 6}}));
}

TEST(GcnPlan, RegularTriangleFixedPoint) {
  GcnModel model{{1, 1, 1}, {{Matrix::identity(1)}}};
  const Matrix x{{1}, {1}, {1}};
  const Matrix h = engine(model, triangle(), x, 2);
  for (std::size_t v = 0; v < 3; ++v) EXPECT_NEAR(h(v, 0), 1.0, 1e-6);
  EXPECT_EQ(build_gcn_plan(model).steps().size(), 3u);
}

TEST(GcnPlan, SingleEdgeHandFormula) {
  GcnModel model{{2, 2, 1}, {{Matrix{{0.5f, -1}, {2, 0.25f}}}}};
  const std::vector<Edge> e{{0, 1}};
  const Graph g = build_graph(e, 2);
  const Matrix x{{1, 2}, {-3, 4}};
  const double c0 = 1.0, c1 = 1.0 / std::sqrt(2.0);
  const double xp0[2] = {1 * 0.5 + 2 * 2, 1 * -1 + 2 * 0.25};
  const double xp1[2] = {-3 * 0.5 + 4 * 2, -3 * -1 + 4 * 0.25};
  for (const Matrix& h : {engine(model, g, x, 1), engine(model, g, x, 2), reference_gcn(g, model, x)}) {
    for (std::size_t f = 0; f < 2; ++f) {
      EXPECT_NEAR(h(0, f), c0 * c0 * xp0[f], 1e-6);
      EXPECT_NEAR(h(1, f), c1 * c0 * xp0[f] + c1 * c1 * xp1[f], 1e-6);
    }
  }
}

TEST(GcnPlan, RandomGraphMatchesOracle) {
  std::mt19937 rng(50);
  const Graph g = random_graph(rng, 50, 300);
  const GcnModel model = init_gcn({6, 4, 1}, 3);
  const Matrix x = random_matrix(rng, 50, 6);
  EXPECT_LT(max_relative_error(engine(model, g, x, 3), reference_gcn(g, model, x)), 1e-5);
}

TEST(Models, EngineAgreesWithOraclesOnRandomInstances) {
  std::mt19937 rng(100);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 120;
    const Graph g = random_graph(rng, n, rng() % (5 * n + 1));
    const std::size_t f_in = 1 + rng() % 6;
    const std::size_t f_out = 1 + rng() % 5;
    const std::size_t layers = 1 + rng() % 2;
    Model model;
    if (trial % 2 == 0) {
      const bool loops = rng() % 4 != 0;
      model = init_gat({f_in, f_out, 1 + rng() % 3, 0.2f, loops, layers}, trial);
    } else {
      model = init_gcn({f_in, f_out, layers}, trial);
    }
    const Matrix x = random_matrix(rng, n, f_in, -2, 2);
    const std::size_t parts = 1 + rng() % 5;
    const Matrix got = engine(model, g, x, parts);
    const double err = max_relative_error(got, reference(model, g, x));
    worst = std::max(worst, err);
    ASSERT_LT(err, 1e-5) << "trial " << trial;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Models, ConfigAndParameterChecks) {
  EXPECT_THROW(init_gat({0, 1, 1, 0.2f, true, 1}, 0), ContractError);
  EXPECT_THROW(init_gat({1, 1, 0, 0.2f, true, 1}, 0), ContractError);
  EXPECT_THROW(init_gcn({1, 1, 0}, 0), ContractError);
  GatModel bad = init_gat({2, 2, 1, 0.2f, true, 1}, 0);
  bad.layers[0].att_src = Matrix(1, 3);
  EXPECT_THROW(build_gat_plan(bad), ShapeError);
  GcnModel short_model = init_gcn({2, 2, 2}, 0);
  short_model.layers.pop_back();
  EXPECT_THROW(build_gcn_plan(short_model), ShapeError);
}

TEST(InitParams, LcgMatchesRecurrence) {
  Lcg64 rng(0);
  EXPECT_EQ(rng.next(), 1442695040888963407ULL);
  EXPECT_EQ(rng.next(), 1442695040888963407ULL * 6364136223846793005ULL + 1442695040888963407ULL);
  Lcg64 u(42);
  for (int i = 0; i < 10000; ++i) {
    const float v = u.uniform();
    ASSERT_GE(v, 0.0f);
    ASSERT_LT(v, 1.0f);
  }
}

TEST(InitParams, DeterministicBoundedAndSeedSensitive) {
  const GatConfig cfg{5, 3, 2, 0.2f, true, 2};
  const GatModel a = init_gat(cfg, 9);
  const GatModel b = init_gat(cfg, 9);
  const GatModel c = init_gat(cfg, 10);
  bool differs = false;
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_TRUE(bitwise_equal(a.layers[l].W, b.layers[l].W));
    EXPECT_TRUE(bitwise_equal(a.layers[l].att_dst, b.layers[l].att_dst));
    differs |= !bitwise_equal(a.layers[l].W, c.layers[l].W);
    const std::size_t in = l == 0 ? 5 : 6;
    const double bound = std::sqrt(6.0 / static_cast<double>(in + 6));
    for (float w : a.layers[l].W.values()) ASSERT_LE(std::abs(w), bound);
    const double att_bound = std::sqrt(6.0 / 4.0);
    for (float w : a.layers[l].att_src.values()) ASSERT_LE(std::abs(w), att_bound);
  }
  EXPECT_TRUE(differs);

  const GcnModel g1 = init_gcn({4, 4, 1}, 1);
  const GcnModel g2 = init_gcn({4, 4, 1}, 2);
  EXPECT_FALSE(bitwise_equal(g1.layers[0].W, g2.layers[0].W));
}

TEST(ModelSpecs, ParseAndBuild) {
  const ModelSpec s = parse_model_spec("gat f_in=4 f_out=3 heads=2 layers=2 slope=0.1 self_loops=0 seed=5");
  EXPECT_EQ(s.name, "gat");
  EXPECT_EQ(s.f_in, 4u);
  EXPECT_EQ(s.heads, 2u);
  EXPECT_FLOAT_EQ(s.leaky_slope, 0.1f);
  EXPECT_FALSE(s.add_self_loops);
  const Model m = make_model(s);
  EXPECT_EQ(output_cols(m), 6u);
  EXPECT_EQ(num_layers(m), 2u);
  EXPECT_EQ(layer_input_cols(m, 1), 6u);
  EXPECT_THROW(parse_model_spec("sage f_in=1"), ParseError);
  EXPECT_FALSE(parse_model_spec("gat f_in=1 self_loops=false").add_self_loops);
  EXPECT_TRUE(parse_model_spec("gat f_in=1 self_loops=true").add_self_loops);
  EXPECT_THROW(parse_model_spec("gat f_in=1 self_loops=maybe"), ParseError);
  EXPECT_THROW(parse_model_spec("gcn width=3"), ParseError);
  EXPECT_THROW(parse_model_spec("gcn f_in=x"), ParseError);
  EXPECT_THROW(parse_model_spec(""), ParseError);
  EXPECT_TRUE(std::holds_alternative<GcnModel>(make_model(parse_model_spec("gcn f_in=2 f_out=2"))));
}
