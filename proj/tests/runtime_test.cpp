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

#include <atomic>
#include <random>
#include <string>
#include <thread>

#include "gasline/channel.hpp"
#include "gasline/error.hpp"
#include "gasline/partition.hpp"
#include "gasline/plan.hpp"
#include "gasline/runtime.hpp"
#include "random_modules.hpp"

using namespace gasline;
using gasline::testing::random_graph;
using gasline::testing::random_matrix;

namespace {

ModuleGraph identity_module(std::size_t cols) {
  ModuleGraph m("identity");
  m.output("out", m.identity(m.input("x", cols)));
  return m;
}

Graph path3() {
  const std::vector<Edge> e{{0, 1}, {1, 2}};
  return build_graph(e, 3);
}

struct SumPlan {
  Plan plan;
  FeatureRef out;
};

SumPlan identity_sum(std::size_t cols, Aggregator agg = Aggregator::Sum) {
  SumPlan p;
  p.out = p.plan.message_passing({p.plan.get_vertex("x")}, {}, {}, identity_module(cols), agg);
  p.plan.set_name(p.out, "h");
  return p;
}

FeatureStore vertex_store(const Graph& g, Matrix x) {
  FeatureStore s(g.num_vertices(), g.num_edges());
  s.attach(Scope::Vertex, "x", std::move(x));
  return s;
}

// Two message-passing layers with a weighted transform between them, plus an
// edge softmax; touches every step kind.
Plan mixed_plan(std::size_t f, Aggregator agg) {
  Plan plan;
  ModuleGraph lin("lin");
  Matrix w(f, f);
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t j = 0; j < f; ++j) w(i, j) = 0.1f * static_cast<float>(i + 2 * j) - 0.3f;
  }
  lin.set_param("W", w);
  lin.output("h", lin.leaky_relu(lin.matmul_param(lin.input("x", f), "W"), 0.0f));
  const auto h = plan.transform({plan.get_vertex("x")}, lin);
  ModuleGraph score("score");
  const NodeId ss = score.input("s", f);
  const NodeId sd = score.input("d", f);
  score.output("s", score.reduce_sum(score.mul(ss, sd)));
  const auto logits = plan.message_passing({h[0]}, {h[0]}, {}, score, Aggregator::None);
  const auto att = plan.edge_softmax(logits);
  ModuleGraph weigh("weigh");
  const NodeId wx = weigh.input("x", f);
  const NodeId wa = weigh.input("a", 1);
  weigh.output("m", weigh.scale_rows(wx, wa));
  const auto agg1 = plan.message_passing({h[0]}, {}, {att}, weigh, agg);
  const auto agg2 = plan.message_passing({agg1}, {}, {}, identity_module(f), agg);
  plan.set_name(agg2, "out");
  return plan;
}

}  // namespace

TEST(Runtime, PathSuperstepShipsOneBatch) {
  const Graph g = path3();
  const FeatureStore store = vertex_store(g, Matrix{{1}, {2}, {3}});
  auto sp = identity_sum(1);
  auto pg = partition_contiguous(g, 2);
  ASSERT_EQ(pg.range(0), (VertexRange{0, 2}));

  const PartitionState s0 = load_partition(sp.plan, pg, 0, store);
  const auto batches = scatter(pg, 0, sp.plan.steps()[0], s0);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].from_part, 0u);
  EXPECT_EQ(batches[0].to_part, 1u);
  EXPECT_EQ(batches[0].row_ids, std::vector<VertexId>{1});
  EXPECT_EQ(batches[0].payload, (Matrix{{2}}));
  EXPECT_TRUE(scatter(pg, 1, sp.plan.steps()[0], load_partition(sp.plan, pg, 1, store)).empty());

  auto res = execute(sp.plan, pg, store, 2);
  EXPECT_EQ(res.store.get(Scope::Vertex, "h"), (Matrix{{0}, {1}, {2}}));
  ASSERT_EQ(res.report.steps.size(), 1u);
  EXPECT_EQ(res.report.steps[0].batches, 1u);
  EXPECT_EQ(res.report.steps[0].bytes_shipped, 4u);
  EXPECT_EQ(res.report.steps[0].gathered_rows, 2u);
}

TEST(Runtime, SinglePartNeverScatters) {
  std::mt19937 rng(1);
  const Graph g = random_graph(rng, 50, 200);
  const FeatureStore store = vertex_store(g, random_matrix(rng, 50, 3));
  auto sp = identity_sum(3);
  auto pg = partition_contiguous(g, 1);
  EXPECT_TRUE(scatter(pg, 0, sp.plan.steps()[0], load_partition(sp.plan, pg, 0, store)).empty());
  EXPECT_EQ(execute(sp.plan, pg, store, 1).report.total_bytes_shipped(), 0u);
}

TEST(Runtime, StarCenterShipsOnce) {
  // Vertex 0 feeds every other vertex; part 1 owns [5, 9).
  std::vector<Edge> e;
  for (VertexId v = 1; v < 9; ++v) e.push_back({0, v});
  const Graph g = build_graph(e, 9);
  const FeatureStore store = vertex_store(g, Matrix(9, 2, 1.0f));
  auto sp = identity_sum(2);
  auto pg = partition_contiguous(g, 2);
  ASSERT_EQ(pg.range(1), (VertexRange{5, 9}));
  const auto batches = scatter(pg, 0, sp.plan.steps()[0], load_partition(sp.plan, pg, 0, store));
  std::size_t crossing = 0;
  for (const auto& edge : e) crossing += pg.owner(edge.dst) == 1;
  EXPECT_EQ(crossing, 4u);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].row_ids, std::vector<VertexId>{0});
  EXPECT_EQ(execute(sp.plan, pg, store, 2).report.total_bytes_shipped(), 4u * 2u);
}

TEST(Runtime, TransformStepsAreLocal) {
  std::mt19937 rng(2);
  const Graph g = random_graph(rng, 40, 160);
  const FeatureStore store = vertex_store(g, random_matrix(rng, 40, 4));
  Plan plan;
  const auto h = plan.transform({plan.get_vertex("x")}, identity_module(4));
  auto pg = partition_contiguous(g, 4);
  EXPECT_TRUE(scatter(pg, 0, plan.steps()[0], load_partition(plan, pg, 0, store)).empty());
  const auto res = execute(plan, pg, store, 4);
  EXPECT_EQ(res.report.steps[0].bytes_shipped, 0u);
  EXPECT_EQ(res.report.steps[0].batches, 0u);
  EXPECT_EQ(res.report.steps[0].rows, 40u);
  EXPECT_TRUE(bitwise_equal(res.store.get(Scope::Vertex, plan.info(h[0]).name),
                            store.get(Scope::Vertex, "x")));

  // Data-carrying steps of a mixed plan: only message passing ships.
  const Plan mp = mixed_plan(4, Aggregator::Sum);
  const auto mixed = execute(mp, pg, store, 4);
  for (std::size_t i = 0; i < mp.steps().size(); ++i) {
    if (!std::holds_alternative<MessagePassingStep>(mp.steps()[i])) {
      EXPECT_EQ(mixed.report.steps[i].bytes_shipped, 0u) << mixed.report.steps[i].name;
    }
  }
}

TEST(Runtime, MeanAndEmptyReductions) {
  // Vertex 3 has in-degree 3 with messages 1, 2, 3; vertex 0 has none.
  const std::vector<Edge> e{{0, 3}, {1, 3}, {2, 3}};
  const Graph g = build_graph(e, 4);
  const FeatureStore store = vertex_store(g, Matrix{{1}, {2}, {3}, {9}});
  for (std::size_t parts : {1, 2, 4}) {
    auto pg = partition_contiguous(g, parts);
    auto mean = identity_sum(1, Aggregator::Mean);
    EXPECT_EQ(execute(mean.plan, pg, store, parts).store.get(Scope::Vertex, "h"),
              (Matrix{{0}, {0}, {0}, {2}}));
    auto sum = identity_sum(1, Aggregator::Sum);
    EXPECT_EQ(execute(sum.plan, pg, store, parts).store.get(Scope::Vertex, "h"),
              (Matrix{{0}, {0}, {0}, {6}}));
    auto mx = identity_sum(1, Aggregator::Max);
    EXPECT_EQ(execute(mx.plan, pg, store, parts).store.get(Scope::Vertex, "h"),
              (Matrix{{0}, {0}, {0}, {3}}));
  }
}

TEST(Runtime, SinglePartMatchesSerialInterpreter) {
  std::mt19937 rng(8);
  for (Aggregator agg : {Aggregator::Sum, Aggregator::Mean, Aggregator::Max}) {
    const Graph g = random_graph(rng, 80, 400);
    const FeatureStore store = vertex_store(g, random_matrix(rng, 80, 5));
    const Plan plan = mixed_plan(5, agg);
    auto pg = partition_contiguous(g, 1);
    const auto res = execute(plan, pg, store, 1);
    const FeatureStore ref = run_plan_serial(plan, g, store);
    for (const auto& r : plan.refs()) {
      if (r.is_store()) continue;
      EXPECT_TRUE(bitwise_equal(res.store.get(r.scope, r.name), ref.get(r.scope, r.name)))
          << r.name;
    }
  }
}

TEST(Runtime, OutputsIndependentOfPartCount) {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 1 + rng() % 500;
    const std::size_t m = rng() % 5001;
    const Graph g = random_graph(rng, n, m);
    const FeatureStore store = vertex_store(g, random_matrix(rng, n, 3));
    const Plan plan = mixed_plan(3, static_cast<Aggregator>(trial % 3));
    std::optional<Matrix> first;
    for (std::size_t parts : {1, 2, 3, 8}) {
      auto pg = partition_contiguous(g, parts);
      const Matrix out = execute(plan, pg, store, parts).store.get(Scope::Vertex, "out");
      if (!first) first = out;
      ASSERT_TRUE(bitwise_equal(out, *first)) << "trial " << trial << " parts " << parts;
    }
  }
}

TEST(Runtime, BytesShippedEqualsSendListFormula) {
  std::mt19937 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    const Graph g = random_graph(rng, n, rng() % 2000);
    const std::size_t cols = 1 + rng() % 6;
    const std::size_t parts = 1 + rng() % 6;
    const FeatureStore store = vertex_store(g, random_matrix(rng, n, cols));
    auto sp = identity_sum(cols);
    auto pg = partition_contiguous(g, parts);
    const auto res = execute(sp.plan, pg, store, parts);
    EXPECT_EQ(res.report.steps[0].bytes_shipped, 4 * cols * pg.total_send_rows());

    // Per-edge shipping would be 4 * cols * (#cross-part edges) or more.
    std::size_t crossing = 0;
    for (const auto& e : g.edges()) crossing += pg.owner(e.src) != pg.owner(e.dst);
    EXPECT_LE(pg.total_send_rows(), crossing);
  }
}

TEST(Runtime, RepeatedRunsAreBitwiseIdentical) {
  std::mt19937 rng(4);
  const Graph g = random_graph(rng, 300, 3000);
  const FeatureStore store = vertex_store(g, random_matrix(rng, 300, 4));
  const Plan plan = mixed_plan(4, Aggregator::Sum);
  auto pg = partition_contiguous(g, 3);
  const auto a = execute(plan, pg, store, 3);
  const auto b = execute(plan, pg, store, 3);
  EXPECT_TRUE(bitwise_equal(a.store.get(Scope::Vertex, "out"), b.store.get(Scope::Vertex, "out")));
  ASSERT_EQ(a.report.steps.size(), b.report.steps.size());
  for (std::size_t i = 0; i < a.report.steps.size(); ++i) {
    EXPECT_EQ(a.report.steps[i].bytes_shipped, b.report.steps[i].bytes_shipped);
    EXPECT_EQ(a.report.steps[i].flops, b.report.steps[i].flops);
  }
}

TEST(Runtime, ConcurrentExecutesOnDisjointStores) {
  std::mt19937 rng(6);
  const Graph g = random_graph(rng, 200, 1500);
  const FeatureStore s1 = vertex_store(g, random_matrix(rng, 200, 4));
  const FeatureStore s2 = vertex_store(g, random_matrix(rng, 200, 4));
  const Plan plan = mixed_plan(4, Aggregator::Mean);
  auto pg = partition_contiguous(g, 4);
  const Matrix want1 = execute(plan, pg, s1, 4).store.get(Scope::Vertex, "out");
  const Matrix want2 = execute(plan, pg, s2, 4).store.get(Scope::Vertex, "out");
  Matrix got1, got2;
  {
    std::jthread t1([&] { got1 = execute(plan, pg, s1, 4).store.get(Scope::Vertex, "out"); });
    std::jthread t2([&] { got2 = execute(plan, pg, s2, 4).store.get(Scope::Vertex, "out"); });
  }
  EXPECT_TRUE(bitwise_equal(got1, want1));
  EXPECT_TRUE(bitwise_equal(got2, want2));
}

TEST(Runtime, WorkerFailureNamesTheStep) {
  std::mt19937 rng(7);
  const Graph g = random_graph(rng, 30, 90);
  const FeatureStore store = vertex_store(g, random_matrix(rng, 30, 2));
  const Plan plan = mixed_plan(2, Aggregator::Sum);
  auto pg = partition_contiguous(g, 3);
  ExecuteOptions opts;
  opts.on_step = [](PartId p, std::size_t step) {
    if (p == 1 && step == 2) throw std::runtime_error("injected");
  };
  try {
    execute(plan, pg, store, 3, opts);
    FAIL() << "expected ExecutionError";
  } catch (const ExecutionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 2 (edge_softmax)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("part 1: injected"), std::string::npos) << msg;
  }
  // The engine stays usable after a failed run.
  EXPECT_NO_THROW(execute(plan, pg, store, 3));
}

TEST(Runtime, RejectsMismatchedPartsAndInvalidPlans) {
  const Graph g = path3();
  const FeatureStore store = vertex_store(g, Matrix{{1}, {2}, {3}});
  auto sp = identity_sum(1);
  auto pg = partition_contiguous(g, 2);
  EXPECT_THROW(execute(sp.plan, pg, store, 3), ContractError);
  auto wide = identity_sum(2);
  EXPECT_THROW(execute(wide.plan, pg, store, 2), ValidationError);
}

TEST(Runtime, MorePartsThanVertices) {
  const Graph g = path3();
  const FeatureStore store = vertex_store(g, Matrix{{1}, {2}, {3}});
  auto sp = identity_sum(1);
  auto pg = partition_contiguous(g, 8);
  EXPECT_EQ(execute(sp.plan, pg, store, 8).store.get(Scope::Vertex, "h"),
            (Matrix{{0}, {1}, {2}}));
}

TEST(Runtime, ReportJsonIsFlatPerStep) {
  std::mt19937 rng(9);
  const Graph g = random_graph(rng, 20, 60);
  const FeatureStore store = vertex_store(g, random_matrix(rng, 20, 2));
  const Plan plan = mixed_plan(2, Aggregator::Sum);
  auto pg = partition_contiguous(g, 2);
  const auto res = execute(plan, pg, store, 2);
  const auto j = nlohmann::json::parse(res.report.to_json());
  ASSERT_TRUE(j.is_object());
  EXPECT_EQ(j.size(), plan.steps().size());
  for (const auto& s : res.report.steps) {
    ASSERT_TRUE(j.contains(s.name));
    for (const char* key : {"time_ms", "flops", "bytes_shipped", "rows"}) {
      EXPECT_TRUE(j[s.name].contains(key)) << key;
      EXPECT_GE(j[s.name][key].get<double>(), 0.0);
    }
    EXPECT_EQ(j[s.name]["bytes_shipped"].get<std::size_t>(), s.bytes_shipped);
  }
}

TEST(CountFlops, ClosedForms) {
  const Graph g10 = build_graph({}, 10);
  Plan plan;
  ModuleGraph lin("lin");
  lin.set_param("W", Matrix(4, 8, 1.0f));
  lin.output("h", lin.matmul_param(lin.input("x", 4), "W"));
  plan.transform({plan.get_vertex("x")}, lin);
  EXPECT_EQ(count_flops(plan, g10), 640u);

  auto sp = identity_sum(3);
  EXPECT_EQ(count_flops(sp.plan, g10), 0u);

  // Edge module with arithmetic on an empty graph still costs zero.
  Plan mp;
  ModuleGraph sq("sq");
  const NodeId x = sq.input("x", 2);
  sq.output("y", sq.mul(x, x));
  mp.message_passing({mp.get_vertex("x")}, {}, {}, sq, Aggregator::Sum);
  EXPECT_EQ(count_flops(mp, g10), 0u);

  // Path 0->1->2: 2 edges, module 2 flops per row, plus 2 * 2 aggregation.
  EXPECT_EQ(count_flops(mp, path3()), 2u * 2u + 2u * 2u);
}

TEST(CountFlops, ReportMatchesClosedForm) {
  std::mt19937 rng(10);
  const Graph g = random_graph(rng, 60, 300);
  const FeatureStore store = vertex_store(g, random_matrix(rng, 60, 3));
  const Plan plan = mixed_plan(3, Aggregator::Sum);
  auto pg = partition_contiguous(g, 2);
  EXPECT_EQ(execute(plan, pg, store, 2).report.total_flops(), count_flops(plan, g));
}

TEST(Channel, FifoAndClose) {
  Channel<int> ch;
  ch.send(1);
  ch.send(2);
  ch.close();
  EXPECT_THROW(ch.send(3), ExecutionError);
  EXPECT_EQ(ch.recv(), 1);
  EXPECT_EQ(ch.recv(), 2);
  EXPECT_EQ(ch.recv(), std::nullopt);
}

TEST(Channel, CrossThreadDelivery) {
  Channel<int> ch;
  std::atomic<long> sum{0};
  std::jthread consumer([&] {
    while (auto v = ch.recv()) sum += *v;
  });
  {
    std::vector<std::jthread> producers;
    for (int t = 0; t < 4; ++t) {
      producers.emplace_back([&ch, t] {
        for (int i = 0; i < 1000; ++i) ch.send(t * 1000 + i);
      });
    }
  }
  ch.close();
  consumer.join();
  EXPECT_EQ(sum.load(), 4000L * 3999L / 2L);
}

TEST(Runtime, ThreadCapDoesNotChangeResults) {
  std::mt19937 rng(12);
  const Graph g = random_graph(rng, 120, 900);
  const FeatureStore store = vertex_store(g, random_matrix(rng, 120, 3));
  const Plan plan = mixed_plan(3, Aggregator::Mean);
  auto pg = partition_contiguous(g, 5);
  const auto base = execute(plan, pg, store, 5);
  for (std::size_t cap : {1, 2, 3, 16}) {
    ExecuteOptions opts;
    opts.max_threads = cap;
    const auto res = execute(plan, pg, store, 5, opts);
    EXPECT_TRUE(bitwise_equal(res.store.get(Scope::Vertex, "out"), base.store.get(Scope::Vertex, "out")))
        << cap;
    EXPECT_EQ(res.report.total_bytes_shipped(), base.report.total_bytes_shipped());
  }
}
