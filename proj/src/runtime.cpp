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
#include "gasline/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <exception>
#include <map>
#include <memory>
#include <thread>
#include <variant>

#include <nlohmann/json.hpp>

#include "gasline/channel.hpp"
#include "gasline/error.hpp"
#include "gasline/interpreter.hpp"
#include "gasline/kernels.hpp"

namespace gasline {

const Matrix& PartitionState::at(RefId ref) const {
  if (ref >= values.size() || !values[ref]) {
    throw ExecutionError("feature ref " + std::to_string(ref) + " has no local value");
  }
  return *values[ref];
}

std::size_t ExecutionReport::total_flops() const {
  std::size_t t = 0;
  for (const auto& s : steps) t += s.flops;
  return t;
}

std::size_t ExecutionReport::total_bytes_shipped() const {
  std::size_t t = 0;
  for (const auto& s : steps) t += s.bytes_shipped;
  return t;
}

double ExecutionReport::total_time_ms() const {
  double t = 0;
  for (const auto& s : steps) t += s.time_ms;
  return t;
}

std::string ExecutionReport::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& s : steps) {
    j[s.name] = {{"time_ms", s.time_ms},
                 {"flops", s.flops},
                 {"bytes_shipped", s.bytes_shipped},
                 {"batches", s.batches},
                 {"rows", s.rows},
                 {"gathered_rows", s.gathered_rows}};
  }
  return j.dump(2);
}

namespace {

Matrix slice_local(const PartitionedGraph& pg, PartId p, Scope scope, const Matrix& global) {
  if (scope == Scope::Vertex) {
    const auto& r = pg.range(p);
    return Matrix::from_view(global.view().slice_rows(r.lo, r.hi));
  }
  return gather_rows(global, pg.local_csc(p).edge_ids);
}

// Local destination index of every local edge.
std::vector<std::uint32_t> local_segments(const LocalCsc& csc) {
  std::vector<std::uint32_t> seg(csc.num_edges());
  for (std::size_t v = 0; v + 1 < csc.offsets.size(); ++v) {
    for (std::size_t k = csc.offsets[v]; k < csc.offsets[v + 1]; ++k) {
      seg[k] = static_cast<std::uint32_t>(v);
    }
  }
  return seg;
}

ReduceOp to_reduce(Aggregator a) {
  switch (a) {
    case Aggregator::Sum: return ReduceOp::Sum;
    case Aggregator::Mean: return ReduceOp::Mean;
    default: return ReduceOp::Max;
  }
}

std::string step_name(std::size_t i, const Step& step) {
  std::string name = std::to_string(i) + "." + step_kind(step);
  if (const auto* t = std::get_if<TransformStep>(&step)) name += "." + t->module->name();
  if (const auto* m = std::get_if<MessagePassingStep>(&step)) name += "." + m->edge_module->name();
  return name;
}

std::vector<RefId> distinct_sources(const MessagePassingStep& mp) {
  std::vector<RefId> ids;
  for (const auto& r : mp.src_inputs) {
    if (std::find(ids.begin(), ids.end(), r.id) == ids.end()) ids.push_back(r.id);
  }
  return ids;
}

}  // namespace

PartitionState load_partition(const Plan& plan, const PartitionedGraph& pg, PartId p,
                              const FeatureStore& store) {
  PartitionState st;
  st.values.resize(plan.refs().size());
  for (std::size_t i = 0; i < plan.refs().size(); ++i) {
    const RefInfo& r = plan.refs()[i];
    if (!r.is_store()) continue;
    st.values[i] = slice_local(pg, p, r.scope, store.get(r.scope, r.name));
  }
  return st;
}

std::vector<MessageBatch> scatter(const PartitionedGraph& pg, PartId p, const Step& step,
                                  const PartitionState& state) {
  std::vector<MessageBatch> out;
  const auto* mp = std::get_if<MessagePassingStep>(&step);
  if (!mp) return out;
  const auto& range = pg.range(p);
  const auto refs = distinct_sources(*mp);
  for (PartId q = 0; q < pg.num_parts(); ++q) {
    if (q == p) continue;
    const auto rows = pg.send_list(p, q);
    if (rows.empty()) continue;
    for (RefId ref : refs) {
      const Matrix& local = state.at(ref);
      MessageBatch b{p, q, ref, std::vector<VertexId>(rows.begin(), rows.end()),
                     Matrix(rows.size(), local.cols())};
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = local.row(rows[i] - range.lo);
        std::copy(src.begin(), src.end(), b.payload.row(i).begin());
      }
      out.push_back(std::move(b));
    }
  }
  return out;
}

Matrix apply_gather(const PartitionedGraph& pg, PartId q, const MessagePassingStep& step,
                    const FusedProgram& program, const PartitionState& state,
                    std::span<const MessageBatch> received, ProgramWorkspace& ws) {
  const LocalCsc& csc = pg.local_csc(q);
  const VertexRange& range = pg.range(q);
  const std::size_t edges = csc.num_edges();
  const auto seg = local_segments(csc);

  std::vector<Matrix> gathered;
  std::vector<MatrixView> views;
  gathered.reserve(step.src_inputs.size() + step.dst_inputs.size());
  for (const auto& ref : step.src_inputs) {
    const Matrix& local = state.at(ref.id);
    std::vector<const MessageBatch*> from(pg.num_parts(), nullptr);
    for (const auto& b : received) {
      if (b.ref == ref.id && b.to_part == q) from.at(b.from_part) = &b;
    }
    Matrix g(edges, local.cols());
    for (std::size_t k = 0; k < edges; ++k) {
      const VertexId u = csc.sources[k];
      std::span<const float> src;
      if (range.contains(u)) {
        src = local.row(u - range.lo);
      } else {
        const MessageBatch* b = from[pg.owner(u)];
        if (!b) {
          throw ExecutionError("part " + std::to_string(q) + " received no boundary rows from part " +
                               std::to_string(pg.owner(u)));
        }
        auto it = std::lower_bound(b->row_ids.begin(), b->row_ids.end(), u);
        if (it == b->row_ids.end() || *it != u) {
          throw ExecutionError("boundary row " + std::to_string(u) + " missing from batch");
        }
        src = b->payload.row(static_cast<std::size_t>(it - b->row_ids.begin()));
      }
      std::copy(src.begin(), src.end(), g.row(k).begin());
    }
    gathered.push_back(std::move(g));
  }
  for (const auto& ref : step.dst_inputs) gathered.push_back(gather_rows(state.at(ref.id), seg));
  for (const auto& g : gathered) views.push_back(g.view());
  for (const auto& ref : step.edge_inputs) views.push_back(state.at(ref.id).view());

  Matrix messages = std::move(program.run(views, ws).front());
  if (step.aggregator == Aggregator::None) return messages;
  return segment_reduce(messages, seg, range.size(), to_reduce(step.aggregator));
}

std::vector<std::size_t> step_flops(const Plan& plan, const Graph& graph) {
  const std::size_t n = graph.num_vertices();
  const std::size_t m = graph.num_edges();
  std::vector<std::size_t> out;
  for (const auto& step : plan.steps()) {
    if (const auto* t = std::get_if<TransformStep>(&step)) {
      out.push_back(flops_per_row(*t->module) * (t->scope == Scope::Vertex ? n : m));
    } else if (const auto* mp = std::get_if<MessagePassingStep>(&step)) {
      std::size_t f = flops_per_row(*mp->edge_module) * m;
      if (mp->aggregator != Aggregator::None) {
        f += m * plan.info(mp->output).cols.value_or(0);
      }
      out.push_back(f);
    } else {
      const auto& s = std::get<EdgeSoftmaxStep>(step);
      out.push_back(5 * m * plan.info(s.output).cols.value_or(0));
    }
  }
  return out;
}

std::size_t count_flops(const Plan& plan, const Graph& graph) {
  std::size_t total = 0;
  for (std::size_t f : step_flops(plan, graph)) total += f;
  return total;
}

namespace {

enum class Phase : std::uint8_t { Scatter, Apply };

struct PhaseCmd {
  std::size_t step;
  Phase phase;
  PartId part;
};
struct StopCmd {};
using WorkerMsg = std::variant<PhaseCmd, MessageBatch, StopCmd>;

struct DoneMsg {
  PartId part = 0;
  std::size_t bytes = 0;
  std::size_t batches = 0;
  std::size_t gathered = 0;
  std::string error;
};

struct Shared {
  const Plan& plan;
  const PartitionedGraph& pg;
  const std::vector<std::unique_ptr<FusedProgram>>& programs;  // by step; null for softmax
  const ExecuteOptions& options;
  std::vector<Channel<WorkerMsg>>& inboxes;  // by thread
  Channel<DoneMsg>& coordinator;

  std::size_t thread_of(PartId p) const { return p % inboxes.size(); }
};

// Serves the partitions p with p mod threads == t. Each partition's rows are
// touched only by its thread.
class Worker {
 public:
  Worker(std::size_t t, const Shared& sh, std::vector<PartitionState>& states)
      : t_(t), sh_(sh), states_(states), received_(states.size()) {}

  void loop() {
    while (auto msg = sh_.inboxes[t_].recv()) {
      if (std::holds_alternative<StopCmd>(*msg)) return;
      if (auto* b = std::get_if<MessageBatch>(&*msg)) {
        received_[b->to_part].push_back(std::move(*b));
        continue;
      }
      const auto cmd = std::get<PhaseCmd>(*msg);
      DoneMsg done{cmd.part, 0, 0, 0, {}};
      try {
        if (sh_.options.on_step) sh_.options.on_step(cmd.part, cmd.step);
        if (cmd.phase == Phase::Scatter) {
          run_scatter(cmd.part, cmd.step, done);
        } else {
          run_apply(cmd.part, cmd.step, done);
        }
      } catch (const std::exception& e) {
        done.error = e.what();
      } catch (...) {
        done.error = "unknown failure";
      }
      sh_.coordinator.send(std::move(done));
    }
  }

 private:
  void run_scatter(PartId p, std::size_t i, DoneMsg& done) {
    for (auto& b : scatter(sh_.pg, p, sh_.plan.steps()[i], states_[p])) {
      done.bytes += 4 * b.payload.rows() * b.payload.cols();
      ++done.batches;
      const std::size_t to = sh_.thread_of(b.to_part);
      sh_.inboxes[to].send(std::move(b));
    }
  }

  void run_apply(PartId p, std::size_t i, DoneMsg& done) {
    PartitionState& state = states_[p];
    const Step& step = sh_.plan.steps()[i];
    if (const auto* t = std::get_if<TransformStep>(&step)) {
      std::vector<MatrixView> in;
      for (const auto& r : t->inputs) in.push_back(state.at(r.id).view());
      auto outs = sh_.programs[i]->run(in, ws_);
      for (std::size_t k = 0; k < outs.size(); ++k) {
        state.values[t->outputs[k].id] = std::move(outs[k]);
      }
    } else if (const auto* mp = std::get_if<MessagePassingStep>(&step)) {
      done.gathered = sh_.pg.local_csc(p).num_edges();
      state.values[mp->output.id] =
          apply_gather(sh_.pg, p, *mp, *sh_.programs[i], state, received_[p], ws_);
    } else {
      const auto& s = std::get<EdgeSoftmaxStep>(step);
      const auto seg = local_segments(sh_.pg.local_csc(p));
      state.values[s.output.id] =
          segment_softmax(state.at(s.input.id), seg, sh_.pg.range(p).size());
    }
    // Ghost rows live for one step only.
    received_[p].clear();
  }

  std::size_t t_;
  const Shared& sh_;
  std::vector<PartitionState>& states_;
  std::vector<std::vector<MessageBatch>> received_;  // by partition
  ProgramWorkspace ws_;
};

}  // namespace

ExecutionResult execute(const Plan& plan, const PartitionedGraph& pg, const FeatureStore& store,
                        std::size_t parts, const ExecuteOptions& options) {
  if (parts != pg.num_parts()) {
    throw ContractError("execute asked for " + std::to_string(parts) +
                        " parts but the graph is split into " + std::to_string(pg.num_parts()));
  }
  const Graph& graph = pg.graph();
  if (auto v = validate(plan, graph, store); !v.ok()) throw ValidationError(std::move(v.errors));

  std::vector<std::unique_ptr<FusedProgram>> programs(plan.steps().size());
  for (std::size_t i = 0; i < plan.steps().size(); ++i) {
    const Step& s = plan.steps()[i];
    if (const auto* t = std::get_if<TransformStep>(&s)) {
      programs[i] = std::make_unique<FusedProgram>(compile_module(*t->module));
    } else if (const auto* mp = std::get_if<MessagePassingStep>(&s)) {
      programs[i] = std::make_unique<FusedProgram>(compile_module(*mp->edge_module));
    }
  }

  std::vector<PartitionState> states;
  states.reserve(parts);
  for (PartId p = 0; p < parts; ++p) states.push_back(load_partition(plan, pg, p, store));

  std::size_t num_threads = std::max<std::size_t>(parts, 1);
  if (options.max_threads != 0) num_threads = std::min(num_threads, options.max_threads);
  std::vector<Channel<WorkerMsg>> inboxes(num_threads);
  Channel<DoneMsg> coordinator;
  Shared shared{plan, pg, programs, options, inboxes, coordinator};
  std::vector<std::unique_ptr<Worker>> workers;
  std::vector<std::jthread> threads;
  for (std::size_t t = 0; t < num_threads; ++t) {
    workers.push_back(std::make_unique<Worker>(t, shared, states));
  }
  for (std::size_t t = 0; t < num_threads; ++t) {
    threads.emplace_back([w = workers[t].get()] { w->loop(); });
  }
  auto stop_all = [&] {
    for (auto& in : inboxes) {
      if (!in.closed()) {
        in.send(StopCmd{});
        in.close();
      }
    }
    threads.clear();
  };

  const auto step_cost = step_flops(plan, graph);
  ExecutionReport report;
  // Runs one phase on every worker and waits for all P completions.
  auto superstep = [&](std::size_t i, Phase phase, StepStats& stats) {
    for (PartId p = 0; p < parts; ++p) {
      inboxes[shared.thread_of(p)].send(PhaseCmd{i, phase, p});
    }
    std::vector<std::string> errors;
    for (std::size_t k = 0; k < parts; ++k) {
      auto done = coordinator.recv();
      if (!done) {
        errors.push_back("coordinator channel disconnected");
        break;
      }
      stats.bytes_shipped += done->bytes;
      stats.batches += done->batches;
      stats.gathered_rows += done->gathered;
      if (!done->error.empty()) {
        errors.push_back("part " + std::to_string(done->part) + ": " + done->error);
      }
    }
    if (!errors.empty()) {
      stop_all();
      std::sort(errors.begin(), errors.end());
      std::string msg = "step " + std::to_string(i) + " (" + step_kind(plan.steps()[i]) +
                        ") failed: " + errors.front();
      for (std::size_t k = 1; k < errors.size(); ++k) msg += "; " + errors[k];
      throw ExecutionError(msg);
    }
  };

  for (std::size_t i = 0; i < plan.steps().size(); ++i) {
    const Step& s = plan.steps()[i];
    StepStats stats;
    stats.name = step_name(i, s);
    stats.flops = step_cost[i];
    const auto t0 = std::chrono::steady_clock::now();
    if (std::holds_alternative<MessagePassingStep>(s)) superstep(i, Phase::Scatter, stats);
    superstep(i, Phase::Apply, stats);
    stats.time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (const auto* t = std::get_if<TransformStep>(&s)) {
      stats.rows = t->scope == Scope::Vertex ? graph.num_vertices() : graph.num_edges();
    } else if (const auto* mp = std::get_if<MessagePassingStep>(&s)) {
      stats.rows = mp->aggregator == Aggregator::None ? graph.num_edges() : graph.num_vertices();
    } else {
      stats.rows = graph.num_edges();
    }
    report.steps.push_back(std::move(stats));
  }
  stop_all();

  FeatureStore result = store;
  const auto cols = resolve_cols(plan, store);
  for (std::size_t i = 0; i < plan.refs().size(); ++i) {
    const RefInfo& r = plan.refs()[i];
    if (r.is_store()) continue;
    const std::size_t rows = r.scope == Scope::Vertex ? graph.num_vertices() : graph.num_edges();
    Matrix global(rows, cols[i]);
    for (PartId p = 0; p < parts; ++p) {
      const Matrix& local = states[p].at(static_cast<RefId>(i));
      if (r.scope == Scope::Vertex) {
        const auto lo = pg.range(p).lo;
        for (std::size_t k = 0; k < local.rows(); ++k) {
          std::copy(local.row(k).begin(), local.row(k).end(), global.row(lo + k).begin());
        }
      } else {
        const auto& ids = pg.local_csc(p).edge_ids;
        for (std::size_t k = 0; k < local.rows(); ++k) {
          std::copy(local.row(k).begin(), local.row(k).end(), global.row(ids[k]).begin());
        }
      }
    }
    result.attach(r.scope, r.name, std::move(global));
  }
  return {std::move(result), std::move(report)};
}

FeatureStore run_plan_serial(const Plan& plan, const Graph& graph, const FeatureStore& store) {
  if (auto v = validate(plan, graph, store); !v.ok()) throw ValidationError(std::move(v.errors));
  const std::size_t n = graph.num_vertices();
  // Edge values are kept in CSC order while running.
  const auto in_ids = graph.in_edge_ids();
  const auto sources = graph.in_sources();
  std::vector<std::uint32_t> dst(graph.num_edges());
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t k = graph.in_offsets()[v]; k < graph.in_offsets()[v + 1]; ++k) {
      dst[k] = static_cast<std::uint32_t>(v);
    }
  }
  std::vector<std::optional<Matrix>> val(plan.refs().size());
  for (std::size_t i = 0; i < plan.refs().size(); ++i) {
    const RefInfo& r = plan.refs()[i];
    if (!r.is_store()) continue;
    const Matrix& g = store.get(r.scope, r.name);
    val[i] = r.scope == Scope::Vertex ? g : gather_rows(g, in_ids);
  }
  for (const auto& step : plan.steps()) {
    if (const auto* t = std::get_if<TransformStep>(&step)) {
      std::vector<MatrixView> in;
      for (const auto& r : t->inputs) in.push_back(val[r.id]->view());
      auto outs = interpret_module(*t->module, in);
      for (std::size_t k = 0; k < outs.size(); ++k) val[t->outputs[k].id] = std::move(outs[k]);
    } else if (const auto* mp = std::get_if<MessagePassingStep>(&step)) {
      std::vector<Matrix> g;
      for (const auto& r : mp->src_inputs) g.push_back(gather_rows(*val[r.id], sources));
      for (const auto& r : mp->dst_inputs) g.push_back(gather_rows(*val[r.id], dst));
      std::vector<MatrixView> in(g.begin(), g.end());
      for (const auto& r : mp->edge_inputs) in.push_back(val[r.id]->view());
      Matrix msg = std::move(interpret_module(*mp->edge_module, in).front());
      val[mp->output.id] = mp->aggregator == Aggregator::None
                               ? std::move(msg)
                               : segment_reduce(msg, dst, n, to_reduce(mp->aggregator));
    } else {
      const auto& s = std::get<EdgeSoftmaxStep>(step);
      val[s.output.id] = segment_softmax(*val[s.input.id], dst, n);
    }
  }
  FeatureStore result = store;
  for (std::size_t i = 0; i < plan.refs().size(); ++i) {
    const RefInfo& r = plan.refs()[i];
    if (r.is_store()) continue;
    Matrix out = std::move(*val[i]);
    if (r.scope == Scope::Edge) {
      Matrix by_id(out.rows(), out.cols());
      for (std::size_t k = 0; k < out.rows(); ++k) {
        std::copy(out.row(k).begin(), out.row(k).end(), by_id.row(in_ids[k]).begin());
      }
      out = std::move(by_id);
    }
    result.attach(r.scope, r.name, std::move(out));
  }
  return result;
}

}  // namespace gasline
