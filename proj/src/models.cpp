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
#include "gasline/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gasline/error.hpp"
#include "gasline/partition.hpp"

namespace gasline {

namespace {

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw ContractError(std::string(what) + " must be at least 1");
}

void check_config(const GatConfig& c) {
  require_positive(c.f_in, "f_in");
  require_positive(c.f_out, "f_out");
  require_positive(c.heads, "heads");
  require_positive(c.layers, "layers");
}

void check_config(const GcnConfig& c) {
  require_positive(c.f_in, "f_in");
  require_positive(c.f_out, "f_out");
  require_positive(c.layers, "layers");
}

void check_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(what + " is " + shape_string(m) + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

std::string layer_name(std::size_t l, std::size_t layers, const std::string& what) {
  if (l + 1 == layers && what == "h") return kOutputFeature;
  return "l" + std::to_string(l) + "." + what;
}

}  // namespace

std::size_t num_layers(const Model& model) {
  return std::visit([](const auto& m) { return m.config.layers; }, model);
}

std::size_t output_cols(const Model& model) {
  if (const auto* g = std::get_if<GatModel>(&model)) return g->config.heads * g->config.f_out;
  return std::get<GcnModel>(model).config.f_out;
}

std::size_t layer_input_cols(const Model& model, std::size_t layer) {
  if (layer == 0) return std::visit([](const auto& m) { return m.config.f_in; }, model);
  return output_cols(model);
}

Matrix xavier_uniform(Lcg64& rng, std::size_t rows, std::size_t cols, std::size_t fan_in,
                      std::size_t fan_out) {
  const float bound = static_cast<float>(std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = (2.0f * rng.uniform() - 1.0f) * bound;
  return m;
}

GatModel init_gat(const GatConfig& config, std::uint64_t seed) {
  check_config(config);
  Lcg64 rng(seed);
  GatModel model{config, {}};
  const std::size_t width = config.heads * config.f_out;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::size_t in = l == 0 ? config.f_in : width;
    GatLayer layer;
    layer.W = xavier_uniform(rng, in, width, in, width);
    layer.att_src = xavier_uniform(rng, 1, width, config.f_out, 1);
    layer.att_dst = xavier_uniform(rng, 1, width, config.f_out, 1);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

GcnModel init_gcn(const GcnConfig& config, std::uint64_t seed) {
  check_config(config);
  Lcg64 rng(seed);
  GcnModel model{config, {}};
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::size_t in = l == 0 ? config.f_in : config.f_out;
    model.layers.push_back({xavier_uniform(rng, in, config.f_out, in, config.f_out)});
  }
  return model;
}

ModelSpec parse_model_spec(std::string_view text) {
  std::istringstream in{std::string(text)};
  ModelSpec spec;
  if (!(in >> spec.name)) throw ParseError("model spec is empty");
  if (spec.name != "gat" && spec.name != "gcn") {
    throw ParseError("unknown model '" + spec.name + "' (expected gat or gcn)");
  }
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    auto as_uint = [&]() -> std::uint64_t {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) {
        throw ParseError("bad value for " + key + ": '" + value + "'");
      }
      return v;
    };
    if (key == "f_in") spec.f_in = as_uint();
    else if (key == "f_out") spec.f_out = as_uint();
    else if (key == "heads") spec.heads = as_uint();
    else if (key == "layers") spec.layers = as_uint();
    else if (key == "seed") spec.seed = as_uint();
    else if (key == "self_loops") {
      if (value == "true" || value == "false") spec.add_self_loops = value == "true";
      else spec.add_self_loops = as_uint() != 0;
    }
    else if (key == "slope") {
      float v = 0;
      const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) {
        throw ParseError("bad value for slope: '" + value + "'");
      }
      spec.leaky_slope = v;
    } else {
      throw ParseError("unknown model key '" + key + "'");
    }
  }
  return spec;
}

Model make_model(const ModelSpec& spec) {
  if (spec.name == "gat") {
    return init_gat({spec.f_in, spec.f_out, spec.heads, spec.leaky_slope, spec.add_self_loops,
                     spec.layers},
                    spec.seed);
  }
  if (spec.name == "gcn") return init_gcn({spec.f_in, spec.f_out, spec.layers}, spec.seed);
  throw ContractError("unknown model '" + spec.name + "'");
}

Plan build_gat_plan(const GatModel& model) {
  const GatConfig& c = model.config;
  check_config(c);
  if (model.layers.size() != c.layers) {
    throw ShapeError("GAT model has " + std::to_string(model.layers.size()) +
                     " parameter sets for " + std::to_string(c.layers) + " layers");
  }
  const std::size_t width = c.heads * c.f_out;
  Plan plan;
  plan.set_requires_self_loops(c.add_self_loops);
  FeatureRef h = plan.get_vertex(kInputFeature, c.f_in);
  for (std::size_t l = 0; l < c.layers; ++l) {
    const GatLayer& p = model.layers[l];
    const std::size_t in_cols = l == 0 ? c.f_in : width;
    const std::string tag = "layer " + std::to_string(l);
    check_shape(p.W, in_cols, width, tag + " W");
    check_shape(p.att_src, 1, width, tag + " att_src");
    check_shape(p.att_dst, 1, width, tag + " att_dst");

    ModuleGraph vertex("gat_vertex");
    NodeId x = vertex.input("x", in_cols);
    if (l > 0) x = vertex.leaky_relu(x, 0.0f);
    vertex.set_param("W", p.W);
    vertex.set_param("att_src", p.att_src);
    vertex.set_param("att_dst", p.att_dst);
    const NodeId xp = vertex.matmul_param(x, "W");
    const NodeId a_src = vertex.reduce_sum(vertex.mul(xp, vertex.param_row("att_src")), c.heads);
    const NodeId a_dst = vertex.reduce_sum(vertex.mul(xp, vertex.param_row("att_dst")), c.heads);
    vertex.output("alpha_src", a_src);
    vertex.output("alpha_dst", a_dst);
    vertex.output("x_prime", xp);
    const auto v = plan.transform({h}, std::move(vertex));
    plan.set_name(v[0], layer_name(l, c.layers, "alpha_src"));
    plan.set_name(v[1], layer_name(l, c.layers, "alpha_dst"));
    plan.set_name(v[2], layer_name(l, c.layers, "x_prime"));

    ModuleGraph mp("gat_logits");
    const NodeId s = mp.input("src", c.heads);
    const NodeId d = mp.input("dst", c.heads);
    mp.output("alpha", mp.leaky_relu(mp.add(d, s), c.leaky_slope));
    const FeatureRef logits = plan.message_passing({v[0]}, {v[1]}, {}, std::move(mp), Aggregator::None);
    plan.set_name(logits, layer_name(l, c.layers, "logits"));

    const FeatureRef att = plan.edge_softmax(logits);
    plan.set_name(att, layer_name(l, c.layers, "attention"));

    ModuleGraph agg("gat_aggregate");
    const NodeId xs = agg.input("x", width);
    const NodeId w = agg.input("attention", c.heads);
    agg.output("message", agg.scale_rows(xs, w));
    h = plan.message_passing({v[2]}, {}, {att}, std::move(agg), Aggregator::Sum);
    plan.set_name(h, layer_name(l, c.layers, "h"));
  }
  return plan;
}

Plan build_gcn_plan(const GcnModel& model) {
  const GcnConfig& c = model.config;
  check_config(c);
  if (model.layers.size() != c.layers) {
    throw ShapeError("GCN model has " + std::to_string(model.layers.size()) +
                     " parameter sets for " + std::to_string(c.layers) + " layers");
  }
  Plan plan;
  FeatureRef h = plan.get_vertex(kInputFeature, c.f_in);
  const FeatureRef norm = plan.get_vertex(kGcnNormFeature, 1);
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::size_t in_cols = l == 0 ? c.f_in : c.f_out;
    check_shape(model.layers[l].W, in_cols, c.f_out, "layer " + std::to_string(l) + " W");

    ModuleGraph project("gcn_project");
    NodeId x = project.input("x", in_cols);
    const NodeId cn = project.input("norm", 1);
    if (l > 0) x = project.leaky_relu(x, 0.0f);
    project.set_param("W", model.layers[l].W);
    project.output("scaled", project.scale_rows(project.matmul_param(x, "W"), cn));
    const FeatureRef xs = plan.transform({h, norm}, std::move(project)).front();
    plan.set_name(xs, layer_name(l, c.layers, "scaled"));

    ModuleGraph pass("gcn_pass");
    pass.output("message", pass.identity(pass.input("x", c.f_out)));
    const FeatureRef sum = plan.message_passing({xs}, {}, {}, std::move(pass), Aggregator::Sum);
    plan.set_name(sum, layer_name(l, c.layers, "neighbors"));

    ModuleGraph combine("gcn_combine");
    const NodeId a = combine.input("neighbors", c.f_out);
    const NodeId self = combine.input("self", c.f_out);
    const NodeId cv = combine.input("norm", 1);
    combine.output("h", combine.add(combine.scale_rows(a, cv), combine.scale_rows(self, cv)));
    h = plan.transform({sum, xs, norm}, std::move(combine)).front();
    plan.set_name(h, layer_name(l, c.layers, "h"));
  }
  return plan;
}

Plan build_plan(const Model& model) {
  if (const auto* g = std::get_if<GatModel>(&model)) return build_gat_plan(*g);
  return build_gcn_plan(std::get<GcnModel>(model));
}

Graph prepare_graph(const Model& model, const Graph& graph) {
  if (const auto* g = std::get_if<GatModel>(&model); g && g->config.add_self_loops) {
    return add_self_loops(graph);
  }
  return graph;
}

FeatureStore prepare_store(const Model& model, const Graph& prepared, Matrix x,
                           std::optional<std::span<const std::size_t>> in_degrees) {
  FeatureStore store(prepared.num_vertices(), prepared.num_edges());
  store.attach(Scope::Vertex, kInputFeature, std::move(x));
  if (std::holds_alternative<GcnModel>(model)) {
    const std::size_t n = prepared.num_vertices();
    if (in_degrees && in_degrees->size() != n) {
      throw ShapeError("expected " + std::to_string(n) + " in-degrees, got " +
                       std::to_string(in_degrees->size()));
    }
    Matrix c(n, 1);
    for (VertexId v = 0; v < n; ++v) {
      const std::size_t deg = in_degrees ? (*in_degrees)[v] : prepared.in_degree(v);
      c(v, 0) = static_cast<float>(1.0 / std::sqrt(static_cast<double>(deg) + 1.0));
    }
    store.attach(Scope::Vertex, kGcnNormFeature, std::move(c));
  }
  return store;
}

ModelRun run_model(const Model& model, const Graph& graph, const Matrix& x, std::size_t parts,
                   const ExecuteOptions& options) {
  const Plan plan = build_plan(model);
  auto prepared = std::make_shared<const Graph>(prepare_graph(model, graph));
  const FeatureStore store = prepare_store(model, *prepared, x);
  const PartitionedGraph pg = partition_contiguous(prepared, parts);
  ExecutionResult res = execute(plan, pg, store, parts, options);
  ModelRun run;
  run.output = res.store.get(Scope::Vertex, kOutputFeature);
  run.plan_flops = count_flops(plan, *prepared);
  run.report = std::move(res.report);
  return run;
}

namespace {

using Dense = std::vector<std::vector<double>>;

Dense to_dense(MatrixView x) {
  Dense d(x.rows(), std::vector<double>(x.cols()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) d[i][j] = x(i, j);
  }
  return d;
}

Matrix to_matrix(const Dense& d, std::size_t cols) {
  Matrix m(d.size(), cols);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = static_cast<float>(d[i][j]);
  }
  return m;
}

Dense times(const Dense& x, const Matrix& w) {
  Dense out(x.size(), std::vector<double>(w.cols(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = 0;
      for (std::size_t t = 0; t < w.rows(); ++t) s += x[i][t] * w(t, j);
      out[i][j] = s;
    }
  }
  return out;
}

void relu(Dense& x) {
  for (auto& row : x) {
    for (auto& v : row) v = v > 0 ? v : 0.0;
  }
}

void check_input(const Graph& g, MatrixView x, std::size_t f_in) {
  if (x.rows() != g.num_vertices() || x.cols() != f_in) {
    throw ShapeError("input is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     ", expected " + std::to_string(g.num_vertices()) + "x" + std::to_string(f_in));
  }
}

}  // namespace

Matrix reference_gat(const Graph& graph, const GatModel& model, MatrixView x) {
  const GatConfig& c = model.config;
  check_input(graph, x, c.f_in);
  const std::size_t n = graph.num_vertices();
  const std::size_t H = c.heads;
  const std::size_t F = c.f_out;
  // Incoming sources per vertex in edge-list order, then the implicit self-loop.
  std::vector<std::vector<VertexId>> in(n);
  std::vector<bool> has_loop(n, false);
  for (const Edge& e : graph.edges()) {
    in[e.dst].push_back(e.src);
    if (e.src == e.dst) has_loop[e.dst] = true;
  }
  if (c.add_self_loops) {
    for (VertexId v = 0; v < n; ++v) {
      if (!has_loop[v]) in[v].push_back(v);
    }
  }
  Dense h = to_dense(x);
  for (std::size_t l = 0; l < c.layers; ++l) {
    const GatLayer& p = model.layers.at(l);
    if (l > 0) relu(h);
    const Dense xp = times(h, p.W);
    Dense a_src(n, std::vector<double>(H, 0.0));
    Dense a_dst(n, std::vector<double>(H, 0.0));
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t hd = 0; hd < H; ++hd) {
        for (std::size_t f = 0; f < F; ++f) {
          a_src[v][hd] += xp[v][hd * F + f] * p.att_src(0, hd * F + f);
          a_dst[v][hd] += xp[v][hd * F + f] * p.att_dst(0, hd * F + f);
        }
      }
    }
    Dense next(n, std::vector<double>(H * F, 0.0));
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t hd = 0; hd < H; ++hd) {
        std::vector<double> logit;
        for (VertexId u : in[v]) {
          const double z = a_dst[v][hd] + a_src[u][hd];
          logit.push_back(z > 0 ? z : c.leaky_slope * z);
        }
        if (logit.empty()) continue;
        const double mx = *std::max_element(logit.begin(), logit.end());
        double denom = 0;
        for (double& z : logit) denom += (z = std::exp(z - mx));
        for (std::size_t k = 0; k < in[v].size(); ++k) {
          const double w = logit[k] / denom;
          for (std::size_t f = 0; f < F; ++f) next[v][hd * F + f] += w * xp[in[v][k]][hd * F + f];
        }
      }
    }
    h = std::move(next);
  }
  return to_matrix(h, H * F);
}

Matrix reference_gcn(const Graph& graph, const GcnModel& model, MatrixView x,
                     std::optional<std::span<const std::size_t>> in_degrees) {
  const GcnConfig& c = model.config;
  check_input(graph, x, c.f_in);
  const std::size_t n = graph.num_vertices();
  std::vector<double> deg(n, 0.0);
  if (in_degrees) {
    if (in_degrees->size() != n) throw ShapeError("in-degree count does not match the graph");
    for (std::size_t v = 0; v < n; ++v) deg[v] = static_cast<double>((*in_degrees)[v]);
  } else {
    for (const Edge& e : graph.edges()) deg[e.dst] += 1.0;
  }
  std::vector<double> norm(n);
  for (std::size_t v = 0; v < n; ++v) norm[v] = 1.0 / std::sqrt(deg[v] + 1.0);
  Dense h = to_dense(x);
  for (std::size_t l = 0; l < c.layers; ++l) {
    if (l > 0) relu(h);
    const Dense xp = times(h, model.layers.at(l).W);
    Dense next(n, std::vector<double>(c.f_out, 0.0));
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t f = 0; f < c.f_out; ++f) next[v][f] = norm[v] * norm[v] * xp[v][f];
    }
    for (const Edge& e : graph.edges()) {
      for (std::size_t f = 0; f < c.f_out; ++f) {
        next[e.dst][f] += norm[e.dst] * norm[e.src] * xp[e.src][f];
      }
    }
    h = std::move(next);
  }
  return to_matrix(h, c.f_out);
}

Matrix reference(const Model& model, const Graph& graph, MatrixView x,
                 std::optional<std::span<const std::size_t>> in_degrees) {
  if (const auto* g = std::get_if<GatModel>(&model)) return reference_gat(graph, *g, x);
  return reference_gcn(graph, std::get<GcnModel>(model), x, in_degrees);
}

}  // namespace gasline
