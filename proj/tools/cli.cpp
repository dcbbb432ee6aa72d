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
#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gasline/error.hpp"
#include "gasline/feature_store.hpp"
#include "gasline/generators.hpp"
#include "gasline/graph.hpp"
#include "gasline/models.hpp"
#include "gasline/sampling.hpp"

namespace gasline::cli {

namespace {

namespace fs = std::filesystem;

/// Bad flags, missing inputs or unreadable files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InferOptions {
  std::string graph;
  std::string features;
  std::string model = "gat";
  std::size_t fin = 0;  // 0: take the feature file's width
  std::size_t fout = 16;
  std::size_t heads = 1;
  std::size_t layers = 0;  // 0: 1 in full mode, depth otherwise
  std::size_t parts = 1;
  std::string mode = "full";
  std::string out;
  std::uint64_t seed = 0;
  std::string targets = "all";
  std::string fanout = "ALL";
  std::size_t depth = 2;
  float slope = 0.2f;
  bool no_self_loops = false;
};

struct GenOptions {
  std::size_t vertices = 100;
  std::size_t edges = 500;
  std::string kind = "erdos_renyi";
  std::size_t width = 4;
  std::uint64_t seed = 0;
  std::string out;
};

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("bad " + what + " '" + text + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

std::vector<std::size_t> parse_fanouts(const std::string& text, std::size_t depth) {
  std::vector<std::size_t> f;
  for (const auto& tok : split(text, ',')) {
    if (tok == "ALL" || tok == "all") {
      f.push_back(kFanoutAll);
    } else {
      const std::size_t v = parse_count(tok, "fanout");
      if (v == 0) throw ConfigError("fanouts must be at least 1 or ALL");
      f.push_back(v);
    }
  }
  if (f.size() == 1) f.assign(depth, f.front());
  if (f.size() != depth) {
    throw ConfigError("got " + std::to_string(f.size()) + " fanouts for depth " +
                      std::to_string(depth));
  }
  return f;
}

std::vector<VertexId> parse_targets(const std::string& text, std::size_t n) {
  std::vector<VertexId> t;
  if (text == "all") {
    for (std::size_t v = 0; v < n; ++v) t.push_back(static_cast<VertexId>(v));
    return t;
  }
  for (const auto& tok : split(text, ',')) {
    const std::size_t v = parse_count(tok, "target");
    if (v >= n) {
      throw ConfigError("target " + tok + " is not a vertex of the " + std::to_string(n) +
                        "-vertex graph");
    }
    t.push_back(static_cast<VertexId>(v));
  }
  if (t.empty()) throw ConfigError("no targets given");
  return t;
}

std::size_t thread_cap() {
  const char* env = std::getenv("GASLINE_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  const std::size_t v = parse_count(env, "GASLINE_THREADS");
  if (v == 0) throw ConfigError("GASLINE_THREADS must be at least 1");
  return v;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("--") + what + " is required");
  if (!fs::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " file '" + path + "' not found");
  }
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out + "': " + ec.message());
  return fs::path(out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text << '\n';
}

std::string sampling_json(const SamplingResult& r, std::size_t targets, std::size_t depth) {
  nlohmann::ordered_json j;
  j["targets"] = targets;
  j["depth"] = depth;
  j["node_rows"] = r.node_rows;
  j["edge_evals"] = r.edge_evals;
  j["flops"] = r.flops;
  j["time_ms"] = r.time_ms;
  j["redundancy_factor"] = r.redundancy;
  return j.dump(2);
}

int infer(InferOptions o, std::ostream& out) {
  if (o.mode != "full" && o.mode != "sample" && o.mode != "compare") {
    throw ConfigError("unknown mode '" + o.mode + "' (expected full, sample or compare)");
  }
  require_file(o.graph, "graph");
  require_file(o.features, "features");
  const std::size_t cap = thread_cap();
  const fs::path dir = prepare_out(o.out);

  EdgeList edges;
  Matrix x;
  try {
    edges = load_edge_list(fs::path(o.graph));
    x = read_feature_file(fs::path(o.features));
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  const std::size_t n = x.rows();
  if (edges.declared_vertices && *edges.declared_vertices != n) {
    throw ValidationError({"graph declares " + std::to_string(*edges.declared_vertices) +
                           " vertices but the feature file has " + std::to_string(n) + " rows"});
  }
  const Graph graph = [&] {
    try {
      return build_graph(edges.edges, n);
    } catch (const ContractError& e) {
      throw ValidationError({e.what()});
    }
  }();
  if (o.fin == 0) o.fin = x.cols();
  if (o.fin != x.cols()) {
    throw ValidationError({"--fin is " + std::to_string(o.fin) + " but the feature file has " +
                           std::to_string(x.cols()) + " columns"});
  }
  const bool sampling = o.mode != "full";
  if (o.layers == 0) o.layers = sampling ? o.depth : 1;
  if (o.fout == 0 || o.heads == 0 || o.layers == 0 || o.parts == 0) {
    throw ConfigError("--fout, --heads, --layers and --parts must be at least 1");
  }
  ModelSpec spec;
  spec.name = o.model;
  spec.f_in = o.fin;
  spec.f_out = o.fout;
  spec.heads = o.heads;
  spec.layers = o.layers;
  spec.leaky_slope = o.slope;
  spec.add_self_loops = !o.no_self_loops;
  spec.seed = o.seed;
  if (spec.name != "gat" && spec.name != "gcn") {
    throw ConfigError("unknown model '" + spec.name + "' (expected gat or gcn)");
  }
  const Model model = make_model(spec);

  std::optional<ModelRun> full;
  if (o.mode != "sample") {
    ExecuteOptions opts;
    opts.max_threads = cap;
    full = run_model(model, graph, x, o.parts, opts);
    write_feature_file(dir / "output.txt", full->output);
  }
  if (!sampling) {
    write_text(dir / "report.json", full->report.to_json());
    out << "full: " << n << " vertices, " << full->report.total_flops() << " flops, "
        << full->report.total_bytes_shipped() << " bytes shipped\n";
    return kOk;
  }

  const SamplingConfig cfg{parse_fanouts(o.fanout, o.depth), o.seed, parse_targets(o.targets, n)};
  const auto subgraphs = khop_sample(graph, cfg);
  const SamplingResult s = subgraph_infer(model, graph, subgraphs, x);
  if (o.mode == "sample") {
    write_feature_file(dir / "output.txt", s.outputs);
    write_text(dir / "report.json", sampling_json(s, cfg.targets.size(), cfg.depth()));
    out << "sample: " << cfg.targets.size() << " targets, " << s.flops << " flops, redundancy "
        << s.redundancy << "\n";
    return kOk;
  }
  write_feature_file(dir / "sampled_output.txt", s.outputs);
  write_text(dir / "engine_report.json", full->report.to_json());
  const ComparisonRecord rec = compare_runs(counters(full->report), counters(s),
                                            select_rows(full->output, cfg.targets), s.outputs);
  write_text(dir / "report.json", rec.to_json());
  out << "compare: flops_ratio " << rec.flops_ratio << ", redundancy_factor "
      << rec.redundancy_factor << ", max_deviation " << rec.max_deviation << "\n";
  return kOk;
}

int gen(const GenOptions& o, std::ostream& out) {
  GraphKind kind;
  try {
    kind = parse_graph_kind(o.kind);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  const fs::path dir = prepare_out(o.out);
  EdgeList edges;
  try {
    edges = generate_graph(kind, o.vertices, o.edges, o.seed);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  {
    std::ofstream f(dir / "graph.tsv", std::ios::binary);
    if (!f) throw ConfigError("cannot write graph file");
    write_edge_list(f, edges.edges, o.vertices);
  }
  // Feature seed differs from the topology seed so the two streams are independent.
  write_feature_file(dir / "features.txt", random_features(o.vertices, o.width, ~o.seed));
  out << "gen: " << o.vertices << " vertices, " << edges.edges.size() << " edges ("
      << to_string(kind) << ")\n";
  return kOk;
}

void add_infer_flags(CLI::App& app, InferOptions& o) {
  app.add_option("--graph", o.graph, "Edge list file (src<TAB>dst)");
  app.add_option("--features", o.features, "Vertex feature file");
  app.add_option("--model", o.model, "gat or gcn");
  app.add_option("--fin", o.fin, "Input width (default: feature file width)");
  app.add_option("--fout", o.fout, "Output width per head");
  app.add_option("--heads", o.heads, "Attention heads (gat)");
  app.add_option("--layers", o.layers, "Layer count (default 1, or --depth when sampling)");
  app.add_option("--parts", o.parts, "Partitions");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--seed", o.seed, "Parameter and sampling seed");
  app.add_option("--targets", o.targets, "all, or comma-separated vertex ids");
  app.add_option("--fanout", o.fanout, "ALL or counts, one per hop (comma-separated)");
  app.add_option("--depth", o.depth, "Sampling hops");
  app.add_option("--slope", o.slope, "Leaky ReLU slope for attention logits");
  app.add_flag("--no-self-loops", o.no_self_loops, "Do not add GAT self-loops");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gasline: full-graph GNN inference on a partitioned gather-apply-scatter engine"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file mirroring the flags");

  InferOptions infer_opts;
  auto* infer_cmd = app.add_subcommand("infer", "Run a model over a graph");
  add_infer_flags(*infer_cmd, infer_opts);
  infer_cmd->add_option("--mode", infer_opts.mode, "full, sample or compare");

  InferOptions compare_opts;
  compare_opts.mode = "compare";
  auto* compare_cmd = app.add_subcommand("compare", "Full-graph vs sampled inference");
  add_infer_flags(*compare_cmd, compare_opts);

  GenOptions gen_opts;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic graph and features");
  gen_cmd->add_option("--vertices", gen_opts.vertices, "Vertex count");
  gen_cmd->add_option("--edges", gen_opts.edges, "Edge count");
  gen_cmd->add_option("--kind", gen_opts.kind, "erdos_renyi or power_law");
  gen_cmd->add_option("--width", gen_opts.width, "Feature width");
  gen_cmd->add_option("--seed", gen_opts.seed, "Seed");
  gen_cmd->add_option("--out", gen_opts.out, "Output directory");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*infer_cmd) return infer(infer_opts, out);
    if (*compare_cmd) return infer(compare_opts, out);
    return gen(gen_opts, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidationError;
  } catch (const ShapeError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "execution error: " << e.what() << "\n";
    return kExecutionError;
  }
}

}  // namespace gasline::cli
