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
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gasline/feature_store.hpp"
#include "gasline/graph.hpp"
#include "gasline/module_graph.hpp"

namespace gasline {

using RefId = std::uint32_t;

/// Lazy handle to a feature. Carries no data; the plan holds its metadata.
struct FeatureRef {
  RefId id = 0;
  Scope scope = Scope::Vertex;

  bool operator==(const FeatureRef&) const = default;
};

/// Feature read from the store by name.
struct StoreBinding {
  std::string name;
};

/// Output slot `slot` of plan step `step`.
struct StepOutput {
  std::size_t step = 0;
  std::size_t slot = 0;
};

struct RefInfo {
  Scope scope = Scope::Vertex;
  /// Unknown for store features until a module slot or validation fixes it.
  std::optional<std::size_t> cols;
  std::variant<StoreBinding, StepOutput> binding;
  /// Store name for bound features; output feature name otherwise.
  std::string name;

  bool is_store() const noexcept { return std::holds_alternative<StoreBinding>(binding); }
};

enum class Aggregator : std::uint8_t { Sum, Mean, Max, None };

const char* to_string(Aggregator agg);

struct TransformStep {
  Scope scope = Scope::Vertex;
  std::shared_ptr<const ModuleGraph> module;
  std::vector<FeatureRef> inputs;
  std::vector<FeatureRef> outputs;
};

/// Edge module input slots are bound in order: src_inputs (rows gathered from
/// each edge's source), then dst_inputs (from its destination), then
/// edge_inputs. The module has exactly one output slot.
struct MessagePassingStep {
  std::vector<FeatureRef> src_inputs;
  std::vector<FeatureRef> dst_inputs;
  std::vector<FeatureRef> edge_inputs;
  std::shared_ptr<const ModuleGraph> edge_module;
  Aggregator aggregator = Aggregator::Sum;
  FeatureRef output;
};

struct EdgeSoftmaxStep {
  FeatureRef input;
  FeatureRef output;
};

using Step = std::variant<TransformStep, MessagePassingStep, EdgeSoftmaxStep>;

const char* step_kind(const Step& step);

/// Deferred execution plan. Building a plan never touches feature data: the
/// get_* calls hand out references, and transform / message_passing /
/// edge_softmax append steps whose outputs are new references.
class Plan {
 public:
  /// Reference to a store feature. Repeated calls with the same name return
  /// the same reference. Existence is checked by validate().
  FeatureRef get_vertex(const std::string& name, std::optional<std::size_t> cols = std::nullopt);
  FeatureRef get_edge(const std::string& name, std::optional<std::size_t> cols = std::nullopt);

  /// Appends a local per-row step. Returns one reference per module output
  /// slot. PlanError on mixed scopes, ShapeError on slot mismatches.
  std::vector<FeatureRef> transform(const std::vector<FeatureRef>& inputs, ModuleGraph module);

  /// Appends a per-edge step folded per destination by `aggregator`
  /// (Aggregator::None keeps the per-edge result as an edge feature).
  FeatureRef message_passing(const std::vector<FeatureRef>& src_inputs,
                             const std::vector<FeatureRef>& dst_inputs,
                             const std::vector<FeatureRef>& edge_inputs, ModuleGraph edge_module,
                             Aggregator aggregator);

  /// Per-destination, per-column softmax over incoming edges.
  FeatureRef edge_softmax(FeatureRef logits);

  /// Renames a step output; the name is what execute() stores it under.
  void set_name(FeatureRef ref, std::string name);

  const RefInfo& info(FeatureRef ref) const;
  const std::vector<RefInfo>& refs() const noexcept { return refs_; }
  const std::vector<Step>& steps() const noexcept { return steps_; }
  /// Step output with the given name, if any.
  std::optional<FeatureRef> find_output(const std::string& name) const;

  /// Marks the plan as needing a self-loop at every vertex (GAT attention).
  void set_requires_self_loops(bool v) noexcept { requires_self_loops_ = v; }
  bool requires_self_loops() const noexcept { return requires_self_loops_; }

  /// Unchecked construction, for tools and for exercising validate().
  FeatureRef add_ref(RefInfo info);
  void append_step(Step step);

 private:
  FeatureRef bind(Scope scope, const std::string& name, std::optional<std::size_t> cols);
  void unify_cols(FeatureRef ref, std::size_t cols, const std::string& where);
  FeatureRef new_output(Scope scope, std::size_t cols, std::size_t slot, const std::string& slot_name);

  std::vector<RefInfo> refs_;
  std::vector<Step> steps_;
  bool requires_self_loops_ = false;
};

struct Validation {
  std::vector<std::string> errors;

  bool ok() const noexcept { return errors.empty(); }
};

/// Checks DAG order, scope rules, shape agreement and store bindings
/// (existence, rows, cols). Reports every problem found, not only the first,
/// and never reads feature data.
Validation validate(const Plan& plan, const Graph& graph, const FeatureStore& store);

/// Resolved cols of every reference (store features looked up in the store).
/// Only meaningful for plans that pass validate().
std::vector<std::size_t> resolve_cols(const Plan& plan, const FeatureStore& store);

}  // namespace gasline
