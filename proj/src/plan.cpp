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
#include "gasline/plan.hpp"

#include <map>
#include <set>
#include <utility>

#include "gasline/error.hpp"

namespace gasline {

const char* to_string(Aggregator agg) {
  switch (agg) {
    case Aggregator::Sum: return "sum";
    case Aggregator::Mean: return "mean";
    case Aggregator::Max: return "max";
    case Aggregator::None: return "none";
  }
  return "?";
}

const char* step_kind(const Step& step) {
  switch (step.index()) {
    case 0: return "transform";
    case 1: return "message_passing";
    default: return "edge_softmax";
  }
}

namespace {

std::string label(std::size_t i, const Step& s) {
  return "step " + std::to_string(i) + " (" + step_kind(s) + ")";
}

std::string ref_text(const RefInfo& r) {
  return std::string(to_string(r.scope)) + " feature '" + r.name + "'";
}

}  // namespace

FeatureRef Plan::bind(Scope scope, const std::string& name, std::optional<std::size_t> cols) {
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    const RefInfo& r = refs_[i];
    if (r.is_store() && r.scope == scope && r.name == name) {
      FeatureRef ref{static_cast<RefId>(i), scope};
      if (cols) unify_cols(ref, *cols, "get");
      return ref;
    }
  }
  return add_ref(RefInfo{scope, cols, StoreBinding{name}, name});
}

FeatureRef Plan::get_vertex(const std::string& name, std::optional<std::size_t> cols) {
  return bind(Scope::Vertex, name, cols);
}

FeatureRef Plan::get_edge(const std::string& name, std::optional<std::size_t> cols) {
  return bind(Scope::Edge, name, cols);
}

const RefInfo& Plan::info(FeatureRef ref) const {
  if (ref.id >= refs_.size()) {
    throw ContractError("feature ref " + std::to_string(ref.id) + " does not belong to this plan");
  }
  return refs_[ref.id];
}

FeatureRef Plan::add_ref(RefInfo info) {
  refs_.push_back(std::move(info));
  return FeatureRef{static_cast<RefId>(refs_.size() - 1), refs_.back().scope};
}

void Plan::append_step(Step step) { steps_.push_back(std::move(step)); }

void Plan::unify_cols(FeatureRef ref, std::size_t cols, const std::string& where) {
  RefInfo& r = refs_.at(ref.id);
  if (!r.cols) {
    r.cols = cols;
  } else if (*r.cols != cols) {
    throw ShapeError(where + ": " + ref_text(r) + " has " + std::to_string(*r.cols) +
                     " cols, slot expects " + std::to_string(cols));
  }
}

FeatureRef Plan::new_output(Scope scope, std::size_t cols, std::size_t slot,
                            const std::string& slot_name) {
  std::string name = "s" + std::to_string(steps_.size()) + "." + slot_name;
  return add_ref(RefInfo{scope, cols, StepOutput{steps_.size(), slot}, std::move(name)});
}

std::vector<FeatureRef> Plan::transform(const std::vector<FeatureRef>& inputs,
                                        ModuleGraph module) {
  if (inputs.empty()) throw PlanError("transform needs at least one input");
  for (const auto& in : inputs) {
    if (info(in).scope != inputs.front().scope) {
      throw PlanError("transform '" + module.name() + "' mixes vertex and edge inputs");
    }
  }
  const auto shapes = infer_shapes(module);
  if (module.num_inputs() != inputs.size()) {
    throw ShapeError("transform '" + module.name() + "' has " +
                     std::to_string(module.num_inputs()) + " input slots, got " +
                     std::to_string(inputs.size()) + " refs");
  }
  const Scope scope = inputs.front().scope;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    unify_cols(inputs[i], module.input_cols(i), "transform '" + module.name() + "'");
  }
  std::vector<FeatureRef> outs;
  for (std::size_t k = 0; k < module.outputs().size(); ++k) {
    const auto& slot = module.outputs()[k];
    outs.push_back(new_output(scope, shapes[slot.node], k, slot.name));
  }
  steps_.emplace_back(TransformStep{scope, std::make_shared<const ModuleGraph>(std::move(module)),
                                    inputs, outs});
  return outs;
}

FeatureRef Plan::message_passing(const std::vector<FeatureRef>& src_inputs,
                                 const std::vector<FeatureRef>& dst_inputs,
                                 const std::vector<FeatureRef>& edge_inputs,
                                 ModuleGraph edge_module, Aggregator aggregator) {
  const std::string where = "message_passing '" + edge_module.name() + "'";
  for (const auto& r : src_inputs) {
    if (info(r).scope != Scope::Vertex) throw PlanError(where + ": src inputs must be vertex features");
  }
  for (const auto& r : dst_inputs) {
    if (info(r).scope != Scope::Vertex) throw PlanError(where + ": dst inputs must be vertex features");
  }
  for (const auto& r : edge_inputs) {
    if (info(r).scope != Scope::Edge) throw PlanError(where + ": edge inputs must be edge features");
  }
  const auto shapes = infer_shapes(edge_module);
  const std::size_t total = src_inputs.size() + dst_inputs.size() + edge_inputs.size();
  if (edge_module.num_inputs() != total) {
    throw ShapeError(where + " has " + std::to_string(edge_module.num_inputs()) +
                     " input slots, got " + std::to_string(total) + " refs");
  }
  if (edge_module.outputs().size() != 1) {
    throw ShapeError(where + " must have exactly one output slot");
  }
  std::size_t slot = 0;
  for (const auto* group : {&src_inputs, &dst_inputs, &edge_inputs}) {
    for (const auto& r : *group) unify_cols(r, edge_module.input_cols(slot++), where);
  }
  const auto& out_slot = edge_module.outputs().front();
  const Scope out_scope = aggregator == Aggregator::None ? Scope::Edge : Scope::Vertex;
  FeatureRef out = new_output(out_scope, shapes[out_slot.node], 0, out_slot.name);
  steps_.emplace_back(MessagePassingStep{
      src_inputs, dst_inputs, edge_inputs,
      std::make_shared<const ModuleGraph>(std::move(edge_module)), aggregator, out});
  return out;
}

FeatureRef Plan::edge_softmax(FeatureRef logits) {
  const RefInfo& r = info(logits);
  if (r.scope != Scope::Edge) throw PlanError("edge_softmax needs an edge feature, got " + ref_text(r));
  if (!r.cols) throw PlanError("edge_softmax input " + ref_text(r) + " has unknown cols");
  const std::size_t cols = *r.cols;
  FeatureRef out = new_output(Scope::Edge, cols, 0, "softmax");
  steps_.emplace_back(EdgeSoftmaxStep{logits, out});
  return out;
}

void Plan::set_name(FeatureRef ref, std::string name) {
  info(ref);
  RefInfo& r = refs_[ref.id];
  if (r.is_store()) throw PlanError("cannot rename store " + ref_text(r));
  if (name.empty()) throw PlanError("feature name must be nonempty");
  for (const auto& other : refs_) {
    if (&other != &r && !other.is_store() && other.scope == r.scope && other.name == name) {
      throw PlanError(std::string(to_string(r.scope)) + " output name '" + name +
                      "' is already used");
    }
  }
  r.name = std::move(name);
}

std::optional<FeatureRef> Plan::find_output(const std::string& name) const {
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    if (!refs_[i].is_store() && refs_[i].name == name) {
      return FeatureRef{static_cast<RefId>(i), refs_[i].scope};
    }
  }
  return std::nullopt;
}

namespace {

struct Slot {
  FeatureRef ref;
  Scope expected;
  std::size_t cols;
  std::string what;
};

class Validator {
 public:
  Validator(const Plan& plan, const Graph& graph, const FeatureStore& store)
      : plan_(plan), graph_(graph), store_(store) {}

  Validation run() {
    check_store_rows();
    check_refs();
    for (std::size_t i = 0; i < plan_.steps().size(); ++i) check_step(i);
    if (plan_.requires_self_loops() && !graph_.has_self_loop_everywhere()) {
      err("plan requires a self-loop at every vertex but the graph lacks some");
    }
    return std::move(out_);
  }

 private:
  void err(std::string msg) { out_.errors.push_back(std::move(msg)); }

  void check_store_rows() {
    if (store_.rows(Scope::Vertex) != graph_.num_vertices()) {
      err("store has " + std::to_string(store_.rows(Scope::Vertex)) +
          " vertex rows but the graph has " + std::to_string(graph_.num_vertices()) + " vertices");
    }
    if (store_.rows(Scope::Edge) != graph_.num_edges()) {
      err("store has " + std::to_string(store_.rows(Scope::Edge)) +
          " edge rows but the graph has " + std::to_string(graph_.num_edges()) + " edges");
    }
  }

  void check_refs() {
    std::set<std::pair<Scope, std::string>> produced;
    for (const auto& r : plan_.refs()) {
      if (r.is_store()) continue;
      if (!produced.emplace(r.scope, r.name).second) {
        err(ref_text(r) + " is produced more than once");
      }
      if (store_.contains(r.scope, r.name)) {
        err("output " + ref_text(r) + " collides with a feature already in the store");
      }
    }
    for (const auto& r : plan_.refs()) {
      if (!r.is_store()) continue;
      if (produced.contains({r.scope, r.name})) {
        err(ref_text(r) + " is read from the store but produced by the plan (forward reference)");
      }
      auto cols = store_.cols(r.scope, r.name);
      if (!cols) {
        err(ref_text(r) + " not found in store");
      } else if (r.cols && *r.cols != *cols) {
        err(ref_text(r) + " has " + std::to_string(*cols) + " cols in the store, plan expects " +
            std::to_string(*r.cols));
      }
    }
  }

  // Cols a ref will carry at run time, or nullopt if unresolvable.
  std::optional<std::size_t> cols_of(const RefInfo& r) const {
    // Declared store cols are checked against the store in check_refs.
    if (r.cols || !r.is_store()) return r.cols;
    return store_.cols(r.scope, r.name);
  }

  std::string origin(const RefInfo& r) const {
    if (r.is_store()) return "from the store";
    const auto& so = std::get<StepOutput>(r.binding);
    if (so.step < plan_.steps().size()) return "produced by " + label(so.step, plan_.steps()[so.step]);
    return "produced by missing step " + std::to_string(so.step);
  }

  // Returns false if the ref is unusable at step i.
  bool check_read(std::size_t i, FeatureRef ref, const std::string& what) {
    const std::string at = label(i, plan_.steps()[i]);
    if (ref.id >= plan_.refs().size()) {
      err(at + " " + what + " references unknown ref " + std::to_string(ref.id));
      return false;
    }
    const RefInfo& r = plan_.refs()[ref.id];
    if (const auto* so = std::get_if<StepOutput>(&r.binding); so && so->step >= i) {
      err(at + " " + what + " reads " + ref_text(r) + " " + origin(r) +
          ", which does not run earlier");
      return false;
    }
    return true;
  }

  void check_slots(std::size_t i, const ModuleGraph& m, const std::vector<Slot>& slots) {
    const std::string at = label(i, plan_.steps()[i]);
    if (m.num_inputs() != slots.size()) {
      err(at + " module '" + m.name() + "' has " + std::to_string(m.num_inputs()) +
          " input slots but is given " + std::to_string(slots.size()) + " refs");
      return;
    }
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const Slot& s = slots[k];
      if (!check_read(i, s.ref, s.what)) continue;
      const RefInfo& r = plan_.refs()[s.ref.id];
      if (r.scope != s.expected) {
        err(at + " " + s.what + " must be a " + to_string(s.expected) + " feature, got " +
            ref_text(r));
        continue;
      }
      auto c = cols_of(r);
      if (c && *c != s.cols) {
        err(at + " " + s.what + " " + ref_text(r) + " " + origin(r) + " has " +
            std::to_string(*c) + " cols but module '" + m.name() + "' slot '" +
            m.node(m.input_slots()[k]).name + "' expects " + std::to_string(s.cols));
      }
    }
  }

  void check_output(std::size_t i, FeatureRef ref, std::size_t slot, Scope scope,
                    std::optional<std::size_t> cols) {
    const std::string at = label(i, plan_.steps()[i]);
    if (ref.id >= plan_.refs().size()) {
      err(at + " output " + std::to_string(slot) + " references unknown ref");
      return;
    }
    const RefInfo& r = plan_.refs()[ref.id];
    const auto* so = std::get_if<StepOutput>(&r.binding);
    if (!so || so->step != i || so->slot != slot) {
      err(at + " output " + std::to_string(slot) + " is not bound to this step");
    }
    if (r.scope != scope) {
      err(at + " output " + ref_text(r) + " must be a " + to_string(scope) + " feature");
    }
    if (cols && r.cols != cols) {
      err(at + " output " + ref_text(r) + " declares " +
          (r.cols ? std::to_string(*r.cols) : std::string("unknown")) +
          " cols but the module produces " + std::to_string(*cols));
    }
  }

  std::optional<std::vector<std::size_t>> shapes(std::size_t i, const ModuleGraph* m) {
    const std::string at = label(i, plan_.steps()[i]);
    if (!m) {
      err(at + " has no module");
      return std::nullopt;
    }
    try {
      return infer_shapes(*m);
    } catch (const Error& e) {
      err(at + " module '" + m->name() + "': " + e.what());
      return std::nullopt;
    }
  }

  void check_step(std::size_t i) {
    const Step& step = plan_.steps()[i];
    if (const auto* t = std::get_if<TransformStep>(&step)) {
      auto sh = shapes(i, t->module.get());
      if (!sh) return;
      std::vector<Slot> slots;
      for (std::size_t k = 0; k < t->inputs.size(); ++k) {
        slots.push_back({t->inputs[k], t->scope,
                         k < t->module->num_inputs() ? t->module->input_cols(k) : 0,
                         "input " + std::to_string(k)});
      }
      check_slots(i, *t->module, slots);
      const auto& outs = t->module->outputs();
      if (outs.size() != t->outputs.size()) {
        err(label(i, step) + " module has " + std::to_string(outs.size()) + " outputs but the step binds " +
            std::to_string(t->outputs.size()));
        return;
      }
      for (std::size_t k = 0; k < outs.size(); ++k) {
        check_output(i, t->outputs[k], k, t->scope, (*sh)[outs[k].node]);
      }
    } else if (const auto* mp = std::get_if<MessagePassingStep>(&step)) {
      auto sh = shapes(i, mp->edge_module.get());
      if (!sh) return;
      const ModuleGraph& m = *mp->edge_module;
      std::vector<Slot> slots;
      auto add = [&](const std::vector<FeatureRef>& refs, Scope scope, const char* group) {
        for (std::size_t k = 0; k < refs.size(); ++k) {
          const std::size_t idx = slots.size();
          slots.push_back({refs[k], scope, idx < m.num_inputs() ? m.input_cols(idx) : 0,
                           std::string(group) + " input " + std::to_string(k)});
        }
      };
      add(mp->src_inputs, Scope::Vertex, "src");
      add(mp->dst_inputs, Scope::Vertex, "dst");
      add(mp->edge_inputs, Scope::Edge, "edge");
      check_slots(i, m, slots);
      if (m.outputs().size() != 1) {
        err(label(i, step) + " edge module '" + m.name() + "' must have exactly one output");
        return;
      }
      const Scope scope = mp->aggregator == Aggregator::None ? Scope::Edge : Scope::Vertex;
      check_output(i, mp->output, 0, scope, (*sh)[m.outputs().front().node]);
    } else {
      const auto& s = std::get<EdgeSoftmaxStep>(step);
      if (!check_read(i, s.input, "input")) return;
      const RefInfo& in = plan_.refs()[s.input.id];
      if (in.scope != Scope::Edge) {
        err(label(i, step) + " input must be an edge feature, got " + ref_text(in));
        return;
      }
      check_output(i, s.output, 0, Scope::Edge, cols_of(in));
    }
  }

  const Plan& plan_;
  const Graph& graph_;
  const FeatureStore& store_;
  Validation out_;
};

}  // namespace

Validation validate(const Plan& plan, const Graph& graph, const FeatureStore& store) {
  return Validator(plan, graph, store).run();
}

std::vector<std::size_t> resolve_cols(const Plan& plan, const FeatureStore& store) {
  std::vector<std::size_t> cols;
  cols.reserve(plan.refs().size());
  for (const auto& r : plan.refs()) {
    std::optional<std::size_t> c = r.cols;
    if (r.is_store()) {
      if (auto s = store.cols(r.scope, r.name)) c = s;
    }
    cols.push_back(c.value_or(0));
  }
  return cols;
}

}  // namespace gasline
