#include "ledgerflow/provenance.hpp"

#include <algorithm>
#include <set>

#include "ledgerflow/error.hpp"

namespace ledgerflow {

std::string entity_kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::Dataset: return "dataset";
    case EntityKind::File: return "file";
    case EntityKind::Asset: return "asset";
  }
  return "dataset";
}

EntityKind entity_kind_from_name(std::string_view name) {
  if (name == "dataset") return EntityKind::Dataset;
  if (name == "file") return EntityKind::File;
  if (name == "asset") return EntityKind::Asset;
  throw Error(Errc::ParseError, "unknown entity kind \"" + std::string(name) + "\"");
}

std::string edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Used: return "used";
    case EdgeKind::GeneratedBy: return "generatedBy";
    case EdgeKind::StoredIn: return "storedIn";
  }
  return "used";
}

EdgeKind edge_kind_from_name(std::string_view name) {
  if (name == "used") return EdgeKind::Used;
  if (name == "generatedBy") return EdgeKind::GeneratedBy;
  if (name == "storedIn") return EdgeKind::StoredIn;
  throw Error(Errc::ParseError, "unknown edge kind \"" + std::string(name) + "\"");
}

std::string prov_mode_name(ProvMode mode) {
  switch (mode) {
    case ProvMode::Embedded: return "Embedded";
    case ProvMode::Reference: return "Reference";
    case ProvMode::Both: return "Both";
  }
  return "Embedded";
}

canon::Value to_value(const ProvTree& tree) {
  canon::Value::Object obj;
  canon::Value::List activities;
  for (const ProvActivity& a : tree.activities) {
    canon::Value::Object av;
    av.emplace("activity_id", a.activity_id);
    av.emplace("ended", a.ended);
    av.emplace("op", a.op);
    if (!a.params.empty()) {
      canon::Value::Object params;
      for (const auto& [k, v] : a.params) params.emplace(k, v);
      av.emplace("params", std::move(params));
    }
    av.emplace("started", a.started);
    activities.emplace_back(std::move(av));
  }
  obj.emplace("activities", std::move(activities));
  canon::Value::List edges;
  for (const ProvEdge& e : tree.edges) {
    canon::Value::Object ev;
    ev.emplace("from", e.from);
    ev.emplace("kind", edge_kind_name(e.kind));
    ev.emplace("to", e.to);
    edges.emplace_back(std::move(ev));
  }
  obj.emplace("edges", std::move(edges));
  canon::Value::List entities;
  for (const ProvEntity& e : tree.entities) {
    canon::Value::Object ev;
    if (e.digest) ev.emplace("digest", e.digest->hex());
    ev.emplace("entity_id", e.entity_id);
    ev.emplace("kind", entity_kind_name(e.kind));
    if (e.location) ev.emplace("location", *e.location);
    entities.emplace_back(std::move(ev));
  }
  obj.emplace("entities", std::move(entities));
  obj.emplace("root", tree.root);
  return canon::Value(std::move(obj));
}

ProvTree tree_from_value(const canon::Value& value) {
  ProvTree tree;
  for (const canon::Value& av : value.at("activities").as_list()) {
    ProvActivity a;
    a.activity_id = av.at("activity_id").as_string();
    a.ended = av.at("ended").as_int();
    a.op = av.at("op").as_string();
    if (const canon::Value* p = av.find("params")) {
      for (const auto& [k, v] : p->as_object()) a.params.emplace(k, v.as_string());
    }
    a.started = av.at("started").as_int();
    if (a.started > a.ended) {
      throw Error(Errc::ParseError, "activity ends before it starts");
    }
    tree.activities.push_back(std::move(a));
  }
  for (const canon::Value& ev : value.at("edges").as_list()) {
    ProvEdge e;
    e.from = ev.at("from").as_string();
    e.kind = edge_kind_from_name(ev.at("kind").as_string());
    e.to = ev.at("to").as_string();
    tree.edges.push_back(std::move(e));
  }
  std::set<std::string> ids;
  for (const canon::Value& ev : value.at("entities").as_list()) {
    ProvEntity e;
    if (const canon::Value* d = ev.find("digest")) {
      e.digest = Digest::from_hex(d->as_string());
    }
    e.entity_id = ev.at("entity_id").as_string();
    e.kind = entity_kind_from_name(ev.at("kind").as_string());
    if (const canon::Value* l = ev.find("location")) e.location = l->as_string();
    if (!ids.insert(e.entity_id).second) {
      throw Error(Errc::ParseError, "duplicate entity_id \"" + e.entity_id + "\"");
    }
    tree.entities.push_back(std::move(e));
  }
  tree.root = value.at("root").as_string();
  return tree;
}

canon::Value to_value(const EventLogRecord& record) {
  canon::Value::Object obj;
  canon::Value::List events;
  for (const StepEvent& ev : record.events) events.push_back(to_value(ev));
  obj.emplace("events", std::move(events));
  canon::Value::Object inputs;
  for (const auto& [name, digest] : record.inputs) inputs.emplace(name, digest.hex());
  obj.emplace("inputs", std::move(inputs));
  canon::Value::Object outputs;
  for (const auto& [name, digest] : record.outputs) outputs.emplace(name, digest.hex());
  obj.emplace("outputs", std::move(outputs));
  if (record.workflow) obj.emplace("workflow", to_value(*record.workflow));
  return canon::Value(std::move(obj));
}

EventLogRecord event_record_from_value(const canon::Value& value) {
  EventLogRecord record;
  std::int64_t prev_time = -1;
  for (const canon::Value& ev : value.at("events").as_list()) {
    StepEvent event = step_event_from_value(ev);
    if (event.logical_time <= prev_time) {
      throw Error(Errc::ParseError, "event log times not strictly increasing");
    }
    prev_time = event.logical_time;
    record.events.push_back(std::move(event));
  }
  for (const auto& [name, v] : value.at("inputs").as_object()) {
    record.inputs.emplace(name, Digest::from_hex(v.as_string()));
  }
  for (const auto& [name, v] : value.at("outputs").as_object()) {
    record.outputs.emplace(name, Digest::from_hex(v.as_string()));
  }
  if (const canon::Value* wf = value.find("workflow")) {
    record.workflow = workflow_from_value(*wf);
  }
  return record;
}

canon::Value to_value(const EmbeddedProv& embedded) {
  canon::Value::Object obj;
  if (embedded.events) obj.emplace("events", to_value(*embedded.events));
  if (embedded.tree) obj.emplace("tree", to_value(*embedded.tree));
  return canon::Value(std::move(obj));
}

EmbeddedProv embedded_from_value(const canon::Value& value) {
  EmbeddedProv embedded;
  if (const canon::Value* e = value.find("events")) {
    embedded.events = event_record_from_value(*e);
  }
  if (const canon::Value* t = value.find("tree")) {
    embedded.tree = tree_from_value(*t);
  }
  return embedded;
}

namespace {

[[noreturn]] void inconsistent(const std::string& what) {
  throw Error(Errc::InconsistentTrace, what);
}

std::string activity_id_for(std::size_t step_index, const std::string& op) {
  return "a" + std::to_string(step_index) + "-" + op;
}

void check_trace_against_workflow(const std::vector<StepEvent>& trace,
                                  const WorkflowDescription& workflow) {
  if (trace.size() != workflow.steps.size()) {
    inconsistent("trace has " + std::to_string(trace.size()) + " events for " +
                 std::to_string(workflow.steps.size()) + " steps");
  }
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const StepEvent& ev = trace[k];
    const Step& step = workflow.steps[k];
    if (ev.step_index != static_cast<std::int64_t>(k)) {
      inconsistent("step_index out of order at position " + std::to_string(k));
    }
    if (ev.op != step.op) {
      inconsistent("event op \"" + ev.op + "\" does not match step op \"" +
                   step.op + "\"");
    }
    const std::string& in_name = step.inputs.begin()->second;
    if (ev.input_digests.count(in_name) == 0) {
      inconsistent("event " + std::to_string(k) + " lacks input digest for \"" +
                   in_name + "\"");
    }
    const std::string& out_name = step.outputs.begin()->second;
    if (ev.output_digests.count(out_name) == 0) {
      inconsistent("event " + std::to_string(k) + " lacks output digest for \"" +
                   out_name + "\"");
    }
  }
}

}  // namespace

ProvTree build_tree_record(const std::vector<StepEvent>& trace,
                           const WorkflowDescription& workflow) {
  if (trace.empty()) inconsistent("empty execution trace");
  check_workflow(workflow);
  check_trace_against_workflow(trace, workflow);

  const std::string asset = workflow_asset(workflow);
  ProvTree tree;
  tree.root = asset;

  std::map<std::string, ProvEntity> entities;
  auto touch_entity = [&](const std::string& name, EntityKind kind,
                          std::optional<Digest> digest,
                          std::optional<std::string> location) {
    auto [it, inserted] = entities.try_emplace(name);
    ProvEntity& e = it->second;
    if (inserted) {
      e.entity_id = name;
      e.kind = kind;
    } else if (kind == EntityKind::File) {
      e.kind = kind;
    }
    if (digest) e.digest = digest;
    if (location) e.location = location;
  };

  for (std::size_t k = 0; k < workflow.steps.size(); ++k) {
    const Step& step = workflow.steps[k];
    const StepEvent& ev = trace[k];
    const std::string& in_name = step.inputs.begin()->second;
    const std::string& out_name = step.outputs.begin()->second;
    const std::string act_id = activity_id_for(k, step.op);

    ProvActivity activity;
    activity.activity_id = act_id;
    activity.op = step.op;
    activity.started = ev.logical_time;
    activity.ended = ev.logical_time;
    activity.params = step.params;
    tree.activities.push_back(std::move(activity));

    touch_entity(in_name, EntityKind::Dataset, ev.input_digests.at(in_name),
                 std::nullopt);
    if (step.op == "store") {
      const Digest file_digest = ev.output_digests.at(out_name);
      touch_entity(out_name, EntityKind::File, file_digest,
                   "cas:" + file_digest.hex());
      tree.edges.push_back({EdgeKind::StoredIn, in_name, out_name});
      tree.edges.push_back({EdgeKind::GeneratedBy, out_name, act_id});
    } else {
      touch_entity(out_name, EntityKind::Dataset, ev.output_digests.at(out_name),
                   std::nullopt);
      tree.edges.push_back({EdgeKind::GeneratedBy, out_name, act_id});
      tree.edges.push_back({EdgeKind::Used, act_id, in_name});
    }
  }

  auto asset_it = entities.find(asset);
  if (asset_it == entities.end()) inconsistent("root entity missing from trace");
  asset_it->second.kind = EntityKind::Asset;
  tree.entities.reserve(entities.size());
  for (auto& [name, entity] : entities) tree.entities.push_back(std::move(entity));

  // Every node must be reachable from the root walking backward in time.
  std::map<std::string, std::vector<std::string>> adjacency;
  for (const ProvEdge& e : tree.edges) adjacency[e.from].push_back(e.to);
  std::set<std::string> visited;
  std::vector<std::string> frontier{tree.root};
  visited.insert(tree.root);
  while (!frontier.empty()) {
    std::string node = std::move(frontier.back());
    frontier.pop_back();
    for (const std::string& next : adjacency[node]) {
      if (visited.insert(next).second) frontier.push_back(next);
    }
  }
  const std::size_t node_count = tree.entities.size() + tree.activities.size();
  if (visited.size() != node_count) {
    inconsistent("workflow does not converge to its final entity");
  }
  return tree;
}

EventLogRecord build_event_record(const std::vector<StepEvent>& trace,
                                  const WorkflowDescription& workflow,
                                  bool embed_workflow) {
  if (trace.empty()) {
    throw Error(Errc::EmptyTrace, "cannot build an event record from no events");
  }
  EventLogRecord record;
  record.events = trace;
  std::map<std::string, Digest> produced;
  for (const StepEvent& ev : trace) {
    for (const auto& [name, digest] : ev.output_digests) produced[name] = digest;
  }
  for (const StepEvent& ev : trace) {
    for (const auto& [name, digest] : ev.input_digests) {
      if (produced.count(name) == 0) record.inputs.emplace(name, digest);
    }
  }
  record.outputs = std::move(produced);
  if (embed_workflow) {
    check_trace_against_workflow(trace, workflow);
    record.workflow = workflow;
  }
  return record;
}

namespace {

struct ActivityGraph {
  std::map<std::string, const ProvActivity*> by_id;
  std::map<std::string, std::string> generator;  // entity -> activity
  std::map<std::string, std::vector<std::string>> successors;
  std::map<std::string, int> indegree;
};

ActivityGraph activity_graph(const ProvTree& tree) {
  ActivityGraph g;
  for (const ProvActivity& a : tree.activities) {
    g.by_id.emplace(a.activity_id, &a);
    g.indegree.emplace(a.activity_id, 0);
  }
  for (const ProvEdge& e : tree.edges) {
    if (e.kind == EdgeKind::GeneratedBy) g.generator[e.from] = e.to;
  }
  auto add_edge = [&](const std::string& before, const std::string& after) {
    if (before == after) return;
    g.successors[before].push_back(after);
    ++g.indegree[after];
  };
  for (const ProvEdge& e : tree.edges) {
    if (e.kind == EdgeKind::Used) {
      // e.from used e.to: whoever generated e.to precedes e.from.
      auto gen = g.generator.find(e.to);
      if (gen != g.generator.end()) add_edge(gen->second, e.from);
    } else if (e.kind == EdgeKind::StoredIn) {
      // data stored into file: the data's generator precedes the storer.
      auto file_gen = g.generator.find(e.to);
      auto data_gen = g.generator.find(e.from);
      if (file_gen != g.generator.end() && data_gen != g.generator.end()) {
        add_edge(data_gen->second, file_gen->second);
      }
    }
  }
  return g;
}

std::vector<std::string> forward_activity_order(const ProvTree& tree) {
  ActivityGraph g = activity_graph(tree);
  auto earlier = [&](const std::string& a, const std::string& b) {
    const ProvActivity* pa = g.by_id.at(a);
    const ProvActivity* pb = g.by_id.at(b);
    if (pa->started != pb->started) return pa->started < pb->started;
    return pa->activity_id < pb->activity_id;
  };
  std::vector<std::string> ready;
  for (const auto& [id, deg] : g.indegree) {
    if (deg == 0) ready.push_back(id);
  }
  std::sort(ready.begin(), ready.end(), earlier);
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string next = ready.front();
    ready.erase(ready.begin());
    order.push_back(next);
    for (const std::string& succ : g.successors[next]) {
      if (--g.indegree[succ] == 0) {
        ready.insert(std::upper_bound(ready.begin(), ready.end(), succ, earlier),
                     succ);
      }
    }
  }
  if (order.size() != tree.activities.size()) {
    inconsistent("activity precedence contains a cycle");
  }
  return order;
}

}  // namespace

std::vector<std::string> backward_activity_order(const ProvTree& tree) {
  std::vector<std::string> order = forward_activity_order(tree);
  std::reverse(order.begin(), order.end());
  return order;
}

ProvReference store_reference(const EmbeddedProv& content, ResourceStore& store) {
  if (!content.tree && !content.events) {
    throw Error(Errc::SerializationError, "nothing to reference");
  }
  ProvReference ref;
  if (content.tree && content.events) {
    ref.standard = std::string(kStandardProvSubset) + "+" + kStandardEventLog;
  } else if (content.tree) {
    ref.standard = kStandardProvSubset;
  } else {
    ref.standard = kStandardEventLog;
  }
  ref.digest = store.put(canon::serialize(to_value(content)));
  ref.uri = "cas:" + ref.digest.hex();
  return ref;
}

std::map<std::string, std::string> attach_provenance(const Transaction& tx,
                                                     const ProvenanceRecord& record) {
  for (const auto& [key, value] : tx.state) {
    if (key.rfind(kProvPrefix, 0) == 0) {
      throw Error(Errc::ReservedKeyCollision,
                  "state already carries reserved key \"" + key + "\"");
    }
  }
  const bool needs_embedded = record.mode != ProvMode::Reference;
  const bool needs_reference = record.mode != ProvMode::Embedded;
  if (needs_embedded && !record.embedded) {
    throw Error(Errc::SerializationError,
                prov_mode_name(record.mode) + " record lacks embedded content");
  }
  if (needs_reference && !record.reference) {
    throw Error(Errc::SerializationError,
                prov_mode_name(record.mode) + " record lacks a reference");
  }
  std::map<std::string, std::string> state = tx.state;
  if (needs_embedded) {
    state[kProvEmbeddedKey] = canon::serialize(to_value(*record.embedded));
  }
  if (needs_reference) {
    state[kProvStandardKey] = record.reference->standard;
    state[kProvRefUriKey] = record.reference->uri;
    state[kProvRefDigestKey] = record.reference->digest.hex();
  }
  return state;
}

ProvenanceRecord extract_record(const Transaction& tx, const ResourceStore& store) {
  const auto embedded_it = tx.state.find(kProvEmbeddedKey);
  const auto standard_it = tx.state.find(kProvStandardKey);
  const auto uri_it = tx.state.find(kProvRefUriKey);
  const auto ref_digest_it = tx.state.find(kProvRefDigestKey);
  const bool has_embedded = embedded_it != tx.state.end();
  const bool has_reference = ref_digest_it != tx.state.end();
  if (!has_embedded && !has_reference) {
    throw Error(Errc::NoProvenance, "transaction carries no prov.* state");
  }

  ProvenanceRecord record;
  record.mode = has_embedded && has_reference ? ProvMode::Both
              : has_embedded                  ? ProvMode::Embedded
                                              : ProvMode::Reference;
  if (has_embedded) {
    record.embedded = embedded_from_value(canon::parse(embedded_it->second));
  }
  if (has_reference) {
    ProvReference ref;
    ref.standard = standard_it != tx.state.end() ? standard_it->second : "";
    ref.uri = uri_it != tx.state.end() ? uri_it->second : "";
    ref.digest = Digest::from_hex(ref_digest_it->second);
    std::optional<std::string> body = store.get(ref.digest);
    if (!body) {
      throw Error(Errc::UnresolvableReference,
                  "resource " + ref.digest.hex() + " not present in the store");
    }
    if (compute_digest(*body) != ref.digest) {
      throw Error(Errc::DigestMismatch,
                  "referenced resource does not match its recorded digest");
    }
    const bool known_standard =
        ref.standard.find(kStandardProvSubset) != std::string::npos ||
        ref.standard.find(kStandardEventLog) != std::string::npos;
    if (!has_embedded && known_standard) {
      record.embedded = embedded_from_value(canon::parse(*body));
    }
    record.reference = std::move(ref);
  }
  return record;
}

WorkflowDescription reconstruct_workflow(const ProvenanceRecord& record) {
  if (record.embedded && record.embedded->events &&
      record.embedded->events->workflow) {
    return *record.embedded->events->workflow;
  }
  if (record.embedded && record.embedded->tree) {
    const ProvTree& tree = *record.embedded->tree;
    std::map<std::string, const ProvActivity*> by_id;
    for (const ProvActivity& a : tree.activities) by_id.emplace(a.activity_id, &a);

    WorkflowDescription wf;
    try {
      for (const std::string& act_id : forward_activity_order(tree)) {
        const ProvActivity& activity = *by_id.at(act_id);
        auto roles = roles_for_op(activity.op);
        if (!roles) {
          throw Error(Errc::IrrecoverableRecord,
                      "tree holds unknown op \"" + activity.op + "\"");
        }
        Step step;
        step.op = activity.op;
        step.params = activity.params;
        std::string output;
        for (const ProvEdge& e : tree.edges) {
          if (e.kind == EdgeKind::GeneratedBy && e.to == act_id) {
            output = e.from;
            break;
          }
        }
        if (output.empty()) {
          throw Error(Errc::IrrecoverableRecord,
                      "activity " + act_id + " generated nothing");
        }
        std::string input;
        if (activity.op == "store") {
          for (const ProvEdge& e : tree.edges) {
            if (e.kind == EdgeKind::StoredIn && e.to == output) {
              input = e.from;
              break;
            }
          }
        } else {
          for (const ProvEdge& e : tree.edges) {
            if (e.kind == EdgeKind::Used && e.from == act_id) {
              input = e.to;
              break;
            }
          }
        }
        if (input.empty()) {
          throw Error(Errc::IrrecoverableRecord,
                      "activity " + act_id + " has no recoverable input");
        }
        step.inputs.emplace(roles->input, input);
        step.outputs.emplace(roles->output, output);
        wf.steps.push_back(std::move(step));
      }
      check_workflow(wf);
    } catch (const Error& e) {
      if (e.code() == Errc::IrrecoverableRecord) throw;
      throw Error(Errc::IrrecoverableRecord, e.what());
    }
    return wf;
  }
  throw Error(Errc::IrrecoverableRecord,
              "record carries neither an embedded workflow nor a tree");
}

Transaction derive_workflow(const Transaction& parent,
                            const WorkflowDescription& modified,
                            std::string initiator, std::string responder,
                            std::string asset_id) {
  check_workflow(modified);
  Transaction tx;
  tx.initiator = std::move(initiator);
  tx.responder = std::move(responder);
  tx.asset_id = std::move(asset_id);
  tx.contract_id = kWorkflowContractId;
  tx.state.emplace(kWorkflowStateKey, serialize_workflow(modified));
  tx.state.emplace(kParentTxKey, parent.tx_id.hex());
  return tx;
}

}  // namespace ledgerflow
