#include "ledgerflow/contracts.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "ledgerflow/error.hpp"

namespace ledgerflow {

namespace {

constexpr std::size_t kMaxSteps = 10;

struct OpSpec {
  const char* input_role;
  const char* output_role;
  const char* required_param;  // nullptr if none
};

const OpSpec* op_spec(const std::string& op) {
  static const std::map<std::string, OpSpec> kOps = {
      {"linreg", {"points", "model", nullptr}},
      {"scale", {"points", "scaled", "factor"}},
      {"store", {"data", "file", nullptr}},
  };
  auto it = kOps.find(op);
  return it == kOps.end() ? nullptr : &it->second;
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(Errc::MalformedWorkflow, what);
}

double parse_factor(const std::string& text) {
  const char* s = text.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0') malformed("factor \"" + text + "\" is not a number");
  return v;
}

canon::Value string_map_value(const std::map<std::string, std::string>& m) {
  canon::Value::Object obj;
  for (const auto& [k, v] : m) obj.emplace(k, v);
  return canon::Value(std::move(obj));
}

std::map<std::string, std::string> string_map_from_value(const canon::Value& v) {
  std::map<std::string, std::string> out;
  for (const auto& [k, item] : v.as_object()) out.emplace(k, item.as_string());
  return out;
}

canon::Value digest_map_value(const std::map<std::string, Digest>& m) {
  canon::Value::Object obj;
  for (const auto& [k, d] : m) obj.emplace(k, d.hex());
  return canon::Value(std::move(obj));
}

std::map<std::string, Digest> digest_map_from_value(const canon::Value& v) {
  std::map<std::string, Digest> out;
  for (const auto& [k, item] : v.as_object()) {
    out.emplace(k, Digest::from_hex(item.as_string()));
  }
  return out;
}

}  // namespace

canon::Value to_value(const WorkflowDescription& workflow) {
  canon::Value::List steps;
  steps.reserve(workflow.steps.size());
  for (const Step& step : workflow.steps) {
    canon::Value::Object obj;
    obj.emplace("inputs", string_map_value(step.inputs));
    obj.emplace("op", step.op);
    obj.emplace("outputs", string_map_value(step.outputs));
    obj.emplace("params", string_map_value(step.params));
    steps.emplace_back(std::move(obj));
  }
  canon::Value::Object root;
  root.emplace("steps", std::move(steps));
  return canon::Value(std::move(root));
}

std::string serialize_workflow(const WorkflowDescription& workflow) {
  return canon::serialize(to_value(workflow));
}

WorkflowDescription workflow_from_value(const canon::Value& value) {
  WorkflowDescription wf;
  for (const canon::Value& sv : value.at("steps").as_list()) {
    Step step;
    step.op = sv.at("op").as_string();
    step.inputs = string_map_from_value(sv.at("inputs"));
    step.outputs = string_map_from_value(sv.at("outputs"));
    step.params = string_map_from_value(sv.at("params"));
    wf.steps.push_back(std::move(step));
  }
  return wf;
}

void check_workflow(const WorkflowDescription& workflow) {
  if (workflow.steps.empty()) malformed("workflow has no steps");
  if (workflow.steps.size() > kMaxSteps) {
    malformed("workflow exceeds " + std::to_string(kMaxSteps) + " steps");
  }
  std::set<std::string> produced;
  for (std::size_t k = 0; k < workflow.steps.size(); ++k) {
    const Step& step = workflow.steps[k];
    const OpSpec* spec = op_spec(step.op);
    if (spec == nullptr) malformed("unknown op \"" + step.op + "\"");
    if (step.inputs.size() != 1 || step.inputs.count(spec->input_role) == 0) {
      malformed("step " + std::to_string(k) + " needs exactly input role \"" +
                spec->input_role + "\"");
    }
    if (step.outputs.size() != 1 || step.outputs.count(spec->output_role) == 0) {
      malformed("step " + std::to_string(k) + " needs exactly output role \"" +
                spec->output_role + "\"");
    }
    if (spec->required_param != nullptr) {
      auto it = step.params.find(spec->required_param);
      if (it == step.params.end()) {
        malformed("step " + std::to_string(k) + " lacks param \"" +
                  spec->required_param + "\"");
      }
      parse_factor(it->second);
    }
    const std::string& in_name = step.inputs.begin()->second;
    const std::string& out_name = step.outputs.begin()->second;
    if (in_name.empty() || out_name.empty()) {
      malformed("step " + std::to_string(k) + " has an empty entity name");
    }
    if (in_name == out_name) {
      malformed("step " + std::to_string(k) + " output shadows its input");
    }
    if (!produced.insert(out_name).second) {
      malformed("entity \"" + out_name + "\" produced twice");
    }
  }
  // Topology: an input must come from a workflow input or an earlier step.
  std::set<std::string> available;
  for (std::size_t k = 0; k < workflow.steps.size(); ++k) {
    const std::string& in_name = workflow.steps[k].inputs.begin()->second;
    if (produced.count(in_name) != 0 && available.count(in_name) == 0) {
      malformed("step " + std::to_string(k) + " consumes \"" + in_name +
                "\" before it is produced");
    }
    available.insert(workflow.steps[k].outputs.begin()->second);
  }
}

WorkflowDescription parse_workflow(std::string_view text) {
  WorkflowDescription wf;
  try {
    wf = workflow_from_value(canon::parse(text));
  } catch (const Error& e) {
    if (e.code() == Errc::MalformedWorkflow) throw;
    malformed(e.what());
  }
  check_workflow(wf);
  return wf;
}

WorkflowDescription parse_workflow_expression(std::string_view expr) {
  WorkflowDescription wf;
  std::size_t pos = 0;
  while (pos <= expr.size()) {
    std::size_t sep = expr.find(';', pos);
    if (sep == std::string_view::npos) sep = expr.size();
    std::string_view part = expr.substr(pos, sep - pos);
    pos = sep + 1;
    if (part.empty()) {
      if (pos > expr.size()) break;
      malformed("empty step in workflow expression");
    }
    std::size_t colon = part.find(':');
    if (colon == std::string_view::npos) malformed("step lacks ':' in expression");
    Step step;
    step.op = std::string(part.substr(0, colon));
    const OpSpec* spec = op_spec(step.op);
    if (spec == nullptr) malformed("unknown op \"" + step.op + "\"");
    std::string_view rest = part.substr(colon + 1);
    std::size_t p = 0;
    while (p < rest.size()) {
      std::size_t comma = rest.find(',', p);
      if (comma == std::string_view::npos) comma = rest.size();
      std::string_view pair = rest.substr(p, comma - p);
      p = comma + 1;
      std::size_t eq = pair.find('=');
      if (eq == std::string_view::npos) malformed("expected key=value in expression");
      std::string key(pair.substr(0, eq));
      std::string value(pair.substr(eq + 1));
      if (key == spec->input_role) {
        step.inputs.emplace(key, value);
      } else if (key == spec->output_role) {
        step.outputs.emplace(key, value);
      } else {
        step.params.emplace(key, value);
      }
    }
    wf.steps.push_back(std::move(step));
    if (sep == expr.size()) break;
  }
  check_workflow(wf);
  return wf;
}

std::string workflow_asset(const WorkflowDescription& workflow) {
  if (workflow.steps.empty()) malformed("workflow has no steps");
  for (auto it = workflow.steps.rbegin(); it != workflow.steps.rend(); ++it) {
    if (it->op == "store") return it->inputs.at("data");
  }
  return workflow.steps.back().outputs.begin()->second;
}

std::optional<OpRoles> roles_for_op(const std::string& op) {
  const OpSpec* spec = op_spec(op);
  if (spec == nullptr) return std::nullopt;
  return OpRoles{spec->input_role, spec->output_role};
}

canon::Value to_value(const StepEvent& event) {
  canon::Value::Object obj;
  obj.emplace("input_digests", digest_map_value(event.input_digests));
  obj.emplace("logical_time", event.logical_time);
  obj.emplace("op", event.op);
  obj.emplace("output_digests", digest_map_value(event.output_digests));
  obj.emplace("step_index", event.step_index);
  return canon::Value(std::move(obj));
}

StepEvent step_event_from_value(const canon::Value& value) {
  StepEvent ev;
  ev.input_digests = digest_map_from_value(value.at("input_digests"));
  ev.logical_time = value.at("logical_time").as_int();
  ev.op = value.at("op").as_string();
  ev.output_digests = digest_map_from_value(value.at("output_digests"));
  ev.step_index = value.at("step_index").as_int();
  return ev;
}

canon::Value to_value(const ContractResult& result) {
  canon::Value::Object obj;
  canon::Value::List trace;
  trace.reserve(result.execution_trace.size());
  for (const StepEvent& ev : result.execution_trace) trace.push_back(to_value(ev));
  obj.emplace("execution_trace", std::move(trace));
  obj.emplace("output_digests", digest_map_value(result.output_digests));
  obj.emplace("state_entries", string_map_value(result.state_entries));
  return canon::Value(std::move(obj));
}

void ContractRegistry::add(Contract contract) {
  if (contracts_.count(contract.contract_id) != 0) {
    throw Error(Errc::DuplicateContract,
                "contract \"" + contract.contract_id + "\" already registered");
  }
  contracts_.emplace(contract.contract_id, std::move(contract));
}

const Contract* ContractRegistry::find(const std::string& contract_id) const {
  auto it = contracts_.find(contract_id);
  return it == contracts_.end() ? nullptr : &it->second;
}

ContractResult execute_contract(const ContractRegistry& registry,
                                const std::string& contract_id,
                                const Transaction& tx, ExecutionContext& ctx) {
  const Contract* contract = registry.find(contract_id);
  if (contract == nullptr) {
    throw Error(Errc::ContractNotFound,
                "contract \"" + contract_id + "\" not registered");
  }
  return contract->handler(tx, ctx);
}

std::pair<double, double> step_linreg(const Dataset& points) {
  if (points.size() < 2) {
    throw Error(Errc::DegenerateInput, "need at least 2 points");
  }
  double min_x = points.front().x;
  double max_x = points.front().x;
  for (const DataPoint& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
  }
  if (min_x == max_x) {
    throw Error(Errc::DegenerateInput, "all x values are equal");
  }
  const double n = static_cast<double>(points.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const DataPoint& p : points) {
    mean_x += p.x;
    mean_y += p.y;
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const DataPoint& p : points) {
    const double dx = p.x - mean_x;
    sxy += dx * (p.y - mean_y);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_x;
  return {slope, intercept};
}

Dataset step_scale(const Dataset& points, double factor) {
  Dataset out;
  out.reserve(points.size());
  for (const DataPoint& p : points) out.push_back({p.x, p.y * factor});
  return out;
}

namespace {

ContractResult run_workflow(const Transaction& tx, ExecutionContext& ctx) {
  auto wf_it = tx.state.find(kWorkflowStateKey);
  if (wf_it == tx.state.end()) {
    malformed("transaction state lacks \"" + std::string(kWorkflowStateKey) +
              "\" key");
  }
  const WorkflowDescription wf = parse_workflow(wf_it->second);

  ContractResult result;
  std::map<std::string, Dataset> scratch;

  auto lookup = [&](const std::string& name, std::int64_t step) -> const Dataset& {
    if (auto it = scratch.find(name); it != scratch.end()) return it->second;
    if (ctx.datasets != nullptr) {
      if (const Dataset* ds = ctx.datasets->find(name)) return *ds;
    }
    throw Error(Errc::StepFailure, "dataset \"" + name + "\" not found", step);
  };

  for (std::size_t k = 0; k < wf.steps.size(); ++k) {
    const Step& step = wf.steps[k];
    const auto idx = static_cast<std::int64_t>(k);
    StepEvent ev;
    ev.step_index = idx;
    ev.op = step.op;
    ev.logical_time = ctx.base_time + idx;

    const std::string& in_name = step.inputs.begin()->second;
    const std::string& out_name = step.outputs.begin()->second;
    const Dataset& input = lookup(in_name, idx);
    ev.input_digests.emplace(in_name, dataset_digest(input));

    if (step.op == "linreg") {
      double slope = 0.0;
      double intercept = 0.0;
      try {
        std::tie(slope, intercept) = step_linreg(input);
      } catch (const Error& e) {
        throw Error(Errc::StepFailure, e.what(), idx);
      }
      Dataset model{{slope, intercept}};
      const Digest d = dataset_digest(model);
      scratch[out_name] = std::move(model);
      ev.output_digests.emplace(out_name, d);
      result.output_digests[out_name] = d;
      result.state_entries["out." + out_name + ".slope"] = format_real(slope);
      result.state_entries["out." + out_name + ".intercept"] = format_real(intercept);
      result.state_entries["out." + out_name + ".digest"] = d.hex();
    } else if (step.op == "scale") {
      const double factor = parse_factor(step.params.at("factor"));
      Dataset scaled = step_scale(input, factor);
      const Digest d = dataset_digest(scaled);
      scratch[out_name] = std::move(scaled);
      ev.output_digests.emplace(out_name, d);
      result.output_digests[out_name] = d;
      result.state_entries["out." + out_name + ".digest"] = d.hex();
    } else if (step.op == "store") {
      if (ctx.resources == nullptr) {
        throw Error(Errc::StepFailure, "no resource store attached", idx);
      }
      const Digest d = ctx.resources->put(encode_dataset(input));
      ev.output_digests.emplace(out_name, d);
      result.output_digests[out_name] = d;
      result.output_digests[in_name] = d;  // the stored asset itself
      result.state_entries["out." + out_name + ".digest"] = d.hex();
    } else {
      throw Error(Errc::StepFailure, "unknown op \"" + step.op + "\"", idx);
    }
    result.execution_trace.push_back(std::move(ev));
  }
  return result;
}

}  // namespace

Contract make_workflow_contract() {
  Contract c;
  c.contract_id = kWorkflowContractId;
  c.description = "executes the workflow serialized under the \"workflow\" state key";
  c.handler = run_workflow;
  c.precondition = [](const std::map<std::string, std::string>& state) {
    auto it = state.find(kWorkflowStateKey);
    if (it == state.end()) return false;
    try {
      parse_workflow(it->second);
      return true;
    } catch (const Error&) {
      return false;
    }
  };
  return c;
}

ContractRegistry builtin_contracts() {
  ContractRegistry registry;
  registry.add(make_workflow_contract());
  return registry;
}

}  // namespace ledgerflow
