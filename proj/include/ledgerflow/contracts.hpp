#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ledgerflow/canon.hpp"
#include "ledgerflow/dataset.hpp"
#include "ledgerflow/digest.hpp"
#include "ledgerflow/ledger.hpp"
#include "ledgerflow/resource_store.hpp"

namespace ledgerflow {

inline constexpr const char* kWorkflowContractId = "workflow_execution";
inline constexpr const char* kWorkflowStateKey = "workflow";

struct Step {
  std::string op;  // linreg | scale | store
  std::map<std::string, std::string> inputs;   // role -> entity name
  std::map<std::string, std::string> outputs;  // role -> entity name
  std::map<std::string, std::string> params;

  bool operator==(const Step&) const = default;
};

/// A deterministic ordered list of steps; every step consumes workflow inputs
/// or outputs of earlier steps.
struct WorkflowDescription {
  std::vector<Step> steps;

  bool operator==(const WorkflowDescription&) const = default;
};

canon::Value to_value(const WorkflowDescription& workflow);
std::string serialize_workflow(const WorkflowDescription& workflow);
/// Throws Error(MalformedWorkflow) on structural problems: unknown ops,
/// missing roles, inputs that are neither workflow inputs nor earlier
/// outputs, or reuse of an output name.
WorkflowDescription parse_workflow(std::string_view text);
WorkflowDescription workflow_from_value(const canon::Value& value);
void check_workflow(const WorkflowDescription& workflow);

/// Script-level sugar: "linreg:points=B,model=A;store:data=A,file=C".
WorkflowDescription parse_workflow_expression(std::string_view expr);

/// The entity the workflow exists to produce: the data stored by the last
/// store step, else the sole output of the last step.
std::string workflow_asset(const WorkflowDescription& workflow);

/// Input/output role names of a step op ("points"/"model" for linreg, ...).
struct OpRoles {
  std::string input;
  std::string output;
};
std::optional<OpRoles> roles_for_op(const std::string& op);

struct StepEvent {
  std::int64_t step_index = 0;
  std::string op;
  std::map<std::string, Digest> input_digests;   // entity name -> digest
  std::map<std::string, Digest> output_digests;  // entity name -> digest
  std::int64_t logical_time = 0;

  bool operator==(const StepEvent&) const = default;
};

canon::Value to_value(const StepEvent& event);
StepEvent step_event_from_value(const canon::Value& value);

struct ContractResult {
  std::map<std::string, std::string> state_entries;
  std::vector<StepEvent> execution_trace;
  std::map<std::string, Digest> output_digests;  // entity name -> digest

  bool operator==(const ContractResult&) const = default;
};

canon::Value to_value(const ContractResult& result);

struct ExecutionContext {
  const DatasetStore* datasets = nullptr;
  ResourceStore* resources = nullptr;  // where store steps land
  std::int64_t base_time = 0;
};

using ContractHandler =
    std::function<ContractResult(const Transaction&, ExecutionContext&)>;
using ContractPrecondition =
    std::function<bool(const std::map<std::string, std::string>& state)>;

struct Contract {
  std::string contract_id;
  std::string description;
  ContractHandler handler;
  ContractPrecondition precondition;
};

class ContractRegistry {
 public:
  /// Throws Error(DuplicateContract) when the id is taken.
  void add(Contract contract);
  const Contract* find(const std::string& contract_id) const;
  bool has(const std::string& contract_id) const { return find(contract_id) != nullptr; }

 private:
  std::map<std::string, Contract> contracts_;
};

/// Runs the registered handler. Deterministic: equal (transaction, context)
/// inputs yield byte-identical results.
ContractResult execute_contract(const ContractRegistry& registry,
                                const std::string& contract_id,
                                const Transaction& tx, ExecutionContext& ctx);

/// Ordinary least squares over (x, y) points. Throws Error(DegenerateInput)
/// for fewer than 2 points or all-equal x.
std::pair<double, double> step_linreg(const Dataset& points);

Dataset step_scale(const Dataset& points, double factor);

/// The built-in contract executing the WorkflowDescription under the
/// "workflow" state key.
Contract make_workflow_contract();
ContractRegistry builtin_contracts();

}  // namespace ledgerflow
