#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ledgerflow/canon.hpp"
#include "ledgerflow/contracts.hpp"
#include "ledgerflow/digest.hpp"
#include "ledgerflow/ledger.hpp"
#include "ledgerflow/resource_store.hpp"

namespace ledgerflow {

// Reserved transaction-state keys written by attach_provenance / derivation.
inline constexpr const char* kProvPrefix = "prov.";
inline constexpr const char* kProvEmbeddedKey = "prov.embedded";
inline constexpr const char* kProvStandardKey = "prov.standard";
inline constexpr const char* kProvRefUriKey = "prov.ref.uri";
inline constexpr const char* kProvRefDigestKey = "prov.ref.digest";
inline constexpr const char* kParentTxKey = "parent.txid";

inline constexpr const char* kStandardProvSubset = "PROV-DM-SUBSET";
inline constexpr const char* kStandardEventLog = "EVENT-LOG-V1";

enum class EntityKind { Dataset, File, Asset };
std::string entity_kind_name(EntityKind kind);
EntityKind entity_kind_from_name(std::string_view name);

struct ProvEntity {
  std::string entity_id;
  EntityKind kind = EntityKind::Dataset;
  std::optional<Digest> digest;
  std::optional<std::string> location;

  bool operator==(const ProvEntity&) const = default;
};

struct ProvActivity {
  std::string activity_id;
  std::string op;
  std::int64_t started = 0;
  std::int64_t ended = 0;
  std::map<std::string, std::string> params;  // empty for parameterless ops

  bool operator==(const ProvActivity&) const = default;
};

enum class EdgeKind { Used, GeneratedBy, StoredIn };
std::string edge_kind_name(EdgeKind kind);
EdgeKind edge_kind_from_name(std::string_view name);

/// Edges point backward in time: from the later node to the earlier one.
struct ProvEdge {
  EdgeKind kind = EdgeKind::Used;
  std::string from;
  std::string to;

  bool operator==(const ProvEdge&) const = default;
};

/// PROV-style graph rooted in the final created entity.
struct ProvTree {
  std::string root;
  std::vector<ProvEntity> entities;
  std::vector<ProvActivity> activities;
  std::vector<ProvEdge> edges;

  bool operator==(const ProvTree&) const = default;
};

/// Time-forward "log everything" record.
struct EventLogRecord {
  std::vector<StepEvent> events;
  std::map<std::string, Digest> inputs;   // workflow input entities
  std::map<std::string, Digest> outputs;  // produced entities
  std::optional<WorkflowDescription> workflow;

  bool operator==(const EventLogRecord&) const = default;
};

enum class ProvMode { Embedded, Reference, Both };
std::string prov_mode_name(ProvMode mode);

struct EmbeddedProv {
  std::optional<ProvTree> tree;
  std::optional<EventLogRecord> events;

  bool operator==(const EmbeddedProv&) const = default;
};

struct ProvReference {
  std::string standard;
  std::string uri;  // "cas:<hexdigest>" for the built-in store
  Digest digest{};

  bool operator==(const ProvReference&) const = default;
};

struct ProvenanceRecord {
  ProvMode mode = ProvMode::Embedded;
  std::optional<EmbeddedProv> embedded;
  std::optional<ProvReference> reference;

  bool operator==(const ProvenanceRecord&) const = default;
};

canon::Value to_value(const ProvTree& tree);
ProvTree tree_from_value(const canon::Value& value);
canon::Value to_value(const EventLogRecord& record);
EventLogRecord event_record_from_value(const canon::Value& value);
canon::Value to_value(const EmbeddedProv& embedded);
EmbeddedProv embedded_from_value(const canon::Value& value);

/// Builds the backward-in-time graph for a completed execution: one activity
/// per step, used/generatedBy/storedIn edges, rooted at the workflow's final
/// created entity. Throws Error(InconsistentTrace) when the trace does not
/// match the workflow or the graph cannot be rooted.
ProvTree build_tree_record(const std::vector<StepEvent>& trace,
                           const WorkflowDescription& workflow);

/// Time-forward event record; optionally embeds the whole workflow. Throws
/// Error(EmptyTrace) for an empty trace.
EventLogRecord build_event_record(const std::vector<StepEvent>& trace,
                                  const WorkflowDescription& workflow,
                                  bool embed_workflow);

/// Activities in backward (reverse-topological) order; the reverse of the
/// event-log order for a consistent pair of records.
std::vector<std::string> backward_activity_order(const ProvTree& tree);

/// Serializes the embedded content and parks it in the content-addressed
/// store, returning the descriptor to attach.
ProvReference store_reference(const EmbeddedProv& content, ResourceStore& store);

/// Returns tx.state extended with the record's `prov.*` keys. Throws
/// Error(ReservedKeyCollision) if the state already carries any.
std::map<std::string, std::string> attach_provenance(const Transaction& tx,
                                                     const ProvenanceRecord& record);

/// Inverse of attach_provenance: parses embedded content and/or fetches and
/// digest-checks the referenced resource. Both mode prefers embedded content
/// and cross-checks the reference digest.
ProvenanceRecord extract_record(const Transaction& tx, const ResourceStore& store);

/// A workflow that re-executes step-for-step like the original: the embedded
/// copy when the event log carries one, otherwise rebuilt from the tree.
/// Throws Error(IrrecoverableRecord) when neither suffices.
WorkflowDescription reconstruct_workflow(const ProvenanceRecord& record);

/// A draft transaction whose state points back at the parent through
/// "parent.txid" and carries the modified workflow. Sign and propose through
/// the normal consensus path.
Transaction derive_workflow(const Transaction& parent,
                            const WorkflowDescription& modified,
                            std::string initiator, std::string responder,
                            std::string asset_id);

}  // namespace ledgerflow
