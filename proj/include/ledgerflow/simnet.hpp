#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ledgerflow/access.hpp"
#include "ledgerflow/consensus.hpp"
#include "ledgerflow/contracts.hpp"
#include "ledgerflow/dataset.hpp"
#include "ledgerflow/ledger.hpp"
#include "ledgerflow/membership.hpp"
#include "ledgerflow/provenance.hpp"
#include "ledgerflow/resource_store.hpp"

namespace ledgerflow {

struct SimConfig {
  std::uint64_t seed = 42;
  int batch_size = 4;
};

/// One simulated peer: a registry snapshot, a chain replica, a contract
/// registry, a pending pool, and channel-private side stores. Peers never
/// share mutable state; everything flows through simulated messages.
struct PeerNode {
  std::string name;
  PeerIdentity identity;
  Bytes seed;
  MembershipRegistry registry;
  Chain chain;
  ContractRegistry contracts;
  std::vector<PendingTransaction> pool;
  std::map<std::string, Channel> channels;
  std::map<std::string, SideStore> side_stores;  // channel_id -> private state
  bool up = true;
};

enum class FaultKind { DropPeer, RestorePeer, SeverLink };

struct Fault {
  FaultKind kind = FaultKind::DropPeer;
  std::string peer;   // DropPeer / RestorePeer
  std::string other;  // SeverLink second endpoint
};

struct TraceEvent {
  std::int64_t time = 0;
  std::string kind;
  std::string from;
  std::string to;
  std::string detail;
};

std::string trace_line(const TraceEvent& event);

/// How a workflow proposal should attach provenance.
struct ProvOptions {
  ProvMode mode = ProvMode::Embedded;
  bool with_tree = true;
  bool with_events = true;
};

/// The member-only payload of a channel transaction: the full state the
/// public entry omits, plus any resources its execution produced.
struct PrivatePayload {
  std::map<std::string, std::string> state;
  std::map<Digest, std::string> resources;
};

/// Deterministic in-process network: a single virtual-time event queue with
/// unit link latency; messages are delivered in (deliver_time, send_time,
/// sender, sequence) order. Equal seeds and workloads give byte-identical
/// per-peer chains and traces.
class SimNetwork {
 public:
  explicit SimNetwork(SimConfig config);

  std::int64_t now() const { return clock_; }
  const SimConfig& config() const { return config_; }

  std::size_t peer_count() const { return peers_.size(); }
  std::vector<std::string> peer_names() const;
  const PeerNode& peer(const std::string& name) const;  // Error(UnknownPeer)
  const MembershipRegistry& registry() const { return canonical_registry_; }
  const std::map<std::string, Channel>& channels() const { return channels_; }
  DatasetStore& datasets() { return datasets_; }
  const DatasetStore& datasets() const { return datasets_; }
  ResourceStore& resources() { return resources_; }
  const ResourceStore& resources() const { return resources_; }
  const std::vector<TraceEvent>& trace() const { return trace_; }

  /// Admits a new peer by majority approval of the current members and
  /// spawns its node (synced from a live peer). Returns the member_id.
  std::string member_id_of(const std::string& name) const;
  std::string join_peer(const std::string& name, Role role);

  /// Channel creation broadcast to every live peer; members initialize side
  /// stores. Names are peer names.
  Channel create_channel(const std::set<std::string>& peer_names);

  /// Stamps logical/wall time onto a draft transaction, executes the
  /// contract on the proposing peer, attaches provenance built from the
  /// execution trace, signs, and freezes the tx_id. For channel
  /// transactions the full state ends up in `private_state_out` and the
  /// returned transaction carries an empty public state map.
  Transaction prepare_workflow_transaction(
      const std::string& initiator_peer, const std::string& responder_peer,
      std::string asset_id, std::string contract_id,
      std::map<std::string, std::string> base_state, const ProvOptions& prov,
      const std::optional<std::string>& channel_id,
      PrivatePayload* private_out);

  /// The consensus round: broadcast, endorsements, majority decision, and on
  /// acceptance a commit into every reachable pool. Throws
  /// Error(NotAMember) for unregistered proposers and Error(NetworkStalled)
  /// when too few peers respond for any decision to be possible.
  ConsensusResult propose_transaction(
      const std::string& proposer_peer, const Transaction& tx,
      const std::optional<PrivatePayload>& private_payload = std::nullopt);

  /// Explicit seal command delivered to all live peers.
  void seal();

  void inject_fault(const Fault& fault);

  /// Rebuilds a network around persisted state (used by the CLI derive
  /// path). Clock resumes past the newest committed timestamp.
  static SimNetwork resume(SimConfig config, MembershipRegistry registry,
                           std::vector<PeerNode> peers,
                           std::map<std::string, Channel> channels,
                           DatasetStore datasets, ResourceStore resources);

 private:
  struct MsgPropose {
    Proposal proposal;
  };
  struct MsgEndorse {
    Endorsement endorsement;
  };
  struct MsgDecide {
    Digest tx_id;
  };
  struct MsgCommit {
    Transaction tx;
    ConsensusResult result;
    std::optional<std::map<std::string, std::string>> private_state;
    std::map<Digest, std::string> private_resources;
  };
  struct MsgSeal {};
  struct MsgAdmit {
    PeerIdentity identity;
    AdmissionRecord record;
  };
  struct MsgChannel {
    Channel channel;
  };
  struct MsgSyncReq {
    std::int64_t from_index = 0;
  };
  struct MsgSyncResp {
    std::vector<Block> blocks;
    std::vector<PendingTransaction> pool;
    MembershipRegistry registry;
    std::map<std::string, Channel> channels;
    std::map<std::string, SideStore> side_stores;
  };
  using Payload = std::variant<MsgPropose, MsgEndorse, MsgDecide, MsgCommit,
                               MsgSeal, MsgAdmit, MsgChannel, MsgSyncReq,
                               MsgSyncResp>;

  struct Message {
    std::int64_t deliver_time = 0;
    std::int64_t send_time = 0;
    std::string sender;
    std::uint64_t seq = 0;
    std::string to;
    Payload payload;
  };
  struct MessageOrder {
    bool operator()(const Message& a, const Message& b) const {
      if (a.deliver_time != b.deliver_time) return a.deliver_time > b.deliver_time;
      if (a.send_time != b.send_time) return a.send_time > b.send_time;
      if (a.sender != b.sender) return a.sender > b.sender;
      return a.seq > b.seq;
    }
  };

  PeerNode& node(const std::string& name);
  bool link_up(const std::string& a, const std::string& b) const;
  void send(const std::string& from, const std::string& to, Payload payload);
  void broadcast(const std::string& from, Payload payload);
  void drain();
  void deliver(const Message& message);
  void handle_commit(PeerNode& to, const MsgCommit& msg, std::int64_t at);
  void seal_peer(PeerNode& peer, std::int64_t at);
  void start_sync(const std::string& name);
  void log(std::int64_t time, std::string kind, std::string from, std::string to,
           std::string detail);
  Bytes derive_seed(const std::string& name) const;
  std::string wall_time_at(std::int64_t logical) const;

  SimConfig config_;
  std::int64_t clock_ = 0;
  std::uint64_t next_seq_ = 0;
  std::vector<std::string> peer_order_;
  std::map<std::string, PeerNode> peers_;
  MembershipRegistry canonical_registry_;
  std::map<std::string, Channel> channels_;
  DatasetStore datasets_;
  ResourceStore resources_;
  std::set<std::pair<std::string, std::string>> severed_;
  std::priority_queue<Message, std::vector<Message>, MessageOrder> queue_;
  std::vector<TraceEvent> trace_;

  // state of the round in flight
  struct Round {
    Digest tx_id;
    std::string proposer;
    Transaction tx;
    std::optional<std::map<std::string, std::string>> private_state;
    std::map<Digest, std::string> private_resources;
    std::set<std::string> eligible;
    std::vector<Endorsement> received;
    std::optional<ConsensusResult> result;
    bool stalled = false;
  };
  std::optional<Round> round_;
};

/// Parsed workload command; `line` is the 1-based script line for error
/// reporting.
struct ScriptCommand {
  std::int64_t line = 0;
  std::string verb;
  std::vector<std::string> args;
};

std::vector<ScriptCommand> parse_script(const std::string& text);

struct RunResult {
  SimNetwork network;
  std::map<std::string, std::string> channel_aliases;  // alias -> channel_id
  std::vector<ConsensusResult> decisions;
};

/// Executes a workload script to completion on a fresh network. Script
/// problems raise Error(ScriptError) carrying the line number; quorum
/// impossibility raises Error(NetworkStalled).
RunResult run_network(const SimConfig& config, const std::string& script_text);

/// Looks up the newest transaction that created `parent_asset` on the
/// initiator's replica, reconstructs its workflow from provenance, applies
/// entity renames, and submits the derived transaction through the normal
/// consensus path. Throws Error(UnknownParent) when no such transaction is
/// committed.
ConsensusResult run_derive(
    SimNetwork& net, const std::string& parent_asset,
    const std::string& initiator_peer, const std::string& responder_peer,
    const std::string& new_asset,
    const std::vector<std::pair<std::string, std::string>>& renames);

/// The bundled five-peer demonstration workload: three workflows, one
/// derivation, one private channel transaction.
const std::string& demo_script();

}  // namespace ledgerflow
