#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ledgerflow/digest.hpp"
#include "ledgerflow/ledger.hpp"
#include "ledgerflow/membership.hpp"
#include "ledgerflow/resource_store.hpp"

namespace ledgerflow {

/// A private subgroup of members. The side store holding private state lives
/// on the member nodes, never in the public chain.
struct Channel {
  std::string channel_id;
  std::set<std::string> members;
  std::int64_t created_time = 0;

  bool has_member(const std::string& member_id) const {
    return members.count(member_id) != 0;
  }
};

std::string channel_id_of(const std::set<std::string>& members,
                          std::int64_t created_time);

/// Throws Error(TooFewMembers) below two members and Error(UnknownMember)
/// for unregistered ids.
Channel create_channel(const std::set<std::string>& members,
                       const MembershipRegistry& registry,
                       std::int64_t created_time);

/// Full private state of one channel, held only by its members: transaction
/// state maps keyed by tx_id hex, plus member-only resources.
struct SideStore {
  std::map<std::string, std::map<std::string, std::string>> tx_state;
  ResourceStore resources;
};

/// Conjunctive transaction filter.
struct Query {
  std::optional<std::string> initiator;
  std::optional<std::string> responder;
  std::optional<std::string> contract_id;
  std::optional<bool> has_channel;
  std::optional<std::string> state_key;  // key presence
  std::optional<std::int64_t> time_min;  // inclusive
  std::optional<std::int64_t> time_max;  // inclusive

  bool matches(const Transaction& tx) const;
};

/// CLI expression: space-separated conjunctions of
///   from=<id> to=<id> contract=<id> channel=yes|no has=<key>
///   time>=<n> time<=<n>
Query parse_query(const std::vector<std::string>& terms);

enum class WalkDirection { Forward, Backward };

std::optional<Transaction> get_transaction(const Chain& chain, const Digest& tx_id);

/// Matching transactions ordered by (logical_time, tx_id), ascending for
/// forward walks and descending for backward walks.
std::vector<Transaction> walk(const Chain& chain, WalkDirection direction,
                              const Query& query);

/// Ancestors of a transaction, child-to-eldest, via "parent.txid" state
/// entries. A parent id that is not committed ends the walk and is reported
/// as the unresolved tail.
struct Lineage {
  std::vector<Digest> ancestors;
  std::optional<Digest> unresolved_tail;
};

Lineage trace_lineage(const Chain& chain, const Digest& tx_id);

}  // namespace ledgerflow
