#include "ledgerflow/access.hpp"

#include <algorithm>

#include "ledgerflow/canon.hpp"
#include "ledgerflow/error.hpp"
#include "ledgerflow/provenance.hpp"

namespace ledgerflow {

std::string channel_id_of(const std::set<std::string>& members,
                          std::int64_t created_time) {
  canon::Value::Object obj;
  canon::Value::List ids;
  for (const std::string& m : members) ids.emplace_back(m);
  obj.emplace("created", created_time);
  obj.emplace("members", std::move(ids));
  return compute_digest(canon::serialize(canon::Value(std::move(obj)))).hex();
}

Channel create_channel(const std::set<std::string>& members,
                       const MembershipRegistry& registry,
                       std::int64_t created_time) {
  if (members.size() < 2) {
    throw Error(Errc::TooFewMembers, "a channel needs at least 2 members");
  }
  for (const std::string& m : members) {
    if (!registry.has(m)) {
      throw Error(Errc::UnknownMember, "channel member " + m + " not registered");
    }
  }
  Channel channel;
  channel.members = members;
  channel.created_time = created_time;
  channel.channel_id = channel_id_of(members, created_time);
  return channel;
}

bool Query::matches(const Transaction& tx) const {
  if (initiator && tx.initiator != *initiator) return false;
  if (responder && tx.responder != *responder) return false;
  if (contract_id && tx.contract_id != *contract_id) return false;
  if (has_channel && tx.channel_id.has_value() != *has_channel) return false;
  if (state_key && tx.state.count(*state_key) == 0) return false;
  if (time_min && tx.logical_time < *time_min) return false;
  if (time_max && tx.logical_time > *time_max) return false;
  return true;
}

Query parse_query(const std::vector<std::string>& terms) {
  Query q;
  auto parse_bound = [](const std::string& term, std::size_t from) {
    const std::string digits = term.substr(from);
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(Errc::ParseError, "time bound must be a non-negative integer");
    }
    return static_cast<std::int64_t>(std::stoll(digits));
  };
  for (const std::string& term : terms) {
    auto starts = [&](std::string_view prefix) {
      return term.rfind(prefix, 0) == 0;
    };
    if (starts("time>=")) {
      q.time_min = parse_bound(term, 6);
    } else if (starts("time<=")) {
      q.time_max = parse_bound(term, 6);
    } else if (starts("from=")) {
      q.initiator = term.substr(5);
    } else if (starts("to=")) {
      q.responder = term.substr(3);
    } else if (starts("contract=")) {
      q.contract_id = term.substr(9);
    } else if (starts("channel=")) {
      const std::string v = term.substr(8);
      if (v == "yes") {
        q.has_channel = true;
      } else if (v == "no") {
        q.has_channel = false;
      } else {
        throw Error(Errc::ParseError, "channel filter must be yes or no");
      }
    } else if (starts("has=")) {
      q.state_key = term.substr(4);
    } else {
      throw Error(Errc::ParseError, "unknown query term \"" + term + "\"");
    }
  }
  return q;
}

std::optional<Transaction> get_transaction(const Chain& chain, const Digest& tx_id) {
  for (const Block& block : chain.blocks) {
    for (const Transaction& tx : block.transactions) {
      if (tx.tx_id == tx_id) return tx;
    }
  }
  return std::nullopt;
}

std::vector<Transaction> walk(const Chain& chain, WalkDirection direction,
                              const Query& query) {
  std::vector<Transaction> out;
  for (const Block& block : chain.blocks) {
    for (const Transaction& tx : block.transactions) {
      if (query.matches(tx)) out.push_back(tx);
    }
  }
  std::sort(out.begin(), out.end(), [](const Transaction& a, const Transaction& b) {
    if (a.logical_time != b.logical_time) return a.logical_time < b.logical_time;
    return a.tx_id < b.tx_id;
  });
  if (direction == WalkDirection::Backward) {
    std::reverse(out.begin(), out.end());
  }
  return out;
}

Lineage trace_lineage(const Chain& chain, const Digest& tx_id) {
  std::optional<Transaction> current = get_transaction(chain, tx_id);
  if (!current) {
    throw Error(Errc::UnknownTransaction,
                "transaction " + tx_id.hex() + " is not committed");
  }
  Lineage lineage;
  std::set<Digest> visited{tx_id};
  while (true) {
    auto it = current->state.find(kParentTxKey);
    if (it == current->state.end()) break;
    const Digest parent_id = Digest::from_hex(it->second);
    if (visited.count(parent_id) != 0) {
      throw Error(Errc::CyclicLineage,
                  "lineage revisits " + parent_id.hex());
    }
    visited.insert(parent_id);
    std::optional<Transaction> parent = get_transaction(chain, parent_id);
    if (!parent) {
      lineage.unresolved_tail = parent_id;
      break;
    }
    lineage.ancestors.push_back(parent_id);
    current = std::move(parent);
  }
  return lineage;
}

}  // namespace ledgerflow
