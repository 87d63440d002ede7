#include "ledgerflow/consensus.hpp"

#include "ledgerflow/canon.hpp"
#include "ledgerflow/error.hpp"

namespace ledgerflow {

const char* reject_reason_name(RejectReason reason) {
  switch (reason) {
    case RejectReason::None: return "None";
    case RejectReason::SourceInvalid: return "SourceInvalid";
    case RejectReason::PurposeInvalid: return "PurposeInvalid";
    case RejectReason::ChannelInvalid: return "ChannelInvalid";
  }
  return "None";
}

Bytes endorsement_signing_bytes(const Digest& tx_id, VerdictKind verdict,
                                RejectReason reason) {
  canon::Value::Object obj;
  obj.emplace("reason", reject_reason_name(reason));
  obj.emplace("tx_id", tx_id.hex());
  obj.emplace("verdict", verdict == VerdictKind::Endorse ? "Endorse" : "Reject");
  return to_bytes(canon::serialize(canon::Value(std::move(obj))));
}

Endorsement make_endorsement(const Digest& tx_id, const std::string& endorser,
                             VerdictKind verdict, RejectReason reason,
                             const Bytes& endorser_seed) {
  Endorsement e;
  e.tx_id = tx_id;
  e.endorser = endorser;
  e.verdict = verdict;
  e.reason = reason;
  e.signature = crypto::sign(endorsement_signing_bytes(tx_id, verdict, reason),
                             endorser_seed);
  return e;
}

Endorsement validate_proposal(const ValidationContext& ctx, const Proposal& proposal,
                              const std::string& endorser_id,
                              const Bytes& endorser_seed) {
  const Transaction& tx = proposal.transaction;
  auto reject = [&](RejectReason reason) {
    return make_endorsement(tx.tx_id, endorser_id, VerdictKind::Reject, reason,
                            endorser_seed);
  };

  // Source: proposer is the initiator, both parties are registered, and the
  // signature verifies under the initiator's key.
  if (proposal.proposer != tx.initiator) return reject(RejectReason::SourceInvalid);
  if (ctx.registry == nullptr || !ctx.registry->has(tx.initiator) ||
      !ctx.registry->has(tx.responder)) {
    return reject(RejectReason::SourceInvalid);
  }
  if (tx.tx_id != transaction_id(tx)) return reject(RejectReason::SourceInvalid);
  if (!ctx.registry->get(tx.initiator)
           .key_handle.verify(transaction_signing_bytes(tx), tx.signature)) {
    return reject(RejectReason::SourceInvalid);
  }

  // Channel: all parties (and this endorser) must belong.
  const std::map<std::string, std::string>* effective_state = &tx.state;
  if (tx.channel_id) {
    if (ctx.channels == nullptr) return reject(RejectReason::ChannelInvalid);
    auto it = ctx.channels->find(*tx.channel_id);
    if (it == ctx.channels->end()) return reject(RejectReason::ChannelInvalid);
    const Channel& channel = it->second;
    if (!channel.has_member(tx.initiator) || !channel.has_member(tx.responder) ||
        !channel.has_member(endorser_id)) {
      return reject(RejectReason::ChannelInvalid);
    }
    if (proposal.private_state) effective_state = &*proposal.private_state;
  }

  // Purpose: the contract is registered here and its precondition holds.
  if (ctx.contracts == nullptr || !ctx.contracts->has(tx.contract_id)) {
    return reject(RejectReason::PurposeInvalid);
  }
  const Contract* contract = ctx.contracts->find(tx.contract_id);
  if (contract->precondition && !contract->precondition(*effective_state)) {
    return reject(RejectReason::PurposeInvalid);
  }

  return make_endorsement(tx.tx_id, endorser_id, VerdictKind::Endorse,
                          RejectReason::None, endorser_seed);
}

ConsensusResult decide_among(const std::vector<Endorsement>& endorsements,
                             const std::set<std::string>& eligible,
                             const MembershipRegistry& registry) {
  ConsensusResult result;
  result.quorum_size = static_cast<std::int64_t>(eligible.size() / 2 + 1);
  std::set<std::string> seen;
  std::int64_t endorse_count = 0;
  for (const Endorsement& e : endorsements) {
    if (!seen.insert(e.endorser).second) {
      throw Error(Errc::DuplicateEndorser,
                  "endorser " + e.endorser + " voted twice");
    }
    if (!result.endorsements.empty() && e.tx_id != result.endorsements.front().tx_id) {
      throw Error(Errc::DuplicateEndorser, "endorsements span several transactions");
    }
    result.tx_id = e.tx_id;
    result.endorsements.push_back(e);
    if (eligible.count(e.endorser) == 0 || !registry.has(e.endorser)) {
      continue;  // not part of this electorate
    }
    const Bytes message = endorsement_signing_bytes(e.tx_id, e.verdict, e.reason);
    if (!registry.get(e.endorser).key_handle.verify(message, e.signature)) {
      continue;  // forged or corrupted vote never counts
    }
    if (e.verdict == VerdictKind::Endorse) ++endorse_count;
  }
  result.accepted = endorse_count >= result.quorum_size;
  return result;
}

ConsensusResult decide(const std::vector<Endorsement>& endorsements,
                       const MembershipRegistry& registry) {
  std::set<std::string> eligible;
  for (const auto& [id, identity] : registry.members()) eligible.insert(id);
  return decide_among(endorsements, eligible, registry);
}

}  // namespace ledgerflow
