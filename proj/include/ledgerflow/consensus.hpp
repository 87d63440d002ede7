#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ledgerflow/access.hpp"
#include "ledgerflow/contracts.hpp"
#include "ledgerflow/digest.hpp"
#include "ledgerflow/ledger.hpp"
#include "ledgerflow/membership.hpp"

namespace ledgerflow {

/// A pre-consensus transaction: tx_id and signature populated, acceptance
/// still undecided. For channel transactions the private payload rides along
/// to members only; the transaction itself carries an empty state map.
struct Proposal {
  Transaction transaction;
  std::string proposer;  // == transaction.initiator
  std::optional<std::map<std::string, std::string>> private_state;
};

enum class VerdictKind { Endorse, Reject };

enum class RejectReason { None, SourceInvalid, PurposeInvalid, ChannelInvalid };
const char* reject_reason_name(RejectReason reason);

struct Endorsement {
  Digest tx_id{};
  std::string endorser;
  VerdictKind verdict = VerdictKind::Reject;
  RejectReason reason = RejectReason::None;
  Bytes signature;  // over (tx_id, verdict, reason)
};

Bytes endorsement_signing_bytes(const Digest& tx_id, VerdictKind verdict,
                                RejectReason reason);
Endorsement make_endorsement(const Digest& tx_id, const std::string& endorser,
                             VerdictKind verdict, RejectReason reason,
                             const Bytes& endorser_seed);

struct ConsensusResult {
  Digest tx_id{};
  bool accepted = false;
  std::vector<Endorsement> endorsements;
  std::int64_t quorum_size = 0;
};

/// What a peer consults when judging a proposal.
struct ValidationContext {
  const MembershipRegistry* registry = nullptr;
  const ContractRegistry* contracts = nullptr;
  const std::map<std::string, Channel>* channels = nullptr;
};

/// The source/purpose/channel check. Rejections are verdicts, not errors.
Endorsement validate_proposal(const ValidationContext& ctx, const Proposal& proposal,
                              const std::string& endorser_id,
                              const Bytes& endorser_seed);

/// Majority decision over the whole registry: accepted iff valid Endorse
/// verdicts strictly exceed floor(|members| / 2). Endorsements failing
/// signature or membership checks are not counted; duplicates raise
/// Error(DuplicateEndorser). Pure function of its inputs.
ConsensusResult decide(const std::vector<Endorsement>& endorsements,
                       const MembershipRegistry& registry);

/// Same rule over an explicit electorate (used for channel-private
/// transactions, where only channel members may judge).
ConsensusResult decide_among(const std::vector<Endorsement>& endorsements,
                             const std::set<std::string>& eligible,
                             const MembershipRegistry& registry);

}  // namespace ledgerflow
