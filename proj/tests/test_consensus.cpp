#include <doctest.h>

#include <set>

#include "ledgerflow/consensus.hpp"
#include "ledgerflow/error.hpp"
#include "ledgerflow/simnet.hpp"
#include "support.hpp"

using namespace ledgerflow;
using testkit::TestNet;

TEST_SUITE_BEGIN("consensus");

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::IoError;
}

std::vector<Endorsement> make_votes(const TestNet& net, const Digest& tx_id,
                                    int endorse, int reject) {
  std::vector<Endorsement> votes;
  int used = 0;
  for (int i = 0; i < endorse; ++i, ++used) {
    votes.push_back(make_endorsement(tx_id, net.ids[static_cast<std::size_t>(used)],
                                     VerdictKind::Endorse, RejectReason::None,
                                     net.seeds.at(net.ids[static_cast<std::size_t>(used)])));
  }
  for (int i = 0; i < reject; ++i, ++used) {
    votes.push_back(make_endorsement(tx_id, net.ids[static_cast<std::size_t>(used)],
                                     VerdictKind::Reject, RejectReason::PurposeInvalid,
                                     net.seeds.at(net.ids[static_cast<std::size_t>(used)])));
  }
  return votes;
}

}  // namespace

TEST_CASE("decide is an exact majority threshold for sizes 1 through 7") {
  const Digest tx_id = compute_digest("quorum subject");
  for (int n = 1; n <= 7; ++n) {
    TestNet net = testkit::make_members(n, "dec" + std::to_string(n));
    for (int endorse = 0; endorse <= n; ++endorse) {
      const auto votes = make_votes(net, tx_id, endorse, n - endorse);
      const ConsensusResult result = decide(votes, net.registry);
      CHECK(result.accepted == (endorse > n / 2));
      CHECK(result.quorum_size == n / 2 + 1);
      CHECK(result.endorsements.size() == static_cast<std::size_t>(n));
      // pure function: same inputs, same answer
      CHECK(decide(votes, net.registry).accepted == result.accepted);
    }
  }
}

TEST_CASE("duplicate endorsers are refused") {
  TestNet net = testkit::make_members(3, "dup");
  const Digest tx_id = compute_digest("x");
  auto votes = make_votes(net, tx_id, 2, 0);
  votes.push_back(votes.front());
  CHECK(code_of([&] { decide(votes, net.registry); }) == Errc::DuplicateEndorser);
}

TEST_CASE("forged or foreign endorsements never count") {
  TestNet net = testkit::make_members(5, "forge");
  const Digest tx_id = compute_digest("y");
  auto votes = make_votes(net, tx_id, 2, 0);  // 2 genuine, below quorum of 3

  // a vote whose signature does not verify
  Endorsement fake = make_endorsement(tx_id, net.ids[2], VerdictKind::Endorse,
                                      RejectReason::None, net.seeds.at(net.ids[2]));
  fake.signature[0] ^= 1;
  votes.push_back(fake);

  // a vote from outside the electorate
  const auto outsider = generate_identity(Role::CLIENT, testkit::test_seed("out"), "out");
  votes.push_back(make_endorsement(tx_id, outsider.identity.member_id,
                                   VerdictKind::Endorse, RejectReason::None,
                                   outsider.seed));

  const ConsensusResult result = decide(votes, net.registry);
  CHECK_FALSE(result.accepted);
  // quorum monotonicity: a genuine third vote flips it
  votes.push_back(make_endorsement(tx_id, net.ids[3], VerdictKind::Endorse,
                                   RejectReason::None, net.seeds.at(net.ids[3])));
  CHECK(decide(votes, net.registry).accepted);
}

TEST_CASE("validate_proposal applies the source, purpose, and channel gates") {
  TestNet net = testkit::make_members(3, "gate");
  ContractRegistry contracts = builtin_contracts();
  Contract open_door;
  open_door.contract_id = "audit_log";
  open_door.description = "no-op contract with no precondition";
  open_door.handler = [](const Transaction&, ExecutionContext&) {
    return ContractResult{};
  };
  contracts.add(open_door);
  std::map<std::string, Channel> channels;
  ValidationContext ctx{&net.registry, &contracts, &channels};
  const std::string endorser = net.ids[2];
  const Bytes& endorser_seed = net.seeds.at(endorser);

  SUBCASE("a member-signed transaction naming a registered contract passes") {
    Transaction tx = testkit::make_tx(net, 0, 1, "A", 4);
    Proposal proposal{tx, tx.initiator, std::nullopt};
    const Endorsement e = validate_proposal(ctx, proposal, endorser, endorser_seed);
    CHECK(e.verdict == VerdictKind::Endorse);
    CHECK(e.tx_id == tx.tx_id);
    CHECK(verify_signature(
        endorsement_signing_bytes(e.tx_id, e.verdict, e.reason), e.signature,
        endorser, net.registry));
  }

  SUBCASE("an unregistered initiator is SourceInvalid") {
    const auto stranger =
        generate_identity(Role::CLIENT, testkit::test_seed("sg"), "sg");
    Transaction tx;
    tx.initiator = stranger.identity.member_id;
    tx.responder = net.ids[1];
    tx.asset_id = "A";
    tx.contract_id = "audit_log";
    tx.logical_time = 4;
    finalize_transaction(tx, stranger.seed);
    Proposal proposal{tx, tx.initiator, std::nullopt};
    const Endorsement e = validate_proposal(ctx, proposal, endorser, endorser_seed);
    CHECK(e.verdict == VerdictKind::Reject);
    CHECK(e.reason == RejectReason::SourceInvalid);
  }

  SUBCASE("a tampered signature is SourceInvalid") {
    Transaction tx = testkit::make_tx(net, 0, 1, "A", 4);
    tx.signature[3] ^= 1;
    Proposal proposal{tx, tx.initiator, std::nullopt};
    const Endorsement e = validate_proposal(ctx, proposal, endorser, endorser_seed);
    CHECK(e.reason == RejectReason::SourceInvalid);
  }

  SUBCASE("an unregistered contract is PurposeInvalid") {
    Transaction tx = testkit::make_tx(net, 0, 1, "A", 4, {}, "no_such_contract");
    Proposal proposal{tx, tx.initiator, std::nullopt};
    const Endorsement e = validate_proposal(ctx, proposal, endorser, endorser_seed);
    CHECK(e.verdict == VerdictKind::Reject);
    CHECK(e.reason == RejectReason::PurposeInvalid);
  }

  SUBCASE("a failing precondition is PurposeInvalid") {
    Transaction tx = testkit::make_tx(net, 0, 1, "A", 4,
                                      {{kWorkflowStateKey, "not a workflow"}},
                                      kWorkflowContractId);
    Proposal proposal{tx, tx.initiator, std::nullopt};
    const Endorsement e = validate_proposal(ctx, proposal, endorser, endorser_seed);
    CHECK(e.reason == RejectReason::PurposeInvalid);
  }

  SUBCASE("channel transactions require membership of all parties") {
    const Channel channel = create_channel({net.ids[0], net.ids[1]}, net.registry, 5);
    channels.emplace(channel.channel_id, channel);
    Transaction tx = testkit::make_tx(net, 0, 1, "A", 6);
    tx.channel_id = channel.channel_id;
    tx.state.clear();
    tx.signature.clear();
    tx.tx_id = Digest{};
    finalize_transaction(tx, net.seeds.at(tx.initiator));
    std::map<std::string, std::string> private_state{
        {kWorkflowStateKey, serialize_workflow(testkit::linreg_store_workflow())}};
    Proposal proposal{tx, tx.initiator, private_state};

    // the endorser here is not a channel member
    const Endorsement outside = validate_proposal(ctx, proposal, endorser, endorser_seed);
    CHECK(outside.reason == RejectReason::ChannelInvalid);

    // a member endorser validates the private payload instead of the public state
    const Endorsement inside =
        validate_proposal(ctx, proposal, net.ids[1], net.seeds.at(net.ids[1]));
    CHECK(inside.verdict == VerdictKind::Endorse);
  }
}

TEST_CASE("single-peer networks accept with one endorsement") {
  SimNetwork net(SimConfig{1, 4});
  net.join_peer("solo", Role::WMS);
  net.datasets().put("B", testkit::collinear_points());
  Transaction tx = net.prepare_workflow_transaction(
      "solo", "solo", "A", kWorkflowContractId,
      {{kWorkflowStateKey, serialize_workflow(testkit::linreg_store_workflow())}},
      ProvOptions{}, std::nullopt, nullptr);
  const ConsensusResult result = net.propose_transaction("solo", tx);
  CHECK(result.accepted);
  CHECK(result.endorsements.size() == 1);
  CHECK(result.quorum_size == 1);
}

TEST_CASE("five live peers produce five endorsements") {
  SimNetwork net(SimConfig{7, 4});
  for (const char* name : {"p1", "p2", "p3", "p4", "p5"}) {
    net.join_peer(name, Role::WMS);
  }
  net.datasets().put("B", testkit::collinear_points());
  Transaction tx = net.prepare_workflow_transaction(
      "p1", "p2", "A", kWorkflowContractId,
      {{kWorkflowStateKey, serialize_workflow(testkit::linreg_store_workflow())}},
      ProvOptions{}, std::nullopt, nullptr);
  const ConsensusResult result = net.propose_transaction("p1", tx);
  CHECK(result.accepted);
  CHECK(result.endorsements.size() == 5);
  std::set<std::string> endorsers;
  for (const Endorsement& e : result.endorsements) {
    CHECK(e.verdict == VerdictKind::Endorse);
    endorsers.insert(e.endorser);
  }
  CHECK(endorsers.size() == 5);
}

TEST_CASE("an unregistered proposer is NotAMember") {
  SimNetwork net(SimConfig{7, 4});
  net.join_peer("a", Role::WMS);
  net.join_peer("b", Role::CLIENT);
  const auto stranger = generate_identity(Role::CLIENT, testkit::test_seed("zz"), "zz");
  Transaction tx;
  tx.initiator = stranger.identity.member_id;
  tx.responder = net.member_id_of("b");
  tx.asset_id = "A";
  tx.contract_id = kWorkflowContractId;
  tx.logical_time = net.now();
  finalize_transaction(tx, stranger.seed);
  CHECK(code_of([&] { net.propose_transaction("a", tx); }) == Errc::NotAMember);
}

TEST_SUITE_END();
