#pragma once

// Shared fixtures for the test suites.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "ledgerflow/consensus.hpp"
#include "ledgerflow/contracts.hpp"
#include "ledgerflow/ledger.hpp"
#include "ledgerflow/membership.hpp"

namespace testkit {

using namespace ledgerflow;

inline Bytes test_seed(const std::string& tag) {
  auto digest = crypto::sha256("test-seed:" + tag);
  return Bytes(digest.begin(), digest.end());
}

struct TestNet {
  MembershipRegistry registry;
  std::vector<std::string> ids;              // join order
  std::map<std::string, Bytes> seeds;        // member_id -> seed
  std::map<std::string, PeerIdentity> peers; // member_id -> identity
};

/// n members admitted in sequence with unanimous approvals.
inline TestNet make_members(int n, const std::string& tag = "net") {
  TestNet net;
  for (int i = 0; i < n; ++i) {
    const std::string name = tag + "-m" + std::to_string(i);
    GeneratedIdentity gen =
        generate_identity(i == 0 ? Role::WMS : Role::CLIENT, test_seed(name), name);
    JoinRequest request = make_join_request(gen.identity, gen.seed);
    std::vector<Approval> approvals;
    for (const std::string& id : net.ids) {
      approvals.push_back(make_approval(gen.identity, id, net.seeds.at(id)));
    }
    net.registry = approve_join(net.registry, request, approvals, i);
    net.ids.push_back(gen.identity.member_id);
    net.seeds.emplace(gen.identity.member_id, gen.seed);
    net.peers.emplace(gen.identity.member_id, gen.identity);
  }
  return net;
}

/// A signed, finalized transaction between members `a` and `b`.
inline Transaction make_tx(const TestNet& net, int a, int b,
                           const std::string& asset, std::int64_t time,
                           std::map<std::string, std::string> state = {},
                           const std::string& contract = "audit_log") {
  Transaction tx;
  tx.initiator = net.ids.at(static_cast<std::size_t>(a));
  tx.responder = net.ids.at(static_cast<std::size_t>(b));
  tx.asset_id = asset;
  tx.contract_id = contract;
  tx.logical_time = time;
  tx.state = std::move(state);
  finalize_transaction(tx, net.seeds.at(tx.initiator));
  return tx;
}

/// Seals `txs` onto `chain` in batches of `batch`, marking them accepted.
inline void seal_all(Chain& chain, const std::vector<Transaction>& txs, int batch) {
  std::vector<PendingTransaction> pool;
  for (const Transaction& tx : txs) {
    pool.push_back({tx, true});
    if (static_cast<int>(pool.size()) == batch) {
      seal_block(pool, chain, pool.back().tx.logical_time);
      pool.clear();
    }
  }
  if (!pool.empty()) seal_block(pool, chain, pool.back().tx.logical_time);
}

/// A chain of `n_txs` miscellaneous transactions.
inline Chain build_chain(const TestNet& net, int n_txs, int batch,
                         std::uint64_t rng_seed = 1) {
  std::mt19937_64 rng(rng_seed);
  std::vector<Transaction> txs;
  std::int64_t t = 1;
  for (int i = 0; i < n_txs; ++i) {
    const int a = static_cast<int>(rng() % net.ids.size());
    const int b = static_cast<int>(rng() % net.ids.size());
    std::map<std::string, std::string> state;
    if (rng() % 2 == 0) state.emplace("note", "n" + std::to_string(rng() % 1000));
    txs.push_back(make_tx(net, a, b, "asset" + std::to_string(i), t, state));
    t += static_cast<std::int64_t>(rng() % 3);
  }
  Chain chain;
  seal_all(chain, txs, batch);
  return chain;
}

/// The motivating fixture: a regression over dataset B staged into file C,
/// producing asset A.
inline WorkflowDescription linreg_store_workflow(const std::string& input = "B",
                                                 const std::string& asset = "A",
                                                 const std::string& file = "C") {
  return parse_workflow_expression("linreg:points=" + input + ",model=" + asset +
                                   ";store:data=" + asset + ",file=" + file);
}

inline Dataset collinear_points() { return {{0, 0}, {1, 1}, {2, 2}}; }
inline Dataset exact_line_points() { return {{0, 1}, {1, 3}, {2, 5}}; }

}  // namespace testkit
