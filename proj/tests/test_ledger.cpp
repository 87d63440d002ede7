#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "ledgerflow/error.hpp"
#include "ledgerflow/ledger.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ledgerflow;
using testkit::TestNet;

TEST_SUITE_BEGIN("ledger");

TEST_CASE("canonical serialization is deterministic and order-insensitive") {
  const TestNet net = testkit::make_members(2);
  Transaction tx = testkit::make_tx(net, 0, 1, "A", 5);
  CHECK(canonical_serialize(tx) == canonical_serialize(tx));

  Transaction left = testkit::make_tx(net, 0, 1, "A", 5);
  Transaction right = left;
  left.state.clear();
  left.state.emplace("alpha", "1");
  left.state.emplace("beta", "2");
  right.state.clear();
  right.state.emplace("beta", "2");
  right.state.emplace("alpha", "1");
  CHECK(canonical_serialize(left, TxEncoding::ForSigning) ==
        canonical_serialize(right, TxEncoding::ForSigning));
}

TEST_CASE("unset digest and signature fields are excluded from the encoding") {
  const TestNet net = testkit::make_members(2);
  Transaction tx = testkit::make_tx(net, 0, 1, "A", 5);
  const std::string full = canonical_serialize(tx);
  CHECK(full.find("tx_id") != std::string::npos);
  CHECK(full.find("signature") != std::string::npos);
  const std::string signing = canonical_serialize(tx, TxEncoding::ForSigning);
  CHECK(signing.find("tx_id") == std::string::npos);
  CHECK(signing.find("signature") == std::string::npos);
  const std::string for_id = canonical_serialize(tx, TxEncoding::ForId);
  CHECK(for_id.find("tx_id") == std::string::npos);
  CHECK(for_id.find("signature") != std::string::npos);
}

TEST_CASE("transactions round-trip byte-identically through parse") {
  const TestNet net = testkit::make_members(3);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    std::map<std::string, std::string> state;
    const auto n = rng() % 5;
    for (std::size_t k = 0; k < n; ++k) {
      state.emplace("key" + std::to_string(rng() % 50),
                    "value \"quoted\" \\ " + std::to_string(rng()));
    }
    Transaction tx = testkit::make_tx(net, static_cast<int>(rng() % 3),
                                      static_cast<int>(rng() % 3),
                                      "asset" + std::to_string(i),
                                      static_cast<std::int64_t>(rng() % 1000), state);
    if (rng() % 2 == 0) tx.wall_time = "2026-01-01T00:00:00Z";
    if (rng() % 3 == 0) tx.channel_id = "chan" + std::to_string(rng() % 4);
    finalize_transaction(tx, net.seeds.at(tx.initiator));

    const std::string bytes = canonical_serialize(tx);
    const Transaction parsed = transaction_from_value(canon::parse(bytes));
    CHECK(canonical_serialize(parsed) == bytes);
    CHECK(parsed == tx);
  }
}

TEST_CASE("tx_id recomputes and verifies uniformly for every transaction") {
  const TestNet net = testkit::make_members(3);
  const Transaction plain = testkit::make_tx(net, 0, 1, "A", 1);
  Transaction chan = testkit::make_tx(net, 1, 2, "B", 2);
  chan.channel_id = "c";
  chan.signature.clear();
  chan.tx_id = Digest{};
  finalize_transaction(chan, net.seeds.at(chan.initiator));
  for (const Transaction& tx : {plain, chan}) {
    CHECK(tx.tx_id == transaction_id(tx));
    CHECK(verify_signature(transaction_signing_bytes(tx), tx.signature,
                           tx.initiator, net.registry));
  }
}

TEST_CASE("sealing: genesis sentinel, linking, ordering, append-only") {
  const TestNet net = testkit::make_members(3);
  Chain chain;
  std::vector<PendingTransaction> pool;
  // insert out of order on purpose
  pool.push_back({testkit::make_tx(net, 1, 2, "b", 7), true});
  pool.push_back({testkit::make_tx(net, 0, 1, "a", 3), true});
  const Block genesis = seal_block(pool, chain, 8);
  CHECK(genesis.index == 0);
  CHECK(genesis.prev_digest.hex() == std::string(64, '0'));
  CHECK(genesis.transactions.front().logical_time == 3);
  CHECK(genesis.transactions.back().logical_time == 7);

  const Digest first_digest = genesis.block_digest;
  pool.clear();
  pool.push_back({testkit::make_tx(net, 2, 0, "c", 9), true});
  const Block second = seal_block(pool, chain, 9);
  CHECK(chain.size() == 2);
  CHECK(second.index == 1);
  CHECK(chain.blocks[0].block_digest == first_digest);  // never rewritten

  // prev link equals an independent recomputation of block 0's digest
  const std::string block0_bytes = canonical_serialize(chain.blocks[0], false);
  const auto ref = oracle::sha256(block0_bytes);
  CHECK(std::equal(ref.begin(), ref.end(), second.prev_digest.bytes.begin()));
}

TEST_CASE("seal_block rejects empty and unverified input") {
  const TestNet net = testkit::make_members(2);
  Chain chain;
  std::vector<PendingTransaction> pool;
  CHECK_THROWS_AS(seal_block(pool, chain, 1), Error);
  try {
    seal_block(pool, chain, 1);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyBlock);
  }
  pool.push_back({testkit::make_tx(net, 0, 1, "a", 1), false});
  try {
    seal_block(pool, chain, 1);
    FAIL("expected UnverifiedTransaction");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnverifiedTransaction);
  }
  CHECK(chain.empty());
}

TEST_CASE("validate_chain accepts freshly built chains") {
  const TestNet net = testkit::make_members(4);
  const Chain chain = testkit::build_chain(net, 12, 4);
  CHECK(chain.size() == 3);
  const ValidationReport report = validate_chain(chain, net.registry);
  CHECK(report.valid);
  CHECK_FALSE(report.first_failure_index.has_value());
}

TEST_CASE("a mutated transaction in block 2 reports BadDigest at index 2") {
  const TestNet net = testkit::make_members(4);
  Chain chain = testkit::build_chain(net, 20, 4);  // 5 blocks
  REQUIRE(chain.size() == 5);
  chain.blocks[2].transactions[1].asset_id[0] ^= 0x01;
  const ValidationReport report = validate_chain(chain, net.registry);
  CHECK_FALSE(report.valid);
  CHECK(report.first_failure_index == 2);
  CHECK(report.failure_kind == FailureKind::BadDigest);
}

TEST_CASE("swapped blocks report BrokenLink") {
  const TestNet net = testkit::make_members(4);
  Chain chain = testkit::build_chain(net, 20, 4);
  std::swap(chain.blocks[1], chain.blocks[2]);
  const ValidationReport report = validate_chain(chain, net.registry);
  CHECK_FALSE(report.valid);
  CHECK(report.first_failure_index == 1);
  CHECK(report.failure_kind == FailureKind::BrokenLink);
}

TEST_CASE("a re-signed transaction by a stranger reports BadSignature") {
  const TestNet net = testkit::make_members(3);
  Chain chain = testkit::build_chain(net, 8, 4);
  Transaction& victim = chain.blocks[1].transactions[0];
  const Bytes stranger_seed = testkit::test_seed("stranger");
  victim.signature = crypto::sign(transaction_signing_bytes(victim), stranger_seed);
  victim.tx_id = transaction_id(victim);
  Block& block = chain.blocks[1];
  block.block_digest = block_digest_of(block);
  // relink the rest of the chain so only the signature is at fault
  for (std::size_t k = 2; k < chain.size(); ++k) {
    chain.blocks[k].prev_digest = chain.blocks[k - 1].block_digest;
    chain.blocks[k].block_digest = block_digest_of(chain.blocks[k]);
  }
  const ValidationReport report = validate_chain(chain, net.registry);
  CHECK_FALSE(report.valid);
  CHECK(report.first_failure_index == 1);
  CHECK(report.failure_kind == FailureKind::BadSignature);
}

TEST_CASE("time regressions report NonMonotonicTime") {
  const TestNet net = testkit::make_members(3);
  std::vector<Transaction> txs;
  for (int i = 0; i < 4; ++i) {
    txs.push_back(testkit::make_tx(net, 0, 1, "a" + std::to_string(i), 10 + i));
  }
  Chain chain;
  testkit::seal_all(chain, txs, 2);
  // rebuild block 1 with an earlier transaction than block 0's latest
  Transaction early = testkit::make_tx(net, 0, 1, "early", 5);
  Chain tampered;
  tampered.blocks.push_back(chain.blocks[0]);
  Block bad;
  bad.index = 1;
  bad.prev_digest = tampered.blocks[0].block_digest;
  bad.sealed_time = chain.blocks[0].sealed_time + 1;
  bad.transactions = {early};
  bad.block_digest = block_digest_of(bad);
  tampered.blocks.push_back(bad);
  const ValidationReport report = validate_chain(tampered, net.registry);
  CHECK_FALSE(report.valid);
  CHECK(report.first_failure_index == 1);
  CHECK(report.failure_kind == FailureKind::NonMonotonicTime);
}

TEST_CASE("unsorted transactions report BadOrdering") {
  const TestNet net = testkit::make_members(3);
  Chain chain = testkit::build_chain(net, 4, 4);
  Block& block = chain.blocks[0];
  REQUIRE(block.transactions.size() == 4);
  std::swap(block.transactions[0], block.transactions[3]);
  block.block_digest = block_digest_of(block);
  const ValidationReport report = validate_chain(chain, net.registry);
  CHECK_FALSE(report.valid);
  CHECK(report.first_failure_index == 0);
  CHECK(report.failure_kind == FailureKind::BadOrdering);
}

TEST_CASE("duplicate tx ids are detected") {
  const TestNet net = testkit::make_members(3);
  const Transaction tx = testkit::make_tx(net, 0, 1, "a", 1);
  Chain chain;
  std::vector<PendingTransaction> pool{{tx, true}};
  seal_block(pool, chain, 1);
  Block dup;
  dup.index = 1;
  dup.prev_digest = chain.tip_digest();
  dup.sealed_time = 2;
  dup.transactions = {tx};
  dup.block_digest = block_digest_of(dup);
  chain.blocks.push_back(dup);
  const ValidationReport report = validate_chain(chain, net.registry);
  CHECK_FALSE(report.valid);
  CHECK(report.failure_kind == FailureKind::BadOrdering);
  CHECK(report.first_failure_index == 1);
}

TEST_CASE("immutability: every single-byte mutation of the file is caught") {
  const TestNet net = testkit::make_members(4);
  const Chain chain = testkit::build_chain(net, 16, 4);
  const auto path = std::filesystem::temp_directory_path() / "lf_immut.ndjl";
  write_ledger_file(path, chain);
  std::ifstream in(path, std::ios::binary);
  std::string original((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  std::mt19937_64 rng(3);
  int caught = 0;
  const int kTrials = 60;
  for (int i = 0; i < kTrials; ++i) {
    std::string mutated = original;
    const std::size_t pos = rng() % mutated.size();
    std::uint8_t flip = static_cast<std::uint8_t>(1u << (rng() % 8));
    if (mutated[pos] == '\n' || (mutated[pos] ^ flip) == '\n') {
      // newline structure changes parse as truncation, also a detection
      ++caught;
      continue;
    }
    mutated[pos] = static_cast<char>(mutated[pos] ^ flip);
    const auto mutated_path =
        std::filesystem::temp_directory_path() / "lf_immut_mut.ndjl";
    std::ofstream out(mutated_path, std::ios::binary | std::ios::trunc);
    out << mutated;
    out.close();
    try {
      const Chain reloaded = read_ledger_file(mutated_path);
      if (!validate_chain(reloaded, net.registry).valid) ++caught;
    } catch (const Error&) {
      ++caught;  // unparseable is detected too
    }
  }
  CHECK(caught == kTrials);
}

TEST_CASE("all tx ids in a valid chain are distinct") {
  const TestNet net = testkit::make_members(4);
  const Chain chain = testkit::build_chain(net, 30, 4, 77);
  std::set<Digest> seen;
  for (const Block& block : chain.blocks) {
    for (const Transaction& tx : block.transactions) {
      CHECK(seen.insert(tx.tx_id).second);
    }
  }
}

TEST_CASE("ledger files round-trip") {
  const TestNet net = testkit::make_members(3);
  const Chain chain = testkit::build_chain(net, 9, 4);
  const auto path = std::filesystem::temp_directory_path() / "lf_roundtrip.ndjl";
  write_ledger_file(path, chain);
  const Chain reloaded = read_ledger_file(path);
  REQUIRE(reloaded.size() == chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    CHECK(canonical_serialize(reloaded.blocks[k]) ==
          canonical_serialize(chain.blocks[k]));
  }
}

TEST_SUITE_END();
