#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ledgerflow/bytes.hpp"
#include "ledgerflow/canon.hpp"
#include "ledgerflow/digest.hpp"
#include "ledgerflow/membership.hpp"

namespace ledgerflow {

/// A signed, timestamped record of one workflow execution between an
/// initiator and a responder creating an asset.
struct Transaction {
  Digest tx_id{};  // zero until finalized
  std::string initiator;
  std::string responder;
  std::string asset_id;
  std::string contract_id;
  std::int64_t logical_time = 0;
  std::optional<std::string> wall_time;   // informational only
  std::optional<std::string> channel_id;  // set for private transactions
  std::map<std::string, std::string> state;
  Bytes signature;  // empty until signed

  bool operator==(const Transaction&) const = default;
};

/// Which fields take part in the encoding. ForSigning excludes signature and
/// tx_id; ForId excludes only tx_id; Full includes everything that is set.
enum class TxEncoding { Full, ForId, ForSigning };

canon::Value to_value(const Transaction& tx, TxEncoding encoding = TxEncoding::Full);
std::string canonical_serialize(const Transaction& tx,
                                TxEncoding encoding = TxEncoding::Full);
Transaction transaction_from_value(const canon::Value& value);

Digest transaction_id(const Transaction& tx);
Bytes transaction_signing_bytes(const Transaction& tx);

/// Signs with the initiator's seed, then freezes tx_id. The one way a
/// transaction becomes proposable.
void finalize_transaction(Transaction& tx, const Bytes& initiator_seed);

struct Block {
  std::int64_t index = 0;
  Digest prev_digest{};
  std::vector<Transaction> transactions;
  std::int64_t sealed_time = 0;
  Digest block_digest{};
};

canon::Value to_value(const Block& block, bool include_digest = true);
std::string canonical_serialize(const Block& block, bool include_digest = true);
Block block_from_value(const canon::Value& value);

/// Digest over index + prev_digest + transactions + sealed_time.
Digest block_digest_of(const Block& block);

struct Chain {
  std::vector<Block> blocks;

  std::size_t size() const { return blocks.size(); }
  bool empty() const { return blocks.empty(); }
  /// Digest of the last block, or the 32-zero-byte genesis sentinel.
  Digest tip_digest() const;
};

/// A consensus-pool entry; seal_block refuses entries whose acceptance flag
/// is unset.
struct PendingTransaction {
  Transaction tx;
  bool consensus_accepted = false;
};

/// Seals `pending` into the next block and appends it to `chain`. Existing
/// blocks are never touched. Transactions are ordered by (logical_time,
/// tx_id) regardless of input order.
Block seal_block(const std::vector<PendingTransaction>& pending, Chain& chain,
                 std::int64_t sealed_time);

enum class FailureKind {
  BrokenLink,
  BadDigest,
  BadSignature,
  NonMonotonicTime,
  BadOrdering,
};
const char* failure_kind_name(FailureKind kind);

struct ValidationReport {
  bool valid = true;
  std::optional<std::int64_t> first_failure_index;
  std::optional<FailureKind> failure_kind;
};

/// Full structural + cryptographic audit: digests recompute, links match,
/// signatures verify against the registry, indices are consecutive, times
/// are monotone, ordering holds, tx_ids are unique. Failures are reported,
/// never thrown. Per-block checks run in parallel for long chains; the
/// report does not depend on evaluation order.
ValidationReport validate_chain(const Chain& chain,
                                const MembershipRegistry& registry);

/// Append-only ledger file: one canonical-serialized block per line.
void write_ledger_file(const std::filesystem::path& path, const Chain& chain);
Chain read_ledger_file(const std::filesystem::path& path);

}  // namespace ledgerflow
