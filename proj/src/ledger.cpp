#include "ledgerflow/ledger.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include "ledgerflow/error.hpp"

namespace ledgerflow {

canon::Value to_value(const Transaction& tx, TxEncoding encoding) {
  canon::Value::Object obj;
  obj.emplace("asset_id", tx.asset_id);
  if (tx.channel_id) obj.emplace("channel_id", *tx.channel_id);
  obj.emplace("contract_id", tx.contract_id);
  obj.emplace("initiator", tx.initiator);
  obj.emplace("logical_time", tx.logical_time);
  obj.emplace("responder", tx.responder);
  if (encoding != TxEncoding::ForSigning && !tx.signature.empty()) {
    obj.emplace("signature", to_hex(tx.signature));
  }
  canon::Value::Object state;
  for (const auto& [key, value] : tx.state) state.emplace(key, value);
  obj.emplace("state", canon::Value(std::move(state)));
  if (encoding == TxEncoding::Full && !tx.tx_id.is_zero()) {
    obj.emplace("tx_id", tx.tx_id.hex());
  }
  if (tx.wall_time) obj.emplace("wall_time", *tx.wall_time);
  return canon::Value(std::move(obj));
}

std::string canonical_serialize(const Transaction& tx, TxEncoding encoding) {
  return canon::serialize(to_value(tx, encoding));
}

Transaction transaction_from_value(const canon::Value& value) {
  Transaction tx;
  tx.asset_id = value.at("asset_id").as_string();
  if (const canon::Value* v = value.find("channel_id")) {
    tx.channel_id = v->as_string();
  }
  tx.contract_id = value.at("contract_id").as_string();
  tx.initiator = value.at("initiator").as_string();
  tx.logical_time = value.at("logical_time").as_int();
  if (tx.logical_time < 0) {
    throw Error(Errc::ParseError, "logical_time is negative");
  }
  tx.responder = value.at("responder").as_string();
  if (const canon::Value* v = value.find("signature")) {
    tx.signature = from_hex(v->as_string());
  }
  for (const auto& [key, v] : value.at("state").as_object()) {
    tx.state.emplace(key, v.as_string());
  }
  if (const canon::Value* v = value.find("tx_id")) {
    tx.tx_id = Digest::from_hex(v->as_string());
  }
  if (const canon::Value* v = value.find("wall_time")) {
    tx.wall_time = v->as_string();
  }
  return tx;
}

Digest transaction_id(const Transaction& tx) {
  return compute_digest(canonical_serialize(tx, TxEncoding::ForId));
}

Bytes transaction_signing_bytes(const Transaction& tx) {
  return to_bytes(canonical_serialize(tx, TxEncoding::ForSigning));
}

void finalize_transaction(Transaction& tx, const Bytes& initiator_seed) {
  tx.signature = crypto::sign(transaction_signing_bytes(tx), initiator_seed);
  tx.tx_id = transaction_id(tx);
}

canon::Value to_value(const Block& block, bool include_digest) {
  canon::Value::Object obj;
  if (include_digest) obj.emplace("block_digest", block.block_digest.hex());
  obj.emplace("index", block.index);
  obj.emplace("prev_digest", block.prev_digest.hex());
  obj.emplace("sealed_time", block.sealed_time);
  canon::Value::List txs;
  txs.reserve(block.transactions.size());
  for (const Transaction& tx : block.transactions) {
    txs.push_back(to_value(tx, TxEncoding::Full));
  }
  obj.emplace("transactions", std::move(txs));
  return canon::Value(std::move(obj));
}

std::string canonical_serialize(const Block& block, bool include_digest) {
  return canon::serialize(to_value(block, include_digest));
}

Block block_from_value(const canon::Value& value) {
  Block block;
  block.block_digest = Digest::from_hex(value.at("block_digest").as_string());
  block.index = value.at("index").as_int();
  block.prev_digest = Digest::from_hex(value.at("prev_digest").as_string());
  block.sealed_time = value.at("sealed_time").as_int();
  for (const canon::Value& v : value.at("transactions").as_list()) {
    block.transactions.push_back(transaction_from_value(v));
  }
  return block;
}

Digest block_digest_of(const Block& block) {
  return compute_digest(canonical_serialize(block, /*include_digest=*/false));
}

Digest Chain::tip_digest() const {
  return blocks.empty() ? Digest::zero() : blocks.back().block_digest;
}

namespace {

bool tx_order_less(const Transaction& a, const Transaction& b) {
  if (a.logical_time != b.logical_time) return a.logical_time < b.logical_time;
  return a.tx_id < b.tx_id;
}

}  // namespace

Block seal_block(const std::vector<PendingTransaction>& pending, Chain& chain,
                 std::int64_t sealed_time) {
  if (pending.empty()) {
    throw Error(Errc::EmptyBlock, "refusing to seal an empty block");
  }
  Block block;
  block.index = static_cast<std::int64_t>(chain.size());
  block.prev_digest = chain.tip_digest();
  block.sealed_time = sealed_time;
  block.transactions.reserve(pending.size());
  for (const PendingTransaction& entry : pending) {
    if (!entry.consensus_accepted) {
      throw Error(Errc::UnverifiedTransaction,
                  "transaction " + entry.tx.tx_id.hex() +
                      " lacks consensus acceptance");
    }
    block.transactions.push_back(entry.tx);
  }
  std::sort(block.transactions.begin(), block.transactions.end(), tx_order_less);
  block.block_digest = block_digest_of(block);
  chain.blocks.push_back(block);
  return block;
}

const char* failure_kind_name(FailureKind kind) {
  switch (kind) {
    case FailureKind::BrokenLink: return "BrokenLink";
    case FailureKind::BadDigest: return "BadDigest";
    case FailureKind::BadSignature: return "BadSignature";
    case FailureKind::NonMonotonicTime: return "NonMonotonicTime";
    case FailureKind::BadOrdering: return "BadOrdering";
  }
  return "BadDigest";
}

namespace {

/// Validates block k against its predecessor (nullptr for genesis) and the
/// registry. The check order fixes which kind is reported when a block fails
/// several ways at once.
std::optional<FailureKind> check_block(const Block& block, const Block* prev,
                                       std::int64_t expected_index,
                                       const MembershipRegistry& registry) {
  if (block.index != expected_index) return FailureKind::BrokenLink;
  const Digest expected_prev = prev ? prev->block_digest : Digest::zero();
  if (block.prev_digest != expected_prev) return FailureKind::BrokenLink;
  if (block.block_digest != block_digest_of(block)) return FailureKind::BadDigest;
  for (const Transaction& tx : block.transactions) {
    if (tx.tx_id != transaction_id(tx)) return FailureKind::BadDigest;
  }
  for (const Transaction& tx : block.transactions) {
    if (!registry.has(tx.initiator)) return FailureKind::BadSignature;
    if (!registry.get(tx.initiator)
             .key_handle.verify(transaction_signing_bytes(tx), tx.signature)) {
      return FailureKind::BadSignature;
    }
    if (tx.logical_time < 0) return FailureKind::NonMonotonicTime;
  }
  if (prev != nullptr) {
    if (block.sealed_time < prev->sealed_time) return FailureKind::NonMonotonicTime;
    if (!prev->transactions.empty() && !block.transactions.empty()) {
      auto time_of = [](const Transaction& tx) { return tx.logical_time; };
      std::int64_t prev_max = time_of(prev->transactions.front());
      for (const Transaction& tx : prev->transactions) {
        prev_max = std::max(prev_max, time_of(tx));
      }
      std::int64_t cur_min = time_of(block.transactions.front());
      for (const Transaction& tx : block.transactions) {
        cur_min = std::min(cur_min, time_of(tx));
      }
      if (cur_min < prev_max) return FailureKind::NonMonotonicTime;
    }
  }
  if (block.transactions.empty()) return FailureKind::BadOrdering;
  for (std::size_t i = 1; i < block.transactions.size(); ++i) {
    if (!tx_order_less(block.transactions[i - 1], block.transactions[i])) {
      return FailureKind::BadOrdering;
    }
  }
  return std::nullopt;
}

}  // namespace

ValidationReport validate_chain(const Chain& chain,
                                const MembershipRegistry& registry) {
  ValidationReport report;
  const std::size_t n = chain.size();
  if (n == 0) return report;

  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t workers = n >= 16 ? std::min<std::size_t>(hw, n) : 1;

  std::atomic<std::int64_t> first_failure{static_cast<std::int64_t>(n)};
  std::vector<FailureKind> kinds(n, FailureKind::BadDigest);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      if (static_cast<std::int64_t>(k) > first_failure.load(std::memory_order_relaxed)) {
        continue;  // a strictly earlier failure is already known
      }
      const Block* prev = k == 0 ? nullptr : &chain.blocks[k - 1];
      if (auto kind = check_block(chain.blocks[k], prev,
                                  static_cast<std::int64_t>(k), registry)) {
        kinds[k] = *kind;
        std::int64_t observed = first_failure.load(std::memory_order_relaxed);
        while (static_cast<std::int64_t>(k) < observed &&
               !first_failure.compare_exchange_weak(observed, static_cast<std::int64_t>(k))) {
        }
      }
    }
  };

  if (workers == 1) {
    run_range(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }

  // Duplicate tx_ids are a whole-chain property; attribute them to the block
  // holding the second occurrence.
  std::int64_t failed_at = first_failure.load();
  std::set<Digest> seen;
  for (std::size_t k = 0; k < n && static_cast<std::int64_t>(k) < failed_at; ++k) {
    for (const Transaction& tx : chain.blocks[k].transactions) {
      if (!seen.insert(tx.tx_id).second) {
        failed_at = static_cast<std::int64_t>(k);
        kinds[k] = FailureKind::BadOrdering;
        break;
      }
    }
  }

  if (failed_at < static_cast<std::int64_t>(n)) {
    report.valid = false;
    report.first_failure_index = failed_at;
    report.failure_kind = kinds[static_cast<std::size_t>(failed_at)];
  }
  return report;
}

void write_ledger_file(const std::filesystem::path& path, const Chain& chain) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  }
  for (const Block& block : chain.blocks) {
    out << canonical_serialize(block) << '\n';
  }
}

Chain read_ledger_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::IoError, "cannot open " + path.string());
  }
  Chain chain;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      throw Error(Errc::ParseError, "blank line in ledger file", line_no);
    }
    try {
      chain.blocks.push_back(block_from_value(canon::parse(line)));
    } catch (const Error& e) {
      throw Error(Errc::ParseError,
                  "ledger line " + std::to_string(line_no) + ": " + e.what(),
                  line_no);
    }
  }
  return chain;
}

}  // namespace ledgerflow
