#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ledgerflow/simnet.hpp"

namespace ledgerflow::cli {

struct CliConfig {
  std::filesystem::path data_dir = "ledgerflow-data";
  std::int64_t batch_size = 4;
  std::uint64_t seed = 42;
  std::int64_t peer_count = 5;  // demo workload size
  bool porcelain = false;
};

// Stable exit codes shared by the command functions and the binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitStalled = 3;
inline constexpr int kExitIrrecoverable = 4;

/// Runs a workload script (or the built-in demo when `script_path` is empty)
/// and persists ledgers, registry, trace, resources, datasets, channels, and
/// side stores under data_dir. Exit 0 on success, 2 on script problems, 3
/// when the network stalls.
int cmd_run(const CliConfig& config, const std::string& script_path,
            std::ostream& out, std::ostream& err);

/// Validates an exported ledger file against a registry file. Exit 0 when
/// valid, 1 when tampered (first failing block reported), 2 on unreadable or
/// truncated input.
int cmd_verify(const CliConfig& config, const std::string& ledger_path,
               const std::string& registry_path, std::ostream& out,
               std::ostream& err);

/// Query/walk over a peer ledger. Terms use the expression grammar
/// (from=, to=, contract=, channel=, has=, time>=, time<=).
int cmd_query(const CliConfig& config, const std::string& peer,
              const std::vector<std::string>& terms, bool backward,
              std::ostream& out, std::ostream& err);

/// Reconstructs the workflow behind a committed transaction and re-executes
/// it against the stored datasets. Exit 0 when every output digest matches,
/// 1 on a digest mismatch, 4 when the record cannot be recovered (including
/// private transactions replayed off a non-member peer).
int cmd_replay(const CliConfig& config, const std::string& peer,
               const std::string& tx_id_hex,
               const std::optional<std::string>& dataset_dir, std::ostream& out,
               std::ostream& err);

/// Resumes the persisted network, proposes a derived workflow pointing back
/// at its parent, seals, and rewrites the data dir.
int cmd_derive(const CliConfig& config, const std::string& parent_asset,
               const std::string& initiator, const std::string& responder,
               const std::string& new_asset,
               const std::vector<std::string>& renames, std::ostream& out,
               std::ostream& err);

/// Verified copy of one peer's ledger plus the registry into out_dir.
int cmd_export(const CliConfig& config, const std::string& peer,
               const std::string& out_dir, std::ostream& out, std::ostream& err);

/// channel list | channel show <id-prefix>
int cmd_channel(const CliConfig& config, const std::vector<std::string>& args,
                std::ostream& out, std::ostream& err);

// data-dir layout helpers shared with tests
std::filesystem::path ledger_path(const CliConfig& config, const std::string& peer);
std::filesystem::path registry_path(const CliConfig& config);

}  // namespace ledgerflow::cli
