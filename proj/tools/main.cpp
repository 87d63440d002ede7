#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "ledgerflow/cli.hpp"

using ledgerflow::cli::CliConfig;

int main(int argc, char** argv) {
  CLI::App app{"ledgerflow - a permissioned ledger for workflow provenance"};
  app.require_subcommand(1);

  CliConfig config;
  if (const char* env = std::getenv("LEDGERFLOW_DATA_DIR")) {
    config.data_dir = env;
  }
  app.add_option("--data-dir", config.data_dir, "state directory")
      ->envname("LEDGERFLOW_DATA_DIR");
  app.add_option("--seed", config.seed, "deterministic run seed");
  app.add_option("--batch-size", config.batch_size, "transactions per sealed block")
      ->check(CLI::PositiveNumber);
  app.add_option("--peers", config.peer_count, "peer count for generated workloads")
      ->check(CLI::PositiveNumber);
  app.add_flag("--porcelain", config.porcelain, "canonical machine-readable output");

  std::string script_path;
  bool use_demo = false;
  auto* run = app.add_subcommand("run", "execute a workload script");
  run->add_option("script", script_path, "workload script path");
  run->add_flag("--demo", use_demo, "run the built-in demo workload");

  std::string ledger_file;
  std::string registry_file;
  auto* verify = app.add_subcommand("verify", "validate an exported ledger file");
  verify->add_option("ledger", ledger_file, "ledger file (.ndjl)")->required();
  verify->add_option("--registry", registry_file, "registry file");

  std::string peer = "wms1";
  std::vector<std::string> terms;
  auto* query = app.add_subcommand("query", "filter committed transactions");
  query->add_option("--peer", peer, "peer whose replica to read");
  query->add_option("terms", terms, "query terms (from= to= contract= channel= has= time>= time<=)");

  bool backward = false;
  auto* walk_cmd = app.add_subcommand("walk", "walk the ledger in time order");
  walk_cmd->add_option("--peer", peer, "peer whose replica to read");
  walk_cmd->add_flag("--backward", backward, "walk newest to oldest");
  walk_cmd->add_option("terms", terms, "query terms");

  std::string tx_id;
  std::string dataset_dir;
  auto* replay = app.add_subcommand("replay", "re-execute a committed workflow");
  replay->add_option("tx", tx_id, "transaction id (64 hex chars)")->required();
  replay->add_option("--peer", peer, "peer whose replica to read");
  replay->add_option("--datasets", dataset_dir, "input dataset directory");

  std::string parent_asset;
  std::string initiator;
  std::string responder;
  std::string new_asset;
  std::vector<std::string> renames;
  auto* derive = app.add_subcommand("derive", "derive a new workflow from a committed one");
  derive->add_option("parent-asset", parent_asset)->required();
  derive->add_option("initiator", initiator)->required();
  derive->add_option("responder", responder)->required();
  derive->add_option("new-asset", new_asset)->required();
  derive->add_option("renames", renames, "entity renames old=new");

  std::string out_dir;
  auto* export_cmd = app.add_subcommand("export", "verified copy of a peer ledger");
  export_cmd->add_option("--peer", peer, "peer to export");
  export_cmd->add_option("out", out_dir, "output directory")->required();

  std::vector<std::string> channel_args;
  auto* channel = app.add_subcommand("channel", "inspect private channels");
  channel->add_option("args", channel_args, "list | show <id-prefix>");

  CLI11_PARSE(app, argc, argv);

  auto dispatch = [&]() -> int {
  if (run->parsed()) {
    if (use_demo) script_path.clear();
    if (!use_demo && script_path.empty()) {
      std::cerr << "run needs a script path or --demo\n";
      return ledgerflow::cli::kExitUsage;
    }
    return ledgerflow::cli::cmd_run(config, script_path, std::cout, std::cerr);
  }
  if (verify->parsed()) {
    return ledgerflow::cli::cmd_verify(config, ledger_file, registry_file,
                                       std::cout, std::cerr);
  }
  if (query->parsed()) {
    return ledgerflow::cli::cmd_query(config, peer, terms, false, std::cout,
                                      std::cerr);
  }
  if (walk_cmd->parsed()) {
    return ledgerflow::cli::cmd_query(config, peer, terms, backward, std::cout,
                                      std::cerr);
  }
  if (replay->parsed()) {
    return ledgerflow::cli::cmd_replay(
        config, peer, tx_id,
        dataset_dir.empty() ? std::nullopt : std::optional(dataset_dir),
        std::cout, std::cerr);
  }
  if (derive->parsed()) {
    return ledgerflow::cli::cmd_derive(config, parent_asset, initiator, responder,
                                       new_asset, renames, std::cout, std::cerr);
  }
  if (export_cmd->parsed()) {
    return ledgerflow::cli::cmd_export(config, peer, out_dir, std::cout, std::cerr);
  }
  if (channel->parsed()) {
    return ledgerflow::cli::cmd_channel(config, channel_args, std::cout, std::cerr);
  }
  return ledgerflow::cli::kExitUsage;
  };

  try {
    return dispatch();
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return ledgerflow::cli::kExitUsage;
  }
}
