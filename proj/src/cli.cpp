#include "ledgerflow/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "ledgerflow/error.hpp"

namespace ledgerflow::cli {

namespace fs = std::filesystem;

std::filesystem::path ledger_path(const CliConfig& config, const std::string& peer) {
  return config.data_dir / "peers" / peer / "ledger.ndjl";
}

std::filesystem::path registry_path(const CliConfig& config) {
  return config.data_dir / "registry.txt";
}

namespace {

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

void write_text_file(const fs::path& path, const std::string& body) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << body;
}

void write_channels_file(const fs::path& path,
                         const std::map<std::string, Channel>& channels,
                         const std::map<std::string, std::string>& aliases) {
  std::map<std::string, std::string> alias_by_id;
  for (const auto& [alias, id] : aliases) alias_by_id[id] = alias;
  std::string body;
  for (const auto& [id, channel] : channels) {
    canon::Value::Object obj;
    if (auto it = alias_by_id.find(id); it != alias_by_id.end()) {
      obj.emplace("alias", it->second);
    }
    obj.emplace("channel_id", channel.channel_id);
    obj.emplace("created", channel.created_time);
    canon::Value::List members;
    for (const std::string& m : channel.members) members.emplace_back(m);
    obj.emplace("members", std::move(members));
    body += canon::serialize(canon::Value(std::move(obj)));
    body += '\n';
  }
  write_text_file(path, body);
}

std::map<std::string, Channel> read_channels_file(const fs::path& path) {
  std::map<std::string, Channel> channels;
  if (!fs::exists(path)) return channels;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    canon::Value v = canon::parse(line);
    Channel channel;
    channel.channel_id = v.at("channel_id").as_string();
    channel.created_time = v.at("created").as_int();
    for (const canon::Value& m : v.at("members").as_list()) {
      channel.members.insert(m.as_string());
    }
    channels.emplace(channel.channel_id, channel);
  }
  return channels;
}

std::map<std::string, std::string> read_channel_aliases(const fs::path& path) {
  std::map<std::string, std::string> aliases;  // alias -> channel_id
  if (!fs::exists(path)) return aliases;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    canon::Value v = canon::parse(line);
    if (const canon::Value* alias = v.find("alias")) {
      aliases.emplace(alias->as_string(), v.at("channel_id").as_string());
    }
  }
  return aliases;
}

void persist_network(const CliConfig& config, const SimNetwork& net,
                     const std::map<std::string, std::string>& aliases,
                     bool append_trace) {
  const fs::path root = config.data_dir;
  fs::create_directories(root);
  write_registry_file(registry_path(config), net.registry());
  save_resource_dir(root / "resources", net.resources());
  save_dataset_dir(root / "datasets", net.datasets());
  write_channels_file(root / "channels.txt", net.channels(), aliases);

  for (const std::string& name : net.peer_names()) {
    const PeerNode& peer = net.peer(name);
    const fs::path peer_dir = root / "peers" / name;
    fs::create_directories(peer_dir);
    write_ledger_file(peer_dir / "ledger.ndjl", peer.chain);
    write_seed_file(peer_dir / "key.seed", peer.seed);
    for (const auto& [channel_id, side] : peer.side_stores) {
      const fs::path side_dir = peer_dir / "side" / channel_id;
      fs::create_directories(side_dir);
      for (const auto& [txid, state] : side.tx_state) {
        canon::Value::Object obj;
        for (const auto& [k, v] : state) obj.emplace(k, v);
        write_text_file(side_dir / (txid + ".state"),
                        canon::serialize(canon::Value(std::move(obj))) + "\n");
      }
      save_resource_dir(side_dir / "res", side.resources);
    }
  }

  std::string trace_body;
  for (const TraceEvent& event : net.trace()) {
    trace_body += trace_line(event);
    trace_body += '\n';
  }
  const fs::path trace_path = root / "trace.log";
  if (append_trace && fs::exists(trace_path)) {
    std::ofstream out(trace_path, std::ios::binary | std::ios::app);
    out << trace_body;
  } else {
    write_text_file(trace_path, trace_body);
  }
}

std::map<std::string, SideStore> load_side_stores(const fs::path& peer_dir) {
  std::map<std::string, SideStore> stores;
  const fs::path side_root = peer_dir / "side";
  if (!fs::is_directory(side_root)) return stores;
  for (const auto& channel_entry : fs::directory_iterator(side_root)) {
    if (!channel_entry.is_directory()) continue;
    SideStore side;
    for (const auto& entry : fs::directory_iterator(channel_entry.path())) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      if (name.size() <= 6 || name.substr(name.size() - 6) != ".state") continue;
      std::string body = read_text_file(entry.path());
      while (!body.empty() && body.back() == '\n') body.pop_back();
      std::map<std::string, std::string> state;
      const canon::Value parsed = canon::parse(body);
      for (const auto& [k, v] : parsed.as_object()) {
        state.emplace(k, v.as_string());
      }
      side.tx_state.emplace(name.substr(0, name.size() - 6), std::move(state));
    }
    side.resources = load_resource_dir(channel_entry.path() / "res");
    stores.emplace(channel_entry.path().filename().string(), std::move(side));
  }
  return stores;
}

SimNetwork load_network(const CliConfig& config) {
  MembershipRegistry registry = read_registry_file(registry_path(config));
  std::map<std::string, const PeerIdentity*> by_name;
  for (const auto& [id, identity] : registry.members()) {
    by_name.emplace(identity.display_name, &identity);
  }
  std::vector<PeerNode> peers;
  const fs::path peers_dir = config.data_dir / "peers";
  if (!fs::is_directory(peers_dir)) {
    throw Error(Errc::IoError, "no peers directory under " + config.data_dir.string());
  }
  for (const auto& entry : fs::directory_iterator(peers_dir)) {
    if (!entry.is_directory()) continue;
    PeerNode node;
    node.name = entry.path().filename().string();
    auto identity = by_name.find(node.name);
    if (identity == by_name.end()) {
      throw Error(Errc::UnknownMember,
                  "peer \"" + node.name + "\" missing from the registry");
    }
    node.identity = *identity->second;
    node.seed = read_seed_file(entry.path() / "key.seed");
    node.chain = read_ledger_file(entry.path() / "ledger.ndjl");
    node.side_stores = load_side_stores(entry.path());
    peers.push_back(std::move(node));
  }
  SimConfig sim{config.seed, static_cast<int>(config.batch_size)};
  return SimNetwork::resume(sim, std::move(registry), std::move(peers),
                            read_channels_file(config.data_dir / "channels.txt"),
                            load_dataset_dir(config.data_dir / "datasets"),
                            load_resource_dir(config.data_dir / "resources"));
}

std::string human_tx_line(const Transaction& tx) {
  std::string line = std::to_string(tx.logical_time) + " " + tx.tx_id.hex() + " " +
                     tx.initiator.substr(0, 12) + " -> " +
                     tx.responder.substr(0, 12) + " asset=" + tx.asset_id +
                     " contract=" + tx.contract_id;
  if (tx.channel_id) line += " channel=" + tx.channel_id->substr(0, 12);
  line += " state_keys=" + std::to_string(tx.state.size());
  return line;
}

}  // namespace

int cmd_run(const CliConfig& config, const std::string& script_path,
            std::ostream& out, std::ostream& err) {
  std::string script;
  try {
    script = script_path.empty() ? demo_script() : read_text_file(script_path);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  try {
    RunResult result = run_network(
        SimConfig{config.seed, static_cast<int>(config.batch_size)}, script);
    persist_network(config, result.network, result.channel_aliases,
                    /*append_trace=*/false);
    std::size_t accepted = 0;
    for (const ConsensusResult& r : result.decisions) accepted += r.accepted ? 1 : 0;
    out << "peers " << result.network.peer_count() << "\n";
    out << "decisions " << result.decisions.size() << " accepted " << accepted << "\n";
    for (const std::string& name : result.network.peer_names()) {
      out << "peer " << name << " blocks "
          << result.network.peer(name).chain.size() << "\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    if (e.code() == Errc::NetworkStalled) return kExitStalled;
    return kExitUsage;
  }
}

int cmd_verify(const CliConfig& config, const std::string& ledger_path_arg,
               const std::string& registry_path_arg, std::ostream& out,
               std::ostream& err) {
  Chain chain;
  MembershipRegistry registry;
  try {
    registry = read_registry_file(registry_path_arg.empty()
                                      ? registry_path(config)
                                      : fs::path(registry_path_arg));
    chain = read_ledger_file(ledger_path_arg);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  const ValidationReport report = validate_chain(chain, registry);
  if (config.porcelain) {
    canon::Value::Object obj;
    obj.emplace("blocks", static_cast<std::int64_t>(chain.size()));
    if (report.first_failure_index) {
      obj.emplace("first_failure_index", *report.first_failure_index);
    }
    if (report.failure_kind) {
      obj.emplace("failure_kind", failure_kind_name(*report.failure_kind));
    }
    obj.emplace("valid", report.valid ? 1 : 0);
    out << canon::serialize(canon::Value(std::move(obj))) << "\n";
  } else if (report.valid) {
    out << "valid: " << chain.size() << " blocks\n";
  } else {
    out << "invalid: block " << *report.first_failure_index << " "
        << failure_kind_name(*report.failure_kind) << "\n";
  }
  return report.valid ? kExitOk : kExitInvalid;
}

int cmd_query(const CliConfig& config, const std::string& peer,
              const std::vector<std::string>& terms, bool backward,
              std::ostream& out, std::ostream& err) {
  try {
    const Chain chain = read_ledger_file(ledger_path(config, peer));
    const Query query = parse_query(terms);
    const auto matches = walk(
        chain, backward ? WalkDirection::Backward : WalkDirection::Forward, query);
    for (const Transaction& tx : matches) {
      out << (config.porcelain ? canonical_serialize(tx) : human_tx_line(tx))
          << "\n";
    }
    out << "matched " << matches.size() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_replay(const CliConfig& config, const std::string& peer,
               const std::string& tx_id_hex,
               const std::optional<std::string>& dataset_dir, std::ostream& out,
               std::ostream& err) {
  Chain chain;
  try {
    chain = read_ledger_file(ledger_path(config, peer));
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const Digest tx_id = Digest::from_hex(tx_id_hex);
    std::optional<Transaction> tx = get_transaction(chain, tx_id);
    if (!tx) {
      err << "transaction " << tx_id_hex << " is not committed on this peer\n";
      return kExitIrrecoverable;
    }

    ResourceStore resources = load_resource_dir(config.data_dir / "resources");
    if (tx->channel_id) {
      // Private transaction: only a member peer holds the state.
      const fs::path side_dir =
          config.data_dir / "peers" / peer / "side" / *tx->channel_id;
      const fs::path state_path = side_dir / (tx_id.hex() + ".state");
      if (!fs::exists(state_path)) {
        err << "no side-store access to private transaction " << tx_id_hex << "\n";
        return kExitIrrecoverable;
      }
      std::string body = read_text_file(state_path);
      while (!body.empty() && body.back() == '\n') body.pop_back();
      tx->state.clear();
      const canon::Value parsed = canon::parse(body);
      for (const auto& [k, v] : parsed.as_object()) {
        tx->state.emplace(k, v.as_string());
      }
      const ResourceStore side_resources = load_resource_dir(side_dir / "res");
      for (const auto& [digest, blob] : side_resources.entries()) {
        resources.put_raw(digest, blob);
      }
    }

    ProvenanceRecord record;
    try {
      record = extract_record(*tx, resources);
    } catch (const Error& e) {
      err << e.what() << "\n";
      return e.code() == Errc::DigestMismatch ? kExitInvalid : kExitIrrecoverable;
    }
    WorkflowDescription workflow = reconstruct_workflow(record);

    const fs::path data_path =
        dataset_dir ? fs::path(*dataset_dir) : config.data_dir / "datasets";
    const DatasetStore datasets = load_dataset_dir(data_path);

    Transaction replay_tx = *tx;
    replay_tx.state[kWorkflowStateKey] = serialize_workflow(workflow);
    ResourceStore throwaway;
    ExecutionContext ctx;
    ctx.datasets = &datasets;
    ctx.resources = &throwaway;
    ctx.base_time = tx->logical_time;
    const ContractRegistry contracts = builtin_contracts();
    const ContractResult result =
        execute_contract(contracts, tx->contract_id, replay_tx, ctx);

    // Committed digests: the event log's outputs when present, else every
    // produced entity of the tree.
    std::map<std::string, Digest> expected;
    if (record.embedded && record.embedded->events) {
      expected = record.embedded->events->outputs;
    } else if (record.embedded && record.embedded->tree) {
      std::set<std::string> produced;
      for (const ProvEdge& e : record.embedded->tree->edges) {
        if (e.kind == EdgeKind::GeneratedBy) produced.insert(e.from);
        if (e.kind == EdgeKind::StoredIn) produced.insert(e.from);
      }
      for (const ProvEntity& entity : record.embedded->tree->entities) {
        if (entity.digest && produced.count(entity.entity_id) != 0) {
          expected.emplace(entity.entity_id, *entity.digest);
        }
      }
    } else {
      err << "record carries no digests to compare against\n";
      return kExitIrrecoverable;
    }

    std::size_t compared = 0;
    for (const auto& [name, digest] : expected) {
      auto it = result.output_digests.find(name);
      if (it == result.output_digests.end() || it->second != digest) {
        out << "mismatch " << name << "\n";
        return kExitInvalid;
      }
      ++compared;
    }
    out << "replay ok: " << compared << " output digests match\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitIrrecoverable;
  }
}

int cmd_derive(const CliConfig& config, const std::string& parent_asset,
               const std::string& initiator, const std::string& responder,
               const std::string& new_asset,
               const std::vector<std::string>& renames, std::ostream& out,
               std::ostream& err) {
  try {
    SimNetwork net = load_network(config);
    std::vector<std::pair<std::string, std::string>> rename_pairs;
    for (const std::string& r : renames) {
      const std::size_t eq = r.find('=');
      if (eq == std::string::npos) {
        err << "expected old=new, got \"" << r << "\"\n";
        return kExitUsage;
      }
      rename_pairs.emplace_back(r.substr(0, eq), r.substr(eq + 1));
    }
    const ConsensusResult result = run_derive(net, parent_asset, initiator,
                                              responder, new_asset, rename_pairs);
    net.seal();
    const auto aliases = read_channel_aliases(config.data_dir / "channels.txt");
    persist_network(config, net, aliases, /*append_trace=*/true);
    out << "derived " << result.tx_id.hex() << (result.accepted ? " accepted" : " rejected")
        << "\n";
    return result.accepted ? kExitOk : kExitInvalid;
  } catch (const Error& e) {
    err << e.what() << "\n";
    if (e.code() == Errc::NetworkStalled) return kExitStalled;
    if (e.code() == Errc::UnknownParent) return kExitIrrecoverable;
    return kExitUsage;
  }
}

int cmd_export(const CliConfig& config, const std::string& peer,
               const std::string& out_dir, std::ostream& out, std::ostream& err) {
  try {
    const MembershipRegistry registry = read_registry_file(registry_path(config));
    const Chain chain = read_ledger_file(ledger_path(config, peer));
    const ValidationReport report = validate_chain(chain, registry);
    if (!report.valid) {
      err << "refusing to export an invalid chain (block "
          << *report.first_failure_index << " "
          << failure_kind_name(*report.failure_kind) << ")\n";
      return kExitInvalid;
    }
    fs::create_directories(out_dir);
    write_ledger_file(fs::path(out_dir) / "ledger.ndjl", chain);
    write_registry_file(fs::path(out_dir) / "registry.txt", registry);
    out << "exported " << chain.size() << " blocks\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
}

int cmd_channel(const CliConfig& config, const std::vector<std::string>& args,
                std::ostream& out, std::ostream& err) {
  try {
    const auto channels = read_channels_file(config.data_dir / "channels.txt");
    if (args.empty() || args[0] == "list") {
      for (const auto& [id, channel] : channels) {
        out << id << " members " << channel.members.size() << "\n";
      }
      return kExitOk;
    }
    if (args[0] == "show" && args.size() == 2) {
      for (const auto& [id, channel] : channels) {
        if (id.rfind(args[1], 0) == 0) {
          out << "channel " << id << " created " << channel.created_time << "\n";
          for (const std::string& m : channel.members) out << "member " << m << "\n";
          return kExitOk;
        }
      }
      err << "no channel matches \"" << args[1] << "\"\n";
      return kExitUsage;
    }
    err << "usage: channel [list | show <id-prefix>]\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace ledgerflow::cli
