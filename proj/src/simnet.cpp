#include "ledgerflow/simnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "ledgerflow/error.hpp"

namespace ledgerflow {

namespace {

std::string short_hex(const Digest& digest) { return digest.hex().substr(0, 12); }

std::pair<std::string, std::string> link_key(const std::string& a,
                                             const std::string& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

// Peer and dataset names become directory and file names.
bool safe_name(const std::string& name) {
  if (name.empty() || name.size() > 64) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return name != "." && name != "..";
}

}  // namespace

std::string trace_line(const TraceEvent& event) {
  canon::Value::Object obj;
  obj.emplace("detail", event.detail);
  obj.emplace("from", event.from);
  obj.emplace("kind", event.kind);
  obj.emplace("time", event.time);
  obj.emplace("to", event.to);
  return canon::serialize(canon::Value(std::move(obj)));
}

SimNetwork::SimNetwork(SimConfig config) : config_(config) {
  if (config_.batch_size < 1) {
    throw Error(Errc::ScriptError, "batch size must be at least 1");
  }
}

std::vector<std::string> SimNetwork::peer_names() const { return peer_order_; }

const PeerNode& SimNetwork::peer(const std::string& name) const {
  auto it = peers_.find(name);
  if (it == peers_.end()) {
    throw Error(Errc::UnknownPeer, "no peer named \"" + name + "\"");
  }
  return it->second;
}

PeerNode& SimNetwork::node(const std::string& name) {
  auto it = peers_.find(name);
  if (it == peers_.end()) {
    throw Error(Errc::UnknownPeer, "no peer named \"" + name + "\"");
  }
  return it->second;
}

std::string SimNetwork::member_id_of(const std::string& name) const {
  return peer(name).identity.member_id;
}

Bytes SimNetwork::derive_seed(const std::string& name) const {
  const std::string material =
      "ledgerflow-peer:" + std::to_string(config_.seed) + ":" + name;
  auto digest = crypto::sha256(material);
  return Bytes(digest.begin(), digest.end());
}

std::string SimNetwork::wall_time_at(std::int64_t logical) const {
  using namespace std::chrono;
  static constexpr sys_days kEpoch = sys_days(year{2026} / 1 / 1);
  const sys_seconds tp = kEpoch + seconds(logical);
  const sys_days day = floor<days>(tp);
  const year_month_day ymd(day);
  const hh_mm_ss<seconds> tod(tp - day);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()),
                static_cast<long>(tod.minutes().count()),
                static_cast<long>(tod.seconds().count()));
  return buf;
}

void SimNetwork::log(std::int64_t time, std::string kind, std::string from,
                     std::string to, std::string detail) {
  trace_.push_back(TraceEvent{time, std::move(kind), std::move(from),
                              std::move(to), std::move(detail)});
}

bool SimNetwork::link_up(const std::string& a, const std::string& b) const {
  if (a == b || a.empty() || b.empty()) return true;
  return severed_.count(link_key(a, b)) == 0;
}

void SimNetwork::send(const std::string& from, const std::string& to,
                      Payload payload) {
  if (!from.empty()) {
    auto it = peers_.find(from);
    if (it == peers_.end() || !it->second.up) return;
  }
  Message msg;
  msg.send_time = clock_;
  msg.deliver_time = clock_ + 1;
  msg.sender = from;
  msg.seq = next_seq_++;
  msg.to = to;
  msg.payload = std::move(payload);
  queue_.push(std::move(msg));
}

void SimNetwork::broadcast(const std::string& from, Payload payload) {
  for (const std::string& name : peer_order_) {
    send(from, name, payload);
  }
}

void SimNetwork::drain() {
  while (!queue_.empty()) {
    Message msg = queue_.top();
    queue_.pop();
    clock_ = std::max(clock_, msg.deliver_time);
    deliver(msg);
  }
}

std::string SimNetwork::join_peer(const std::string& name, Role role) {
  if (!safe_name(name)) {
    throw Error(Errc::ScriptError, "peer name \"" + name + "\" is not usable");
  }
  if (peers_.count(name) != 0) {
    throw Error(Errc::DuplicateMember, "peer \"" + name + "\" already joined");
  }
  const std::int64_t t = ++clock_;

  GeneratedIdentity gen = generate_identity(role, derive_seed(name), name);
  JoinRequest request = make_join_request(gen.identity, gen.seed);
  std::vector<Approval> approvals;
  for (const std::string& existing : peer_order_) {
    const PeerNode& p = peers_.at(existing);
    if (!p.up) continue;
    approvals.push_back(
        make_approval(gen.identity, p.identity.member_id, p.seed));
  }
  canonical_registry_ = approve_join(canonical_registry_, request, approvals, t);

  PeerNode node;
  node.name = name;
  node.identity = gen.identity;
  node.seed = gen.seed;
  node.registry = canonical_registry_;
  node.contracts = builtin_contracts();
  // Spawn synced with the first live peer's view of the world.
  for (const std::string& existing : peer_order_) {
    const PeerNode& p = peers_.at(existing);
    if (!p.up) continue;
    node.chain = p.chain;
    node.pool = p.pool;
    node.channels = p.channels;
    break;
  }
  peers_.emplace(name, std::move(node));
  peer_order_.push_back(name);

  MsgAdmit admit{gen.identity, canonical_registry_.admission_log().back()};
  for (const std::string& other : peer_order_) {
    if (other != name) send(name, other, admit);
  }
  log(t, "join", name, "*", gen.identity.member_id);
  drain();
  return gen.identity.member_id;
}

Channel SimNetwork::create_channel(const std::set<std::string>& peer_names) {
  const std::int64_t t = ++clock_;
  std::set<std::string> member_ids;
  for (const std::string& name : peer_names) {
    member_ids.insert(member_id_of(name));
  }
  Channel channel = ledgerflow::create_channel(member_ids, canonical_registry_, t);
  channels_.emplace(channel.channel_id, channel);
  broadcast("", MsgChannel{channel});
  log(t, "channel", "*", "*", channel.channel_id);
  drain();
  return channel;
}

Transaction SimNetwork::prepare_workflow_transaction(
    const std::string& initiator_peer, const std::string& responder_peer,
    std::string asset_id, std::string contract_id,
    std::map<std::string, std::string> base_state, const ProvOptions& prov,
    const std::optional<std::string>& channel_id, PrivatePayload* private_out) {
  PeerNode& proposer = node(initiator_peer);
  const PeerNode& responder = node(responder_peer);
  const std::int64_t t = ++clock_;

  Transaction tx;
  tx.initiator = proposer.identity.member_id;
  tx.responder = responder.identity.member_id;
  tx.asset_id = std::move(asset_id);
  tx.contract_id = std::move(contract_id);
  tx.logical_time = t;
  tx.wall_time = wall_time_at(t);
  tx.channel_id = channel_id;
  tx.state = std::move(base_state);

  // Contract execution happens on the proposing node before consensus;
  // private runs land their artifacts in a member-only scratch store.
  ResourceStore scratch;
  ExecutionContext ctx;
  ctx.datasets = &datasets_;
  ctx.resources = channel_id ? &scratch : &resources_;
  ctx.base_time = t;
  ContractResult result = execute_contract(proposer.contracts, tx.contract_id, tx, ctx);
  for (const auto& [key, value] : result.state_entries) {
    tx.state.insert_or_assign(key, value);
  }

  EmbeddedProv content;
  if (prov.with_tree) {
    content.tree = build_tree_record(result.execution_trace,
                                     parse_workflow(tx.state.at(kWorkflowStateKey)));
  }
  if (prov.with_events) {
    content.events = build_event_record(
        result.execution_trace, parse_workflow(tx.state.at(kWorkflowStateKey)),
        /*embed_workflow=*/true);
  }
  ProvenanceRecord record;
  record.mode = prov.mode;
  if (prov.mode != ProvMode::Reference) record.embedded = content;
  if (prov.mode != ProvMode::Embedded) {
    record.reference =
        store_reference(content, channel_id ? scratch : resources_);
  }
  tx.state = attach_provenance(tx, record);

  if (channel_id) {
    if (private_out == nullptr) {
      throw Error(Errc::ChannelAccessDenied,
                  "private transaction needs a side-state sink");
    }
    private_out->state = tx.state;
    private_out->resources = scratch.entries();
    tx.state.clear();
  }
  finalize_transaction(tx, proposer.seed);
  log(t, "prepare", initiator_peer, responder_peer, short_hex(tx.tx_id));
  return tx;
}

ConsensusResult SimNetwork::propose_transaction(
    const std::string& proposer_peer, const Transaction& tx,
    const std::optional<PrivatePayload>& private_payload) {
  PeerNode& proposer = node(proposer_peer);
  if (!canonical_registry_.has(tx.initiator) ||
      !canonical_registry_.has(proposer.identity.member_id)) {
    throw Error(Errc::NotAMember,
                "proposer " + tx.initiator + " is not a registered member");
  }

  Round round;
  round.tx_id = tx.tx_id;
  round.proposer = proposer_peer;
  round.tx = tx;
  if (private_payload) {
    round.private_state = private_payload->state;
    round.private_resources = private_payload->resources;
  }

  std::vector<std::string> recipients;
  if (tx.channel_id) {
    auto it = channels_.find(*tx.channel_id);
    if (it == channels_.end()) {
      throw Error(Errc::ChannelAccessDenied,
                  "channel " + *tx.channel_id + " does not exist");
    }
    const Channel& channel = it->second;
    if (!channel.has_member(tx.initiator) || !channel.has_member(tx.responder)) {
      throw Error(Errc::ChannelAccessDenied,
                  "both parties must belong to the channel");
    }
    round.eligible = channel.members;
    for (const std::string& name : peer_order_) {
      if (channel.has_member(peers_.at(name).identity.member_id)) {
        recipients.push_back(name);
      }
    }
  } else {
    for (const auto& [id, identity] : canonical_registry_.members()) {
      round.eligible.insert(id);
    }
    recipients = peer_order_;
  }
  round_ = std::move(round);

  const std::int64_t t = clock_;
  Proposal proposal;
  proposal.transaction = tx;
  proposal.proposer = proposer.identity.member_id;
  if (private_payload) proposal.private_state = private_payload->state;
  for (const std::string& name : recipients) {
    send(proposer_peer, name, MsgPropose{proposal});
  }
  // After one hop out and one hop back every reachable vote is in; the
  // decision timer fires strictly after.
  Message decide_msg;
  decide_msg.send_time = t;
  decide_msg.deliver_time = t + 3;
  decide_msg.sender = proposer_peer;
  decide_msg.seq = next_seq_++;
  decide_msg.to = proposer_peer;
  decide_msg.payload = MsgDecide{tx.tx_id};
  if (proposer.up) queue_.push(std::move(decide_msg));
  log(t, "propose", proposer_peer, "*", short_hex(tx.tx_id));
  drain();

  Round finished = std::move(*round_);
  round_.reset();
  if (finished.result) return *finished.result;
  throw Error(Errc::NetworkStalled,
              "no quorum reachable for " + short_hex(tx.tx_id));
}

void SimNetwork::seal() {
  const std::int64_t t = ++clock_;
  broadcast("", MsgSeal{});
  log(t, "seal_command", "*", "*", "");
  drain();
}

void SimNetwork::inject_fault(const Fault& fault) {
  const std::int64_t t = ++clock_;
  switch (fault.kind) {
    case FaultKind::DropPeer: {
      node(fault.peer).up = false;
      log(t, "drop", fault.peer, "", "");
      break;
    }
    case FaultKind::RestorePeer: {
      node(fault.peer).up = true;
      log(t, "restore", fault.peer, "", "");
      start_sync(fault.peer);
      break;
    }
    case FaultKind::SeverLink: {
      node(fault.peer);
      node(fault.other);
      severed_.insert(link_key(fault.peer, fault.other));
      log(t, "sever", fault.peer, fault.other, "");
      break;
    }
  }
  drain();
}

void SimNetwork::start_sync(const std::string& name) {
  const PeerNode& restored = peer(name);
  // Fetch from the longest-chained live peer we can still talk to; join
  // order breaks ties.
  const std::string* donor = nullptr;
  std::size_t best = 0;
  for (const std::string& candidate : peer_order_) {
    if (candidate == name) continue;
    const PeerNode& p = peers_.at(candidate);
    if (!p.up || !link_up(name, candidate)) continue;
    if (donor == nullptr || p.chain.size() > best) {
      donor = &candidate;
      best = p.chain.size();
    }
  }
  if (donor == nullptr) {
    log(clock_, "sync_skipped", name, "", "no live peer reachable");
    return;
  }
  send(name, *donor, MsgSyncReq{static_cast<std::int64_t>(restored.chain.size())});
}

void SimNetwork::seal_peer(PeerNode& peer, std::int64_t at) {
  if (peer.pool.empty()) return;
  Block block = seal_block(peer.pool, peer.chain, at);
  peer.pool.clear();
  log(at, "seal", peer.name, "",
      "block " + std::to_string(block.index) + " " + short_hex(block.block_digest));
}

void SimNetwork::handle_commit(PeerNode& to, const MsgCommit& msg, std::int64_t at) {
  if (!msg.result.accepted) return;
  PendingTransaction pending{msg.tx, true};
  auto pos = std::find_if(
      to.pool.begin(), to.pool.end(), [&](const PendingTransaction& other) {
        if (other.tx.logical_time != pending.tx.logical_time) {
          return pending.tx.logical_time < other.tx.logical_time;
        }
        return pending.tx.tx_id < other.tx.tx_id;
      });
  to.pool.insert(pos, std::move(pending));

  if (msg.tx.channel_id && msg.private_state) {
    auto ch = to.channels.find(*msg.tx.channel_id);
    if (ch != to.channels.end() && ch->second.has_member(to.identity.member_id)) {
      SideStore& side = to.side_stores[*msg.tx.channel_id];
      side.tx_state[msg.tx.tx_id.hex()] = *msg.private_state;
      for (const auto& [digest, body] : msg.private_resources) {
        side.resources.put_raw(digest, body);
      }
    }
  }
  if (to.pool.size() >= static_cast<std::size_t>(config_.batch_size)) {
    seal_peer(to, at);
  }
}

void SimNetwork::deliver(const Message& message) {
  auto it = peers_.find(message.to);
  if (it == peers_.end()) return;
  PeerNode& target = it->second;
  if (!target.up) return;
  if (!link_up(message.sender, message.to)) return;
  const std::int64_t at = message.deliver_time;

  if (const auto* propose = std::get_if<MsgPropose>(&message.payload)) {
    ValidationContext ctx{&target.registry, &target.contracts, &target.channels};
    Endorsement verdict = validate_proposal(ctx, propose->proposal,
                                            target.identity.member_id, target.seed);
    log(at, "validate", message.to, message.sender,
        verdict.verdict == VerdictKind::Endorse
            ? "Endorse"
            : std::string("Reject:") + reject_reason_name(verdict.reason));
    send(message.to, message.sender, MsgEndorse{std::move(verdict)});
  } else if (const auto* endorse = std::get_if<MsgEndorse>(&message.payload)) {
    if (round_ && round_->tx_id == endorse->endorsement.tx_id &&
        round_->proposer == message.to) {
      round_->received.push_back(endorse->endorsement);
    }
  } else if (const auto* decide_msg = std::get_if<MsgDecide>(&message.payload)) {
    if (!round_ || round_->tx_id != decide_msg->tx_id) return;
    ConsensusResult result =
        decide_among(round_->received, round_->eligible, target.registry);
    log(at, "decide", message.to, "*",
        (result.accepted ? "accepted " : "not-accepted ") +
            std::to_string(round_->received.size()) + " votes, quorum " +
            std::to_string(result.quorum_size));
    if (result.accepted) {
      round_->result = result;
      MsgCommit commit{round_->tx, result, std::nullopt, {}};
      MsgCommit member_commit{round_->tx, result, round_->private_state,
                              round_->private_resources};
      for (const std::string& name : peer_order_) {
        const bool gets_private =
            round_->private_state &&
            round_->eligible.count(peers_.at(name).identity.member_id) != 0;
        send(message.to, name, gets_private ? member_commit : commit);
      }
    } else if (static_cast<std::int64_t>(round_->received.size()) <
               result.quorum_size) {
      round_->stalled = true;  // even unanimous responders could not decide
    } else {
      round_->result = result;
    }
  } else if (const auto* commit = std::get_if<MsgCommit>(&message.payload)) {
    log(at, "commit", message.sender, message.to, short_hex(commit->tx.tx_id));
    handle_commit(target, *commit, at);
  } else if (std::get_if<MsgSeal>(&message.payload) != nullptr) {
    seal_peer(target, at);
  } else if (const auto* admit = std::get_if<MsgAdmit>(&message.payload)) {
    if (!target.registry.has(admit->identity.member_id)) {
      target.registry.admit(admit->identity, admit->record);
    }
  } else if (const auto* channel = std::get_if<MsgChannel>(&message.payload)) {
    target.channels.insert_or_assign(channel->channel.channel_id, channel->channel);
    if (channel->channel.has_member(target.identity.member_id)) {
      target.side_stores.try_emplace(channel->channel.channel_id);
    }
  } else if (const auto* req = std::get_if<MsgSyncReq>(&message.payload)) {
    MsgSyncResp resp;
    const auto& blocks = target.chain.blocks;
    for (std::size_t k = static_cast<std::size_t>(std::max<std::int64_t>(0, req->from_index));
         k < blocks.size(); ++k) {
      resp.blocks.push_back(blocks[k]);
    }
    resp.pool = target.pool;
    resp.registry = target.registry;
    resp.channels = target.channels;
    auto requester = peers_.find(message.sender);
    if (requester != peers_.end()) {
      for (const auto& [channel_id, side] : target.side_stores) {
        auto ch = target.channels.find(channel_id);
        if (ch != target.channels.end() &&
            ch->second.has_member(requester->second.identity.member_id)) {
          resp.side_stores.emplace(channel_id, side);
        }
      }
    }
    log(at, "sync_req", message.sender, message.to,
        std::to_string(resp.blocks.size()) + " blocks behind");
    send(message.to, message.sender, std::move(resp));
  } else if (const auto* resp = std::get_if<MsgSyncResp>(&message.payload)) {
    std::size_t adopted = 0;
    for (const Block& block : resp->blocks) {
      const bool links = block.index == static_cast<std::int64_t>(target.chain.size()) &&
                         block.prev_digest == target.chain.tip_digest() &&
                         block.block_digest == block_digest_of(block);
      if (!links) break;  // refuse anything that does not validate
      target.chain.blocks.push_back(block);
      ++adopted;
    }
    target.pool = resp->pool;
    if (resp->registry.size() > target.registry.size()) {
      target.registry = resp->registry;
    }
    for (const auto& [id, channel] : resp->channels) {
      target.channels.insert_or_assign(id, channel);
      if (channel.has_member(target.identity.member_id)) {
        target.side_stores.try_emplace(id);
      }
    }
    for (const auto& [channel_id, side] : resp->side_stores) {
      SideStore& mine = target.side_stores[channel_id];
      for (const auto& [txid, state] : side.tx_state) {
        mine.tx_state.insert_or_assign(txid, state);
      }
      for (const auto& [digest, body] : side.resources.entries()) {
        mine.resources.put_raw(digest, body);
      }
    }
    log(at, "sync_resp", message.sender, message.to,
        "adopted " + std::to_string(adopted) + " blocks");
  }
}

SimNetwork SimNetwork::resume(SimConfig config, MembershipRegistry registry,
                              std::vector<PeerNode> peers,
                              std::map<std::string, Channel> channels,
                              DatasetStore datasets, ResourceStore resources) {
  SimNetwork net(config);
  net.canonical_registry_ = std::move(registry);
  net.channels_ = std::move(channels);
  net.datasets_ = std::move(datasets);
  net.resources_ = std::move(resources);
  std::sort(peers.begin(), peers.end(),
            [](const PeerNode& a, const PeerNode& b) { return a.name < b.name; });
  std::int64_t latest = 0;
  for (PeerNode& p : peers) {
    p.registry = net.canonical_registry_;
    p.channels = net.channels_;
    if (!p.contracts.has(kWorkflowContractId)) p.contracts = builtin_contracts();
    for (const Block& block : p.chain.blocks) {
      latest = std::max(latest, block.sealed_time);
      for (const Transaction& tx : block.transactions) {
        latest = std::max(latest, tx.logical_time);
      }
    }
    net.peer_order_.push_back(p.name);
    net.peers_.emplace(p.name, std::move(p));
  }
  net.clock_ = latest;
  return net;
}

std::vector<ScriptCommand> parse_script(const std::string& text) {
  std::vector<ScriptCommand> commands;
  std::istringstream in(text);
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    std::string token;
    while (fields >> token) tokens.push_back(token);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    ScriptCommand cmd;
    cmd.line = line_no;
    cmd.verb = tokens.front();
    cmd.args.assign(tokens.begin() + 1, tokens.end());
    commands.push_back(std::move(cmd));
  }
  return commands;
}

namespace {

[[noreturn]] void script_error(std::int64_t line, const std::string& what) {
  throw Error(Errc::ScriptError, "line " + std::to_string(line) + ": " + what,
              line);
}

Dataset parse_point_list(const std::string& text, std::int64_t line) {
  Dataset out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t sep = text.find(';', pos);
    if (sep == std::string::npos) sep = text.size();
    const std::string pair = text.substr(pos, sep - pos);
    pos = sep + 1;
    const std::size_t comma = pair.find(',');
    if (comma == std::string::npos) script_error(line, "point must be x,y");
    char* end = nullptr;
    const std::string xs = pair.substr(0, comma);
    const std::string ys = pair.substr(comma + 1);
    const double x = std::strtod(xs.c_str(), &end);
    if (end != xs.c_str() + xs.size()) script_error(line, "bad x in point list");
    const double y = std::strtod(ys.c_str(), &end);
    if (end != ys.c_str() + ys.size()) script_error(line, "bad y in point list");
    if (!std::isfinite(x) || !std::isfinite(y)) {
      script_error(line, "non-finite value in point list");
    }
    out.push_back({x, y});
  }
  if (out.empty()) script_error(line, "empty point list");
  return out;
}

struct ProposeArgs {
  std::map<std::string, std::string> state;
  ProvOptions prov;
};

ProposeArgs parse_propose_state(const std::vector<std::string>& kvs,
                                std::size_t first, std::int64_t line) {
  ProposeArgs out;
  for (std::size_t i = first; i < kvs.size(); ++i) {
    const std::string& kv = kvs[i];
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) script_error(line, "expected key=value, got \"" + kv + "\"");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "workflow") {
      WorkflowDescription wf;
      try {
        wf = !value.empty() && value.front() == '{'
                 ? parse_workflow(value)
                 : parse_workflow_expression(value);
      } catch (const Error& e) {
        script_error(line, e.what());
      }
      out.state[kWorkflowStateKey] = serialize_workflow(wf);
    } else if (key == "prov") {
      if (value == "embedded") {
        out.prov.mode = ProvMode::Embedded;
      } else if (value == "reference") {
        out.prov.mode = ProvMode::Reference;
      } else if (value == "both") {
        out.prov.mode = ProvMode::Both;
      } else {
        script_error(line, "prov must be embedded|reference|both");
      }
    } else if (key == "rep") {
      if (value == "tree") {
        out.prov.with_tree = true;
        out.prov.with_events = false;
      } else if (value == "events") {
        out.prov.with_tree = false;
        out.prov.with_events = true;
      } else if (value == "both") {
        out.prov.with_tree = true;
        out.prov.with_events = true;
      } else {
        script_error(line, "rep must be tree|events|both");
      }
    } else {
      out.state[key] = value;
    }
  }
  return out;
}

std::map<std::string, std::string> side_state_of(const SimNetwork& net,
                                                 const std::string& peer_name,
                                                 const Transaction& tx) {
  if (!tx.channel_id) return tx.state;
  const PeerNode& p = net.peer(peer_name);
  auto side = p.side_stores.find(*tx.channel_id);
  if (side == p.side_stores.end()) return tx.state;
  auto entry = side->second.tx_state.find(tx.tx_id.hex());
  if (entry == side->second.tx_state.end()) return tx.state;
  return entry->second;
}

void rename_entity(WorkflowDescription& wf, const std::string& from,
                   const std::string& to) {
  for (Step& step : wf.steps) {
    for (auto& [role, name] : step.inputs) {
      if (name == from) name = to;
    }
    for (auto& [role, name] : step.outputs) {
      if (name == from) name = to;
    }
  }
}

}  // namespace

RunResult run_network(const SimConfig& config, const std::string& script_text) {
  RunResult result{SimNetwork(config), {}, {}};
  SimNetwork& net = result.network;

  for (const ScriptCommand& cmd : parse_script(script_text)) {
    try {
      if (cmd.verb == "join") {
        if (cmd.args.size() != 2) script_error(cmd.line, "join <name> <role>");
        net.join_peer(cmd.args[0], role_from_name(cmd.args[1]));
      } else if (cmd.verb == "dataset") {
        if (cmd.args.size() != 2) script_error(cmd.line, "dataset <name> <x,y;...>");
        if (!safe_name(cmd.args[0])) {
          script_error(cmd.line, "dataset name \"" + cmd.args[0] + "\" is not usable");
        }
        net.datasets().put(cmd.args[0], parse_point_list(cmd.args[1], cmd.line));
      } else if (cmd.verb == "channel") {
        if (cmd.args.size() < 3) {
          script_error(cmd.line, "channel <alias> <peer> <peer> [...]");
        }
        std::set<std::string> members(cmd.args.begin() + 1, cmd.args.end());
        Channel channel = net.create_channel(members);
        result.channel_aliases[cmd.args[0]] = channel.channel_id;
      } else if (cmd.verb == "propose" || cmd.verb == "private") {
        const bool is_private = cmd.verb == "private";
        const std::size_t base = is_private ? 1 : 0;
        if (cmd.args.size() < base + 4) {
          script_error(cmd.line,
                       is_private
                           ? "private <channel> <initiator> <responder> <asset> <contract> [k=v...]"
                           : "propose <initiator> <responder> <asset> <contract> [k=v...]");
        }
        std::optional<std::string> channel_id;
        if (is_private) {
          auto alias = result.channel_aliases.find(cmd.args[0]);
          if (alias == result.channel_aliases.end()) {
            script_error(cmd.line, "unknown channel alias \"" + cmd.args[0] + "\"");
          }
          channel_id = alias->second;
        }
        ProposeArgs args = parse_propose_state(cmd.args, base + 4, cmd.line);
        if (cmd.args[base + 3] == kWorkflowContractId &&
            args.state.count(kWorkflowStateKey) == 0) {
          script_error(cmd.line, "workflow contract needs workflow=<expression>");
        }
        PrivatePayload payload;
        Transaction tx = net.prepare_workflow_transaction(
            cmd.args[base + 0], cmd.args[base + 1], cmd.args[base + 2],
            cmd.args[base + 3], args.state, args.prov, channel_id,
            is_private ? &payload : nullptr);
        result.decisions.push_back(net.propose_transaction(
            cmd.args[base + 0], tx,
            is_private ? std::optional(std::move(payload)) : std::nullopt));
      } else if (cmd.verb == "derive") {
        if (cmd.args.size() < 4) {
          script_error(cmd.line,
                       "derive <parent-asset> <initiator> <responder> <new-asset> [old=new...]");
        }
        std::vector<std::pair<std::string, std::string>> renames;
        for (std::size_t i = 4; i < cmd.args.size(); ++i) {
          const std::size_t eq = cmd.args[i].find('=');
          if (eq == std::string::npos) script_error(cmd.line, "expected old=new");
          renames.emplace_back(cmd.args[i].substr(0, eq), cmd.args[i].substr(eq + 1));
        }
        result.decisions.push_back(run_derive(net, cmd.args[0], cmd.args[1],
                                              cmd.args[2], cmd.args[3], renames));
      } else if (cmd.verb == "seal") {
        if (!cmd.args.empty()) script_error(cmd.line, "seal takes no arguments");
        net.seal();
      } else if (cmd.verb == "drop") {
        if (cmd.args.size() != 1) script_error(cmd.line, "drop <peer>");
        net.inject_fault({FaultKind::DropPeer, cmd.args[0], ""});
      } else if (cmd.verb == "restore") {
        if (cmd.args.size() != 1) script_error(cmd.line, "restore <peer>");
        net.inject_fault({FaultKind::RestorePeer, cmd.args[0], ""});
      } else if (cmd.verb == "sever") {
        if (cmd.args.size() != 2) script_error(cmd.line, "sever <a> <b>");
        net.inject_fault({FaultKind::SeverLink, cmd.args[0], cmd.args[1]});
      } else {
        script_error(cmd.line, "unknown command \"" + cmd.verb + "\"");
      }
    } catch (const Error& e) {
      if (e.code() == Errc::ScriptError || e.code() == Errc::NetworkStalled) {
        throw;
      }
      script_error(cmd.line, e.what());
    }
  }
  return result;
}

ConsensusResult run_derive(
    SimNetwork& net, const std::string& parent_asset,
    const std::string& initiator_peer, const std::string& responder_peer,
    const std::string& new_asset,
    const std::vector<std::pair<std::string, std::string>>& renames) {
  const PeerNode& p = net.peer(initiator_peer);
  const Transaction* parent = nullptr;
  for (const Block& block : p.chain.blocks) {
    for (const Transaction& tx : block.transactions) {
      if (tx.asset_id == parent_asset) parent = &tx;
    }
  }
  for (const PendingTransaction& pending : p.pool) {
    if (pending.tx.asset_id == parent_asset) parent = &pending.tx;
  }
  if (parent == nullptr) {
    throw Error(Errc::UnknownParent,
                "no committed transaction created asset \"" + parent_asset + "\"");
  }
  Transaction parent_tx = *parent;
  parent_tx.state = side_state_of(net, initiator_peer, parent_tx);
  ResourceStore side_view = net.resources();
  if (parent_tx.channel_id) {
    auto side = p.side_stores.find(*parent_tx.channel_id);
    if (side != p.side_stores.end()) {
      for (const auto& [digest, body] : side->second.resources.entries()) {
        side_view.put_raw(digest, body);
      }
    }
  }
  WorkflowDescription wf = reconstruct_workflow(extract_record(parent_tx, side_view));
  for (const auto& [from, to] : renames) rename_entity(wf, from, to);
  const std::string old_asset = workflow_asset(wf);
  if (old_asset != new_asset) rename_entity(wf, old_asset, new_asset);
  Transaction draft =
      derive_workflow(parent_tx, wf, net.member_id_of(initiator_peer),
                      net.member_id_of(responder_peer), new_asset);
  ProvOptions prov;
  Transaction tx = net.prepare_workflow_transaction(
      initiator_peer, responder_peer, new_asset, draft.contract_id, draft.state,
      prov, std::nullopt, nullptr);
  return net.propose_transaction(initiator_peer, tx);
}

const std::string& demo_script() {
  static const std::string script = R"(# five peers: two workflow systems, two clients, one staging node
join wms1 WMS
join wms2 WMS
join alice CLIENT
join bob CLIENT
join stage1 STAGING

# input datasets
dataset B 0,0;1,1;2,2
dataset B2 0,1;1,3;2,5
dataset D 0,5;1,5;2,5

# three workflows exercising every capture mode
propose alice wms1 A workflow_execution workflow=linreg:points=B,model=A;store:data=A,file=C prov=both rep=both
propose bob wms2 S workflow_execution workflow=scale:points=D,scaled=S,factor=2;store:data=S,file=F prov=embedded rep=events
propose alice wms2 M2 workflow_execution workflow=linreg:points=B2,model=M2;store:data=M2,file=C2 prov=reference rep=tree

# rerun the first workflow against the second dataset
derive A alice wms1 A3 B=B2

# a private channel between the two clients
channel c1 alice bob
private c1 alice bob P workflow_execution workflow=linreg:points=B2,model=P;store:data=P,file=CP prov=embedded rep=both

seal
)";
  return script;
}

}  // namespace ledgerflow
