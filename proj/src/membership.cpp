#include "ledgerflow/membership.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ledgerflow/error.hpp"

namespace ledgerflow {

std::string role_name(Role role) {
  switch (role) {
    case Role::WMS: return "WMS";
    case Role::CLIENT: return "CLIENT";
    case Role::STAGING: return "STAGING";
  }
  return "CLIENT";
}

Role role_from_name(std::string_view name) {
  if (name == "WMS") return Role::WMS;
  if (name == "CLIENT") return Role::CLIENT;
  if (name == "STAGING") return Role::STAGING;
  throw Error(Errc::ParseError, "unknown role \"" + std::string(name) + "\"");
}

canon::Value to_value(const PeerIdentity& identity) {
  canon::Value::Object obj;
  obj.emplace("display_name", identity.display_name);
  obj.emplace("member_id", identity.member_id);
  obj.emplace("public_key", to_hex(identity.public_key));
  obj.emplace("role", role_name(identity.role));
  return canon::Value(std::move(obj));
}

std::string canonical_serialize(const PeerIdentity& identity) {
  return canon::serialize(to_value(identity));
}

PeerIdentity identity_from_value(const canon::Value& value) {
  PeerIdentity id;
  id.display_name = value.at("display_name").as_string();
  id.member_id = value.at("member_id").as_string();
  id.public_key = from_hex(value.at("public_key").as_string());
  id.role = role_from_name(value.at("role").as_string());
  if (id.member_id != compute_digest(id.public_key).hex()) {
    throw Error(Errc::ParseError, "member_id does not match public key digest");
  }
  id.key_handle = crypto::PublicKey::from_bytes(id.public_key);
  return id;
}

bool MembershipRegistry::has(const std::string& member_id) const {
  return members_.count(member_id) != 0;
}

const PeerIdentity& MembershipRegistry::get(const std::string& member_id) const {
  auto it = members_.find(member_id);
  if (it == members_.end()) {
    throw Error(Errc::UnknownMember, "member " + member_id + " not registered");
  }
  return it->second;
}

void MembershipRegistry::admit(PeerIdentity identity, AdmissionRecord record) {
  members_.emplace(identity.member_id, std::move(identity));
  admission_log_.push_back(std::move(record));
}

GeneratedIdentity generate_identity(Role role, const Bytes& seed,
                                    std::string display_name) {
  crypto::KeyPair kp = crypto::keypair_from_seed(seed);
  GeneratedIdentity out;
  out.identity.public_key = kp.public_key;
  out.identity.member_id = compute_digest(kp.public_key).hex();
  out.identity.role = role;
  out.identity.display_name = std::move(display_name);
  out.identity.key_handle = crypto::PublicKey::from_bytes(kp.public_key);
  out.seed = kp.seed;
  return out;
}

JoinRequest make_join_request(const PeerIdentity& candidate, const Bytes& seed) {
  JoinRequest req;
  req.candidate = candidate;
  req.signature = crypto::sign(to_bytes(canonical_serialize(candidate)), seed);
  return req;
}

Approval make_approval(const PeerIdentity& candidate,
                       const std::string& approver_id, const Bytes& approver_seed) {
  Approval a;
  a.member_id = approver_id;
  a.signature = crypto::sign(to_bytes(canonical_serialize(candidate)), approver_seed);
  return a;
}

MembershipRegistry approve_join(const MembershipRegistry& registry,
                                const JoinRequest& request,
                                const std::vector<Approval>& approvals,
                                std::int64_t logical_time) {
  const PeerIdentity& candidate = request.candidate;
  if (candidate.member_id != compute_digest(candidate.public_key).hex()) {
    throw Error(Errc::BadApprovalSignature,
                "candidate member_id does not match its public key");
  }
  if (registry.has(candidate.member_id)) {
    throw Error(Errc::DuplicateMember,
                "member " + candidate.member_id + " already admitted");
  }
  const Bytes message = to_bytes(canonical_serialize(candidate));
  if (!crypto::verify(message, request.signature, candidate.public_key)) {
    throw Error(Errc::BadApprovalSignature, "join request signature invalid");
  }

  std::set<std::string> approvers;
  for (const Approval& a : approvals) {
    if (!registry.has(a.member_id)) {
      throw Error(Errc::BadApprovalSignature,
                  "approver " + a.member_id + " is not a member");
    }
    if (!registry.get(a.member_id).key_handle.verify(message, a.signature)) {
      throw Error(Errc::BadApprovalSignature,
                  "approval signature from " + a.member_id + " invalid");
    }
    approvers.insert(a.member_id);
  }

  // Bootstrap: an empty network admits its first member unconditionally.
  const std::size_t quorum = registry.size() / 2 + 1;
  if (registry.size() > 0 && approvers.size() < quorum) {
    throw Error(Errc::InsufficientApprovals,
                std::to_string(approvers.size()) + " of " +
                    std::to_string(quorum) + " required approvals");
  }

  PeerIdentity admitted = candidate;
  if (!admitted.key_handle.valid()) {
    admitted.key_handle = crypto::PublicKey::from_bytes(admitted.public_key);
  }
  AdmissionRecord record;
  record.member_id = admitted.member_id;
  record.approvers.assign(approvers.begin(), approvers.end());
  record.logical_time = logical_time;

  MembershipRegistry out = registry;
  out.admit(std::move(admitted), std::move(record));
  return out;
}

bool verify_signature(const Bytes& message, const Bytes& signature,
                      const std::string& member_id,
                      const MembershipRegistry& registry) {
  return registry.get(member_id).key_handle.verify(message, signature);
}

bool audit_admission_log(const MembershipRegistry& registry) {
  std::set<std::string> replayed;
  for (const AdmissionRecord& rec : registry.admission_log()) {
    if (!registry.has(rec.member_id)) return false;
    if (replayed.count(rec.member_id) != 0) return false;
    std::set<std::string> distinct(rec.approvers.begin(), rec.approvers.end());
    if (distinct.size() != rec.approvers.size()) return false;
    for (const std::string& approver : distinct) {
      if (replayed.count(approver) == 0) return false;
    }
    if (!replayed.empty() && distinct.size() < replayed.size() / 2 + 1) {
      return false;
    }
    replayed.insert(rec.member_id);
  }
  if (replayed.size() != registry.size()) return false;
  for (const auto& [id, identity] : registry.members()) {
    if (replayed.count(id) == 0) return false;
  }
  return true;
}

void write_registry_file(const std::filesystem::path& path,
                         const MembershipRegistry& registry) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  }
  for (const auto& [id, identity] : registry.members()) {
    canon::Value::Object obj = to_value(identity).as_object();
    obj.emplace("kind", "member");
    out << canon::serialize(canon::Value(std::move(obj))) << '\n';
  }
  for (const AdmissionRecord& rec : registry.admission_log()) {
    canon::Value::Object obj;
    canon::Value::List approvers;
    for (const std::string& a : rec.approvers) approvers.emplace_back(a);
    obj.emplace("approvers", std::move(approvers));
    obj.emplace("kind", "admission");
    obj.emplace("logical_time", rec.logical_time);
    obj.emplace("member_id", rec.member_id);
    out << canon::serialize(canon::Value(std::move(obj))) << '\n';
  }
}

MembershipRegistry read_registry_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::IoError, "cannot open " + path.string());
  }
  std::map<std::string, PeerIdentity> members;
  std::vector<AdmissionRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    canon::Value v = canon::parse(line);
    const std::string& kind = v.at("kind").as_string();
    if (kind == "member") {
      PeerIdentity identity = identity_from_value(v);
      members.emplace(identity.member_id, std::move(identity));
    } else if (kind == "admission") {
      AdmissionRecord rec;
      rec.member_id = v.at("member_id").as_string();
      rec.logical_time = v.at("logical_time").as_int();
      for (const canon::Value& a : v.at("approvers").as_list()) {
        rec.approvers.push_back(a.as_string());
      }
      log.push_back(std::move(rec));
    } else {
      throw Error(Errc::ParseError, "unknown registry line kind \"" + kind + "\"");
    }
  }
  // Rebuild in admission order so the log and member set stay aligned.
  MembershipRegistry registry;
  for (const AdmissionRecord& rec : log) {
    auto it = members.find(rec.member_id);
    if (it == members.end()) {
      throw Error(Errc::ParseError,
                  "admission log references unknown member " + rec.member_id);
    }
    registry.admit(it->second, rec);
  }
  if (registry.size() != members.size()) {
    throw Error(Errc::ParseError, "registry members missing from admission log");
  }
  return registry;
}

void write_seed_file(const std::filesystem::path& path, const Bytes& seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  }
  out << to_hex(seed) << '\n';
  out.close();
  std::filesystem::permissions(
      path, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write,
      std::filesystem::perm_options::replace);
}

Bytes read_seed_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::IoError, "cannot open " + path.string());
  }
  std::string line;
  std::getline(in, line);
  Bytes seed = from_hex(line);
  if (seed.size() < crypto::kSeedSize) {
    throw Error(Errc::SeedTooShort, "seed file holds fewer than 32 bytes");
  }
  return seed;
}

}  // namespace ledgerflow
