#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ledgerflow/bytes.hpp"
#include "ledgerflow/canon.hpp"
#include "ledgerflow/crypto.hpp"
#include "ledgerflow/digest.hpp"

namespace ledgerflow {

enum class Role { WMS, CLIENT, STAGING };

std::string role_name(Role role);
Role role_from_name(std::string_view name);

/// An admitted peer. member_id is the hex digest of the public key, so
/// identities are self-describing and collision-resistant.
struct PeerIdentity {
  std::string member_id;
  Bytes public_key;
  Role role = Role::CLIENT;
  std::string display_name;
  crypto::PublicKey key_handle;  // cached verifier, not serialized
};

canon::Value to_value(const PeerIdentity& identity);
std::string canonical_serialize(const PeerIdentity& identity);
PeerIdentity identity_from_value(const canon::Value& value);

struct AdmissionRecord {
  std::string member_id;
  std::vector<std::string> approvers;  // sorted
  std::int64_t logical_time = 0;
};

class MembershipRegistry {
 public:
  std::size_t size() const { return members_.size(); }
  bool has(const std::string& member_id) const;
  /// Throws Error(UnknownMember) when absent.
  const PeerIdentity& get(const std::string& member_id) const;
  const std::map<std::string, PeerIdentity>& members() const { return members_; }
  const std::vector<AdmissionRecord>& admission_log() const { return admission_log_; }

  /// Used by approve_join and registry file loading only.
  void admit(PeerIdentity identity, AdmissionRecord record);

 private:
  std::map<std::string, PeerIdentity> members_;
  std::vector<AdmissionRecord> admission_log_;
};

struct JoinRequest {
  PeerIdentity candidate;
  Bytes signature;  // candidate's signature over its canonical serialization
};

struct Approval {
  std::string member_id;
  Bytes signature;  // over the candidate's canonical serialization
};

struct GeneratedIdentity {
  PeerIdentity identity;
  Bytes seed;  // 32-byte private key material
};

/// Deterministic identity from a seed of at least 32 bytes.
GeneratedIdentity generate_identity(Role role, const Bytes& seed,
                                    std::string display_name);

JoinRequest make_join_request(const PeerIdentity& candidate, const Bytes& seed);
Approval make_approval(const PeerIdentity& candidate,
                       const std::string& approver_id, const Bytes& approver_seed);

/// Admission by strict majority of the current membership. An empty registry
/// bootstraps: the first valid candidate self-admits with zero approvals.
/// Returns the extended registry; the input registry is left untouched.
MembershipRegistry approve_join(const MembershipRegistry& registry,
                                const JoinRequest& request,
                                const std::vector<Approval>& approvals,
                                std::int64_t logical_time);

/// True iff `signature` verifies over `message` under the registered key of
/// `member_id`. Throws Error(UnknownMember) for unregistered ids.
bool verify_signature(const Bytes& message, const Bytes& signature,
                      const std::string& member_id,
                      const MembershipRegistry& registry);

/// Replays the admission log from bootstrap, re-checking every quorum.
/// Returns false if any entry lacks quorum or references unknown ids, or if
/// the final member set differs from the log.
bool audit_admission_log(const MembershipRegistry& registry);

void write_registry_file(const std::filesystem::path& path,
                         const MembershipRegistry& registry);
MembershipRegistry read_registry_file(const std::filesystem::path& path);

/// Key material file: 64 hex chars, owner read/write only.
void write_seed_file(const std::filesystem::path& path, const Bytes& seed);
Bytes read_seed_file(const std::filesystem::path& path);

}  // namespace ledgerflow
