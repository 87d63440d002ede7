#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ledgerflow {

enum class Errc {
  // serialization / io
  SerializationError,
  ParseError,
  IoError,
  // ledger_core
  EmptyBlock,
  UnverifiedTransaction,
  // membership
  SeedTooShort,
  InsufficientApprovals,
  DuplicateMember,
  BadApprovalSignature,
  UnknownMember,
  // consensus_net
  NotAMember,
  NetworkStalled,
  DuplicateEndorser,
  ScriptError,
  UnknownPeer,
  // contracts
  DuplicateContract,
  ContractNotFound,
  StepFailure,
  MalformedWorkflow,
  DegenerateInput,
  // provenance
  InconsistentTrace,
  EmptyTrace,
  ReservedKeyCollision,
  NoProvenance,
  UnresolvableReference,
  DigestMismatch,
  IrrecoverableRecord,
  UnknownParent,
  // access
  UnknownTransaction,
  CyclicLineage,
  ChannelAccessDenied,
  TooFewMembers,
};

const char* errc_name(Errc code);

/// The project-wide exception. `index()` carries a step index or script line
/// number when the failure has one, -1 otherwise.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}
  Error(Errc code, std::string message, std::int64_t index)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        index_(index) {}

  Errc code() const { return code_; }
  std::int64_t index() const { return index_; }

 private:
  Errc code_;
  std::int64_t index_ = -1;
};

}  // namespace ledgerflow
