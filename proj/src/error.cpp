#include "ledgerflow/error.hpp"

namespace ledgerflow {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::SerializationError: return "SerializationError";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::EmptyBlock: return "EmptyBlock";
    case Errc::UnverifiedTransaction: return "UnverifiedTransaction";
    case Errc::SeedTooShort: return "SeedTooShort";
    case Errc::InsufficientApprovals: return "InsufficientApprovals";
    case Errc::DuplicateMember: return "DuplicateMember";
    case Errc::BadApprovalSignature: return "BadApprovalSignature";
    case Errc::UnknownMember: return "UnknownMember";
    case Errc::NotAMember: return "NotAMember";
    case Errc::NetworkStalled: return "NetworkStalled";
    case Errc::DuplicateEndorser: return "DuplicateEndorser";
    case Errc::ScriptError: return "ScriptError";
    case Errc::UnknownPeer: return "UnknownPeer";
    case Errc::DuplicateContract: return "DuplicateContract";
    case Errc::ContractNotFound: return "ContractNotFound";
    case Errc::StepFailure: return "StepFailure";
    case Errc::MalformedWorkflow: return "MalformedWorkflow";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::InconsistentTrace: return "InconsistentTrace";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::ReservedKeyCollision: return "ReservedKeyCollision";
    case Errc::NoProvenance: return "NoProvenance";
    case Errc::UnresolvableReference: return "UnresolvableReference";
    case Errc::DigestMismatch: return "DigestMismatch";
    case Errc::IrrecoverableRecord: return "IrrecoverableRecord";
    case Errc::UnknownParent: return "UnknownParent";
    case Errc::UnknownTransaction: return "UnknownTransaction";
    case Errc::CyclicLineage: return "CyclicLineage";
    case Errc::ChannelAccessDenied: return "ChannelAccessDenied";
    case Errc::TooFewMembers: return "TooFewMembers";
  }
  return "UnknownError";
}

}  // namespace ledgerflow
