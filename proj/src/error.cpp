#include "freemul/error.hpp"

namespace freemul {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::MassNotNormalizable: return "MassNotNormalizable";
    case ErrorCode::ZeroFirstMomentCircle: return "ZeroFirstMomentCircle";
    case ErrorCode::DeltaZeroHalfLine: return "DeltaZeroHalfLine";
    case ErrorCode::WrongSpace: return "WrongSpace";
    case ErrorCode::PoleHit: return "PoleHit";
    case ErrorCode::EtaPole: return "EtaPole";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::ZeroConstantTerm: return "ZeroConstantTerm";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EtaVanishes: return "EtaVanishes";
    case ErrorCode::BranchLost: return "BranchLost";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::DomainEscape: return "DomainEscape";
    case ErrorCode::MassAuditFailure: return "MassAuditFailure";
    case ErrorCode::InconsistentRun: return "InconsistentRun";
    case ErrorCode::UnwrapFailure: return "UnwrapFailure";
  }
  return "Unknown";
}

}  // namespace freemul
