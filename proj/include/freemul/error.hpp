#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freemul {

enum class ErrorCode {
  InvalidArgument,
  MalformedDocument,
  MassNotNormalizable,
  ZeroFirstMomentCircle,
  DeltaZeroHalfLine,
  WrongSpace,
  PoleHit,
  EtaPole,
  NotInvertible,
  ZeroConstantTerm,
  NoConvergence,
  EtaVanishes,
  BranchLost,
  MaxIterExceeded,
  DomainEscape,
  MassAuditFailure,
  InconsistentRun,
  UnwrapFailure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace freemul
