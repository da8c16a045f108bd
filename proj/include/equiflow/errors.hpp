#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace equiflow {

enum class Errc {
  MalformedHeader,
  FieldCountMismatch,
  NonPositiveCapacityOrTime,
  SelfLoop,
  UnknownNode,
  NegativeDemand,
  IdSpaceMismatch,
  UnreachableOD,
  DomainViolation,
  UnsupportedForFamily,
  NegativeWeight,
  UnreachableDestination,
  LineSearchStall,
  Infeasible,
  NoConvergence,
  DegenerateMarginals,
  TargetUnattainable,
  SecantBreakdown,
  ConditionViolated,
  InvalidArgument,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::FieldCountMismatch: return "FieldCountMismatch";
    case Errc::NonPositiveCapacityOrTime: return "NonPositiveCapacityOrTime";
    case Errc::SelfLoop: return "SelfLoop";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::NegativeDemand: return "NegativeDemand";
    case Errc::IdSpaceMismatch: return "IdSpaceMismatch";
    case Errc::UnreachableOD: return "UnreachableOD";
    case Errc::DomainViolation: return "DomainViolation";
    case Errc::UnsupportedForFamily: return "UnsupportedForFamily";
    case Errc::NegativeWeight: return "NegativeWeight";
    case Errc::UnreachableDestination: return "UnreachableDestination";
    case Errc::LineSearchStall: return "LineSearchStall";
    case Errc::Infeasible: return "Infeasible";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::DegenerateMarginals: return "DegenerateMarginals";
    case Errc::TargetUnattainable: return "TargetUnattainable";
    case Errc::SecantBreakdown: return "SecantBreakdown";
    case Errc::ConditionViolated: return "ConditionViolated";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace equiflow
