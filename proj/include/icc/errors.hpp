#pragma once

#include <stdexcept>
#include <string>

namespace icc {

/// Broad failure category; the CLI maps these onto exit codes.
enum class ErrorKind { input, domain, solver };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define ICC_DEFINE_ERROR(Name, Kind)                                       \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

ICC_DEFINE_ERROR(InvalidCage, input)
ICC_DEFINE_ERROR(DegenerateCage, input)
ICC_DEFINE_ERROR(ParseError, input)
ICC_DEFINE_ERROR(NotBallLike, domain)
ICC_DEFINE_ERROR(EmptyDomain, domain)
ICC_DEFINE_ERROR(CageMismatch, domain)
ICC_DEFINE_ERROR(ZeroGradient, domain)
ICC_DEFINE_ERROR(ExitedDomain, domain)
ICC_DEFINE_ERROR(StepLimitExceeded, domain)
ICC_DEFINE_ERROR(DegenerateSourceTriangle, domain)
ICC_DEFINE_ERROR(SolverDiverged, solver)

#undef ICC_DEFINE_ERROR

}  // namespace icc
