#pragma once

#include <stdexcept>
#include <string>

namespace bae {

// Broad error classes; the CLI maps them onto exit codes 1, 2 and 3.
enum class ErrorClass { usage, physics, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), cls_(cls), code_(std::move(code)) {}

  ErrorClass error_class() const noexcept { return cls_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorClass cls_;
  std::string code_;
};

#define BAE_DEFINE_ERROR(Name, cls, code)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorClass::cls, code, what) {} \
  };

BAE_DEFINE_ERROR(ConfigError, usage, "config-error")
BAE_DEFINE_ERROR(InvalidParameter, physics, "invalid-parameter")
BAE_DEFINE_ERROR(SnapToContact, physics, "snap-to-contact")
BAE_DEFINE_ERROR(BracketError, physics, "bracket-error")
BAE_DEFINE_ERROR(DivergenceError, physics, "divergence")
BAE_DEFINE_ERROR(AlignmentError, physics, "alignment-error")
BAE_DEFINE_ERROR(ConvergenceError, physics, "no-convergence")
BAE_DEFINE_ERROR(SingularMatrixError, physics, "near-singular")
BAE_DEFINE_ERROR(RangeError, physics, "range-error")
BAE_DEFINE_ERROR(IntegrationError, physics, "truncated-integral")
BAE_DEFINE_ERROR(NoSetpointError, physics, "no-setpoint")
BAE_DEFINE_ERROR(SetpointInvalidError, physics, "setpoint-invalid")
BAE_DEFINE_ERROR(IoError, io, "io-error")

#undef BAE_DEFINE_ERROR

}  // namespace bae
