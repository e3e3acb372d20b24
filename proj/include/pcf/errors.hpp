#pragma once

#include <stdexcept>
#include <string>

namespace pcf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define PCF_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                     \
   public:                                                        \
    using Error::Error;                                           \
    const char* kind() const noexcept override { return #Name; }  \
  };

// The metric left the Kähler cone (some eigenvalue of g^{-1}g_phi <= eps).
PCF_DEFINE_ERROR(PositivityLoss)
PCF_DEFINE_ERROR(SpecError)
PCF_DEFINE_ERROR(SolvabilityError)
PCF_DEFINE_ERROR(SolverDivergence)
PCF_DEFINE_ERROR(NumericalOverflow)
PCF_DEFINE_ERROR(ClassError)
PCF_DEFINE_ERROR(UnsupportedBackend)
PCF_DEFINE_ERROR(EigSolveFailure)
PCF_DEFINE_ERROR(FitError)
PCF_DEFINE_ERROR(UnknownScenario)
PCF_DEFINE_ERROR(IoError)
// A computed field failed an identity it must satisfy (e.g. a trace check).
PCF_DEFINE_ERROR(InvariantViolation)

#undef PCF_DEFINE_ERROR

/// Configuration error carrying the offending key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& reason)
      : Error(key + ": " + reason), key_(std::move(key)) {}
  const char* kind() const noexcept override { return "ConfigError"; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace pcf
