#pragma once

#include <stdexcept>
#include <string>

namespace ebshrink {

/// Broad failure family; the CLI maps it to an exit status.
enum class ErrorKind {
  Io,            // unreadable or unwritable files, malformed CSV
  Precondition,  // bad dimensions, regimes, parameters
  Numerical      // singular matrices, degenerate weights, tuning failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define EBSHRINK_DEFINE_ERROR(Name, Kind)                                       \
  class Name : public Error {                                                   \
   public:                                                                      \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}    \
  };

EBSHRINK_DEFINE_ERROR(IoError, Io)
EBSHRINK_DEFINE_ERROR(DimensionError, Precondition)
EBSHRINK_DEFINE_ERROR(InputError, Precondition)
EBSHRINK_DEFINE_ERROR(DomainError, Precondition)
EBSHRINK_DEFINE_ERROR(RegimeError, Precondition)
EBSHRINK_DEFINE_ERROR(UnsupportedAspectRatioError, Precondition)
EBSHRINK_DEFINE_ERROR(InsufficientSamplesError, Precondition)
EBSHRINK_DEFINE_ERROR(PreconditionError, Precondition)
EBSHRINK_DEFINE_ERROR(DegenerateInputError, Numerical)
EBSHRINK_DEFINE_ERROR(SingularityError, Numerical)
EBSHRINK_DEFINE_ERROR(DesignSingularityError, Numerical)
EBSHRINK_DEFINE_ERROR(TuningFailureError, Numerical)
EBSHRINK_DEFINE_ERROR(WeightDegeneracyError, Numerical)

#undef EBSHRINK_DEFINE_ERROR

/// Process exit status for an error family: 2 I/O, 3 precondition, 4 numerical.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace ebshrink
