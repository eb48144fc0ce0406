#include "ebshrink/errors.hpp"

namespace ebshrink {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io:
      return 2;
    case ErrorKind::Precondition:
      return 3;
    case ErrorKind::Numerical:
      return 4;
  }
  return 4;
}

}  // namespace ebshrink
