#pragma once

#include <stdexcept>
#include <string>

namespace linebo {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LINEBO_DEFINE_ERROR(Name)      \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

LINEBO_DEFINE_ERROR(OutOfBounds);
LINEBO_DEFINE_ERROR(DimensionMismatch);
LINEBO_DEFINE_ERROR(ZeroDirection);
LINEBO_DEFINE_ERROR(InvalidSpace);
LINEBO_DEFINE_ERROR(InvalidData);
LINEBO_DEFINE_ERROR(InsufficientData);
LINEBO_DEFINE_ERROR(SingularKernel);
LINEBO_DEFINE_ERROR(ModelNotFitted);
LINEBO_DEFINE_ERROR(TooManyQueries);
LINEBO_DEFINE_ERROR(BadRange);
LINEBO_DEFINE_ERROR(InvalidArgument);
LINEBO_DEFINE_ERROR(ConfigError);
LINEBO_DEFINE_ERROR(IoError);

#undef LINEBO_DEFINE_ERROR

}  // namespace linebo
