#pragma once

#include <stdexcept>
#include <string>

namespace oneshot {

/// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ONESHOT_DEFINE_ERROR(Name)      \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

ONESHOT_DEFINE_ERROR(ShapeError);
ONESHOT_DEFINE_ERROR(SpecError);
ONESHOT_DEFINE_ERROR(FormatError);
ONESHOT_DEFINE_ERROR(DomainError);
ONESHOT_DEFINE_ERROR(IndexError);
ONESHOT_DEFINE_ERROR(ContractError);
ONESHOT_DEFINE_ERROR(LabeledDataError);
ONESHOT_DEFINE_ERROR(ConfigError);
ONESHOT_DEFINE_ERROR(SamplingError);
ONESHOT_DEFINE_ERROR(TrainingError);
ONESHOT_DEFINE_ERROR(ProtocolError);

#undef ONESHOT_DEFINE_ERROR

}  // namespace oneshot
