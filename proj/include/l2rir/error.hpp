#pragma once

#include <stdexcept>
#include <string>

namespace l2rir {

// Numeric values are shared with the C API status codes in l2rir.h.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimension = 2,
  kDomain = 3,
  kBounds = 4,
  kInsufficientData = 5,
  kConfig = 6,
  kIo = 7,
  kNumeric = 8,
  kInternal = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define L2RIR_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

L2RIR_DEFINE_ERROR(InvalidArgumentError, kInvalidArgument)
L2RIR_DEFINE_ERROR(DimensionError, kDimension)
L2RIR_DEFINE_ERROR(DomainError, kDomain)
L2RIR_DEFINE_ERROR(BoundsError, kBounds)
L2RIR_DEFINE_ERROR(InsufficientDataError, kInsufficientData)
L2RIR_DEFINE_ERROR(ConfigError, kConfig)
L2RIR_DEFINE_ERROR(IoError, kIo)
L2RIR_DEFINE_ERROR(NumericError, kNumeric)

#undef L2RIR_DEFINE_ERROR

}  // namespace l2rir
