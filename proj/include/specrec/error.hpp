// specrec/error.hpp

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace specrec {

// Error category, mapped to CLI exit codes (usage=1, data=2, numeric=3).
enum class ErrorKind { Usage = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define SPECREC_DEFINE_ERROR(NAME, KIND)                    \
  class NAME : public Error {                               \
   public:                                                  \
    explicit NAME(const std::string& what)                  \
        : Error(ErrorKind::KIND, std::string(#NAME ": ") + what) {} \
  }

SPECREC_DEFINE_ERROR(UsageError, Usage);

SPECREC_DEFINE_ERROR(SignalTooShort, Data);
SPECREC_DEFINE_ERROR(SignalEmpty, Data);
SPECREC_DEFINE_ERROR(ShapeMismatch, Data);
SPECREC_DEFINE_ERROR(NonHermitianInput, Data);
SPECREC_DEFINE_ERROR(EmptyBatch, Data);
SPECREC_DEFINE_ERROR(GraphNotRecorded, Data);
SPECREC_DEFINE_ERROR(UnsupportedFormat, Data);
SPECREC_DEFINE_ERROR(IoFailure, Data);

SPECREC_DEFINE_ERROR(DegenerateWindowSum, Numeric);
SPECREC_DEFINE_ERROR(NonFiniteActivation, Numeric);
SPECREC_DEFINE_ERROR(NonFiniteLoss, Numeric);

#undef SPECREC_DEFINE_ERROR

}  // namespace specrec
