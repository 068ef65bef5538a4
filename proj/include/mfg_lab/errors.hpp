#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MFG_LAB_DECLARE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    explicit Name(const std::string& what)  \
        : Error(#Name ": " + what) {}       \
  }

MFG_LAB_DECLARE_ERROR(ParamConstraintViolation);
MFG_LAB_DECLARE_ERROR(NonPositiveDensity);
MFG_LAB_DECLARE_ERROR(GradientMismatch);
MFG_LAB_DECLARE_ERROR(BracketTooSmall);
MFG_LAB_DECLARE_ERROR(EnvelopeNotApplicable);
MFG_LAB_DECLARE_ERROR(EvaluationFailure);
MFG_LAB_DECLARE_ERROR(GridTooSmall);
MFG_LAB_DECLARE_ERROR(NegativePNonNonnegativeField);
MFG_LAB_DECLARE_ERROR(BallEscapesDomain);
MFG_LAB_DECLARE_ERROR(DomainError);
MFG_LAB_DECLARE_ERROR(OriginInDomain);
MFG_LAB_DECLARE_ERROR(BranchPreconditionViolated);
MFG_LAB_DECLARE_ERROR(SignViolation);
MFG_LAB_DECLARE_ERROR(ModelMismatch);
MFG_LAB_DECLARE_ERROR(ConfigError);

#undef MFG_LAB_DECLARE_ERROR

}  // namespace mfg
