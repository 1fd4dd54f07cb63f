#pragma once

#include <stdexcept>
#include <string>

namespace pulsefield {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PULSEFIELD_DEFINE_ERROR(Name)          \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  };

PULSEFIELD_DEFINE_ERROR(InvalidArgument)
PULSEFIELD_DEFINE_ERROR(InvalidResponse)
PULSEFIELD_DEFINE_ERROR(QuadratureFailure)
PULSEFIELD_DEFINE_ERROR(NotNormalized)
PULSEFIELD_DEFINE_ERROR(NonPositiveDensity)
PULSEFIELD_DEFINE_ERROR(GridMismatch)
PULSEFIELD_DEFINE_ERROR(HypothesisViolated)
PULSEFIELD_DEFINE_ERROR(ConstraintViolated)
PULSEFIELD_DEFINE_ERROR(CompatibilityViolated)
PULSEFIELD_DEFINE_ERROR(RootFindFailed)
PULSEFIELD_DEFINE_ERROR(InsufficientHistory)
PULSEFIELD_DEFINE_ERROR(IntegrationFailure)
PULSEFIELD_DEFINE_ERROR(NoSteadyState)
PULSEFIELD_DEFINE_ERROR(BracketFailure)
PULSEFIELD_DEFINE_ERROR(DegenerateDistance)
PULSEFIELD_DEFINE_ERROR(NotAffine)
PULSEFIELD_DEFINE_ERROR(InapplicableBound)
PULSEFIELD_DEFINE_ERROR(ConfigError)

#undef PULSEFIELD_DEFINE_ERROR

}  // namespace pulsefield
