#pragma once

#include <stdexcept>
#include <string>

namespace equistop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EQUISTOP_ERROR(Name)                  \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(#Name ": " + what) {}         \
  }

EQUISTOP_ERROR(ConfigError);
EQUISTOP_ERROR(NonPositiveVolatility);
EQUISTOP_ERROR(SingularSystem);
EQUISTOP_ERROR(NoConvergence);
EQUISTOP_ERROR(TooManyStates);
EQUISTOP_ERROR(NoSignChange);
EQUISTOP_ERROR(NotMonotoneAbove);
EQUISTOP_ERROR(NoFixedPoint);
EQUISTOP_ERROR(HypothesisViolated);
EQUISTOP_ERROR(DivergentExpectation);
EQUISTOP_ERROR(EmptyBoundary);
EQUISTOP_ERROR(PathBudgetExceeded);
EQUISTOP_ERROR(NoRoot);
EQUISTOP_ERROR(MultipleRoots);

#undef EQUISTOP_ERROR

// Raised by ForwardResult::RequireCertified; `assumption` is "A1".."A4".
class NotCertified : public Error {
 public:
  NotCertified(std::string assumption, const std::string& detail)
      : Error("NotCertified: (" + assumption + ") " + detail),
        assumption_(std::move(assumption)) {}
  const std::string& assumption() const { return assumption_; }

 private:
  std::string assumption_;
};

}  // namespace equistop
