#pragma once

#include <stdexcept>
#include <string>

namespace gmatch {

// Base for every error raised by the library. `kind()` is a stable
// machine-readable tag used by the HTTP layer and the Python bindings.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define GMATCH_DEFINE_ERROR(Name)                                    \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(#Name, what) {}   \
  };

GMATCH_DEFINE_ERROR(ParseError)
GMATCH_DEFINE_ERROR(ValidationError)
GMATCH_DEFINE_ERROR(UnknownNode)
GMATCH_DEFINE_ERROR(EmptyCorpus)
GMATCH_DEFINE_ERROR(NoKnownTokens)
GMATCH_DEFINE_ERROR(MissingAttribute)
GMATCH_DEFINE_ERROR(EmptyGraph)
GMATCH_DEFINE_ERROR(DimensionMismatch)
GMATCH_DEFINE_ERROR(EmptyIndex)
GMATCH_DEFINE_ERROR(BadParams)
GMATCH_DEFINE_ERROR(TargetIsNoise)
GMATCH_DEFINE_ERROR(PerplexityTooLarge)
GMATCH_DEFINE_ERROR(UnknownAttribute)
GMATCH_DEFINE_ERROR(TooLargeForExact)
GMATCH_DEFINE_ERROR(BadSpec)
GMATCH_DEFINE_ERROR(DependencyError)
GMATCH_DEFINE_ERROR(NotFound)
GMATCH_DEFINE_ERROR(Busy)
GMATCH_DEFINE_ERROR(FormatError)

#undef GMATCH_DEFINE_ERROR

}  // namespace gmatch
