#pragma once

#include <stdexcept>
#include <string>

namespace priorvqa {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can separate library failures from std exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PRIORVQA_DEFINE_ERROR(Name)           \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(std::string(#Name ": ") + what) {} \
  }

PRIORVQA_DEFINE_ERROR(DimensionError);
PRIORVQA_DEFINE_ERROR(ConfigError);
PRIORVQA_DEFINE_ERROR(ContractError);
PRIORVQA_DEFINE_ERROR(StateError);
PRIORVQA_DEFINE_ERROR(FormatError);
PRIORVQA_DEFINE_ERROR(SizeError);
PRIORVQA_DEFINE_ERROR(IoError);
PRIORVQA_DEFINE_ERROR(PairingError);
PRIORVQA_DEFINE_ERROR(DivergenceError);
PRIORVQA_DEFINE_ERROR(ScoringError);
PRIORVQA_DEFINE_ERROR(DegenerateVarianceError);
PRIORVQA_DEFINE_ERROR(ManifestError);

#undef PRIORVQA_DEFINE_ERROR

}  // namespace priorvqa
