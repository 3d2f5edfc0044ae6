#pragma once

#include <stdexcept>
#include <string>

namespace graspkit {

// Base for every error this library raises. The CLI maps the concrete type
// to an exit code (see tools/cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GRASPKIT_DEFINE_ERROR(Name)        \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

GRASPKIT_DEFINE_ERROR(ParseError);
GRASPKIT_DEFINE_ERROR(LabelError);
GRASPKIT_DEFINE_ERROR(DegenerateMesh);
GRASPKIT_DEFINE_ERROR(DegenerateVolume);
GRASPKIT_DEFINE_ERROR(UnassignedPart);
GRASPKIT_DEFINE_ERROR(SolverFailure);
GRASPKIT_DEFINE_ERROR(NoPositiveGrasps);
GRASPKIT_DEFINE_ERROR(EmptyInstance);
GRASPKIT_DEFINE_ERROR(ShapeMismatch);
GRASPKIT_DEFINE_ERROR(DegenerateLabels);
GRASPKIT_DEFINE_ERROR(ShapeError);
GRASPKIT_DEFINE_ERROR(DomainError);
GRASPKIT_DEFINE_ERROR(Divergence);
GRASPKIT_DEFINE_ERROR(IoError);
GRASPKIT_DEFINE_ERROR(SchemaVersionMismatch);
GRASPKIT_DEFINE_ERROR(ConfigError);
GRASPKIT_DEFINE_ERROR(VerificationError);

#undef GRASPKIT_DEFINE_ERROR

}  // namespace graspkit
