#pragma once

#include <stdexcept>
#include <string>

namespace grasptk {

// Base for all structured errors. The CLI prints "<kind>: <message>" and
// exits nonzero; tests catch the concrete types.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define GRASPTK_ERROR_TYPE(NAME)                                    \
  struct NAME : Error {                                             \
    explicit NAME(const std::string& msg) : Error(#NAME, msg) {}    \
  }

// grasp_maps
GRASPTK_ERROR_TYPE(OutOfBoundsError);
GRASPTK_ERROR_TYPE(NoGraspError);
GRASPTK_ERROR_TYPE(DegenerateAngleError);

// metrics
GRASPTK_ERROR_TYPE(ZeroAreaError);
GRASPTK_ERROR_TYPE(EmptyGroundTruthError);
GRASPTK_ERROR_TYPE(UnrecognizedExpressionError);
GRASPTK_ERROR_TYPE(EmptyEvaluationError);

// geometry3d
GRASPTK_ERROR_TYPE(EmptyRegionError);
GRASPTK_ERROR_TYPE(InsufficientGeometryError);
GRASPTK_ERROR_TYPE(NoFeasibleGraspError);
GRASPTK_ERROR_TYPE(BehindCameraError);

// autonet
GRASPTK_ERROR_TYPE(ShapeError);
GRASPTK_ERROR_TYPE(UnknownTokenError);
GRASPTK_ERROR_TYPE(ConfigError);
GRASPTK_ERROR_TYPE(GraphError);

// training / data
GRASPTK_ERROR_TYPE(EmptyDatasetError);
GRASPTK_ERROR_TYPE(PlacementError);
GRASPTK_ERROR_TYPE(SplitNotFoundError);

// io_formats
GRASPTK_ERROR_TYPE(FormatError);
GRASPTK_ERROR_TYPE(TruncationError);
GRASPTK_ERROR_TYPE(DuplicateNameError);

// cli / generic
GRASPTK_ERROR_TYPE(IoError);
GRASPTK_ERROR_TYPE(InvalidArgumentError);

#undef GRASPTK_ERROR_TYPE

}  // namespace grasptk
