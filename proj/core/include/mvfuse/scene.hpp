#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mvfuse/bodymodel.hpp"
#include "mvfuse/camera.hpp"
#include "mvfuse/losses.hpp"
#include "mvfuse/priorhead.hpp"

namespace mvfuse {

// Ground truth carried by synthetic scenes. The true extrinsics are kept
// even for uncalibrated scenes so predictions in a camera frame can be
// compared against the world-frame body.
struct SceneGroundTruth {
  PoseParams pose;  // root in the world frame
  ShapeParams shape;
  MatX3 joints;    // J x 3, world frame
  MatX3 vertices;  // V x 3, world frame
  std::vector<Extrinsics> view_extrinsics;
};

// One capture: a body model, the per-view cameras and 2D detections, and
// the per-view prior tokens produced by the (frozen) image backbone.
struct Scene {
  std::shared_ptr<const BodyModel> model;
  std::vector<CameraModel> cameras;
  std::vector<Detection2D> detections;
  std::vector<Token> tokens;
  bool calibrated = true;
  std::optional<SceneGroundTruth> gt;

  int num_views() const { return static_cast<int>(cameras.size()); }

  // Checks view counts agree, cameras match the calibration mode
  // (perspective with extrinsics vs weak-perspective), detections and
  // tokens are well-formed. Throws ValidationError.
  void validate() const;
};

}  // namespace mvfuse
