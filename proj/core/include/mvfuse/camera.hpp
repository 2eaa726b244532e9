#pragma once

#include <optional>

#include "mvfuse/types.hpp"

namespace mvfuse {

struct Intrinsics {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 500.0;
  double cy = 500.0;
  double image_w = 1000.0;
  double image_h = 1000.0;

  void validate() const;  // throws ValidationError on nonpositive focal/size
};

// World-to-camera rigid transform: p_cam = rot * p_world + trans.
struct Extrinsics {
  Mat3 rot = Mat3::Identity();
  Vec3 trans = Vec3::Zero();
};

// Weak-perspective alignment used by uncalibrated views. A camera-frame
// point maps to normalized coordinates n = scale * (x, y) + (tx, ty) and
// then to pixels u = (n_x + 1) * image_w / 2, v = (n_y + 1) * image_h / 2.
struct WeakParams {
  double scale = 1.0;
  double tx = 0.0;
  double ty = 0.0;
};

enum class CameraKind { kPerspective, kWeakPerspective };

struct CameraModel {
  CameraKind kind = CameraKind::kPerspective;
  Intrinsics intr;
  std::optional<Extrinsics> ext;
  std::optional<WeakParams> weak;

  void validate() const;
};

// Minimum admissible camera-frame depth for perspective projection (meters).
inline constexpr double kMinDepth = 1e-6;

// Projects N world (or camera-frame, when in_camera_frame) points to pixels.
// Perspective projection throws DegenerateInputError naming the first point
// with depth <= kMinDepth.
MatX2 project(const CameraModel& cam, const MatX3& pts, bool in_camera_frame = false);

// Adjoint of project: maps dL/d(uv) back to dL/d(pts).
MatX3 project_backward(const CameraModel& cam, const MatX3& pts, const MatX2& d_uv,
                       bool in_camera_frame = false);

// Camera-frame global orientation to world frame and back.
Mat3 orient_to_world(const Mat3& root_cam, const Extrinsics& ext);
Mat3 orient_to_view(const Mat3& root_world, const Extrinsics& ext);

}  // namespace mvfuse
