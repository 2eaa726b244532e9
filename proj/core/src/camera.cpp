#include "mvfuse/camera.hpp"

#include <string>

#include "mvfuse/errors.hpp"
#include "mvfuse/rotmath.hpp"

namespace mvfuse {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: focal lengths must be positive");
  if (!(image_w > 0.0) || !(image_h > 0.0)) throw ValidationError("intrinsics: image size must be positive");
  if (!(cx >= 0.0) || !(cx <= image_w) || !(cy >= 0.0) || !(cy <= image_h)) {
    throw ValidationError("intrinsics: principal point must lie inside the image");
  }
}

void CameraModel::validate() const {
  intr.validate();
  if (ext && !is_rotation(ext->rot, 1e-6)) throw ValidationError("extrinsics: rotation block is not orthonormal");
  if (kind == CameraKind::kWeakPerspective) {
    if (!weak) throw ValidationError("weak-perspective camera without weak parameters");
    if (!(weak->scale > 0.0)) throw ValidationError("weak-perspective scale must be positive");
  }
}

namespace {

MatX3 to_camera_frame(const CameraModel& cam, const MatX3& pts, bool in_camera_frame) {
  if (in_camera_frame || !cam.ext) return pts;
  MatX3 out(pts.rows(), 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    out.row(i) = (cam.ext->rot * pts.row(i).transpose() + cam.ext->trans).transpose();
  }
  return out;
}

}  // namespace

MatX2 project(const CameraModel& cam, const MatX3& pts, bool in_camera_frame) {
  cam.validate();
  const MatX3 p = to_camera_frame(cam, pts, in_camera_frame);
  MatX2 uv(p.rows(), 2);
  if (cam.kind == CameraKind::kPerspective) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double z = p(i, 2);
      if (!(z > kMinDepth)) {
        throw DegenerateInputError("project: nonpositive depth at point " + std::to_string(i));
      }
      uv(i, 0) = cam.intr.fx * p(i, 0) / z + cam.intr.cx;
      uv(i, 1) = cam.intr.fy * p(i, 1) / z + cam.intr.cy;
    }
  } else {
    const WeakParams& w = *cam.weak;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double nx = w.scale * p(i, 0) + w.tx;
      const double ny = w.scale * p(i, 1) + w.ty;
      uv(i, 0) = (nx + 1.0) * 0.5 * cam.intr.image_w;
      uv(i, 1) = (ny + 1.0) * 0.5 * cam.intr.image_h;
    }
  }
  return uv;
}

MatX3 project_backward(const CameraModel& cam, const MatX3& pts, const MatX2& d_uv,
                       bool in_camera_frame) {
  const MatX3 p = to_camera_frame(cam, pts, in_camera_frame);
  MatX3 d_cam(p.rows(), 3);
  if (cam.kind == CameraKind::kPerspective) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double z = p(i, 2);
      if (!(z > kMinDepth)) {
        throw DegenerateInputError("project_backward: nonpositive depth at point " + std::to_string(i));
      }
      const double du = d_uv(i, 0);
      const double dv = d_uv(i, 1);
      d_cam(i, 0) = cam.intr.fx * du / z;
      d_cam(i, 1) = cam.intr.fy * dv / z;
      d_cam(i, 2) = -(cam.intr.fx * p(i, 0) * du + cam.intr.fy * p(i, 1) * dv) / (z * z);
    }
  } else {
    const WeakParams& w = *cam.weak;
    const double su = 0.5 * cam.intr.image_w * w.scale;
    const double sv = 0.5 * cam.intr.image_h * w.scale;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      d_cam(i, 0) = su * d_uv(i, 0);
      d_cam(i, 1) = sv * d_uv(i, 1);
      d_cam(i, 2) = 0.0;
    }
  }
  if (in_camera_frame || !cam.ext) return d_cam;
  MatX3 d_world(p.rows(), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    d_world.row(i) = (cam.ext->rot.transpose() * d_cam.row(i).transpose()).transpose();
  }
  return d_world;
}

Mat3 orient_to_world(const Mat3& root_cam, const Extrinsics& ext) {
  return ext.rot.transpose() * root_cam;
}

Mat3 orient_to_view(const Mat3& root_world, const Extrinsics& ext) {
  return ext.rot * root_world;
}

}  // namespace mvfuse
