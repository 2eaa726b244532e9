#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "mvfuse/types.hpp"

namespace mvfuse {

// Per-joint relative rotations of the kinematic tree. joint 0 is the global
// (root) orientation, joints 1..23 are parent-relative body rotations.
struct PoseParams {
  Mat3 root = Mat3::Identity();
  std::array<Mat3, kNumBodyJoints> body{};

  PoseParams() { body.fill(Mat3::Identity()); }

  const Mat3& joint(int j) const { return j == 0 ? root : body[static_cast<std::size_t>(j - 1)]; }
  Mat3& joint(int j) { return j == 0 ? root : body[static_cast<std::size_t>(j - 1)]; }
};

struct ShapeParams {
  VecX beta = VecX::Zero(kNumBetas);
};

// Skinned parametric body: template vertices, linear shape blendshapes,
// a kinematic tree and the regressors that produce joints, 2D-supervised
// keypoints and anatomical surface landmarks.
struct BodyModel {
  MatX3 template_vertices;                 // V x 3
  std::vector<MatX3> shape_dirs;           // B entries, each V x 3
  Eigen::VectorXi parents;                 // J, parents[0] = -1, parents[j] < j
  MatX joint_regressor_rest;               // J x V, rows sum to 1
  MatX skin_weights;                       // V x J, rows sum to 1
  MatX kp_regressor;                       // 44 x V, rows sum to 1
  std::vector<int> landmark_indices;       // 35 vertex indices
  int pelvis_index = 0;

  int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
  int num_joints() const { return static_cast<int>(parents.size()); }
  int num_betas() const { return static_cast<int>(shape_dirs.size()); }

  // Checks dimensions, the tree structure, row sums and index ranges;
  // throws ValidationError and also builds the compact skinning lists.
  void validate();

  // Nonzero skinning entries per vertex, built by validate().
  const std::vector<std::vector<std::pair<int, double>>>& skin_lists() const { return skin_nz_; }

 private:
  std::vector<std::vector<std::pair<int, double>>> skin_nz_;
};

struct MeshResult {
  MatX3 vertices;  // V x 3
  MatX3 joints;    // J x 3, world positions of the kinematic joints
};

// Intermediates of one forward pass, kept for the backward pass.
struct BodyCache {
  std::array<Mat3, kNumJoints> rot;        // input rotations
  MatX3 shaped;                            // V x 3 template + blendshapes
  MatX3 rest_joints;                       // J x 3
  std::array<Mat3, kNumJoints> world_rot;  // accumulated rotations
  MatX3 world_joints;                      // J x 3 posed joint positions
};

// Gradients with respect to the forward inputs.
struct BodyGrad {
  std::array<Mat3, kNumJoints> d_rot;
  VecX d_beta = VecX::Zero(kNumBetas);

  BodyGrad() { d_rot.fill(Mat3::Zero()); }
};

// Linear blend skinning over the posed kinematic tree. Joint j rotates the
// shaped template about its rest position; the root therefore stays at its
// rest location and posing is rigid-equivariant in the root rotation.
MeshResult forward(const BodyModel& model, const PoseParams& pose, const ShapeParams& shape);
MeshResult forward_cached(const BodyModel& model, const PoseParams& pose, const ShapeParams& shape,
                          BodyCache& cache);

// Adjoint of forward: maps dL/d(vertices) and dL/d(joints) to dL/d(rotations)
// and dL/d(beta) at the cached evaluation point.
BodyGrad backward(const BodyModel& model, const BodyCache& cache, const MatX3& d_vertices,
                  const MatX3& d_joints);

// 44 keypoints regressed linearly from the posed vertices.
MatX3 regress_keypoints(const BodyModel& model, const MatX3& vertices);

// 35 surface landmark positions (vertex lookups).
MatX3 extract_landmarks(const BodyModel& model, const MatX3& vertices);

// MVFUSE-MODEL-v1 file format (see docs/formats.md).
void save_model(const BodyModel& model, const std::string& path);
BodyModel load_model(const std::string& path);

}  // namespace mvfuse
