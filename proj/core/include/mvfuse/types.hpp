#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mvfuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;
using MatX2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Fixed layout shared by the body model, the prior head and the scene files.
inline constexpr int kNumJoints = 24;
inline constexpr int kNumBodyJoints = kNumJoints - 1;
inline constexpr int kNumBetas = 10;
inline constexpr int kNumKeypoints = 44;
inline constexpr int kNumLandmarks = 35;
// Raw parameter vector: 24 rotations in 6D form followed by the shape betas.
inline constexpr int kParamDim = kNumJoints * 6 + kNumBetas;

}  // namespace mvfuse
