#include "mvfuse/priorhead.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <string>

#include "binio.hpp"
#include "mvfuse/errors.hpp"
#include "mvfuse/rng.hpp"
#include "mvfuse/rotmath.hpp"

namespace mvfuse {

namespace {

constexpr char kHeadMagic[] = "MVFUSE-HEAD-v1";

// Token coordinates dedicated to the root orientation rows. The root scale
// is kept small so 2D evidence steers the body pose rather than the global
// orientation; per-view orientation errors are handled by the virtual view's
// averaging, not by dragging each root through the reprojection loss.
constexpr double kRootScale = 0.55;
// The body block gets orthonormal columns scaled by a single gain, so every
// decodable body direction costs the same token distance. An iid Gaussian
// block has near-zero trailing singular values that make some corrections
// thousands of steps more expensive than others. Gain 1.0 keeps the descent
// stable for the published weights: the consistency curvature seen by one
// token is 2*lambda_con*(N-1)*gain^2, and eta * that must stay below 2.
constexpr double kBodyScale = 1.0;

}  // namespace

void PriorHead::validate() const {
  if (weight.rows() != kParamDim || bias.size() != kParamDim) {
    throw ValidationError("prior head: expected " + std::to_string(kParamDim) + " output rows");
  }
  if (weight.cols() < 1) throw ValidationError("prior head: token dimension must be positive");
  if (!weight.allFinite() || !bias.allFinite()) throw ValidationError("prior head: non-finite entries");
}

VecX pose_to_raw(const PoseParams& pose, const ShapeParams& shape) {
  VecX raw(kParamDim);
  for (int j = 0; j < kNumJoints; ++j) {
    raw.segment<6>(6 * j) = rotmat_to_6d(pose.joint(j)).vec();
  }
  raw.tail(kNumBetas) = shape.beta;
  return raw;
}

std::pair<PoseParams, ShapeParams> raw_to_pose(const VecX& raw) {
  if (raw.size() != kParamDim) throw ValidationError("raw_to_pose: wrong parameter count");
  PoseParams pose;
  for (int j = 0; j < kNumJoints; ++j) {
    try {
      pose.joint(j) = sixd_to_rotmat(Rot6D::from_vec(raw.segment<6>(6 * j)));
    } catch (const DegenerateInputError& e) {
      throw DegenerateInputError("decode: joint " + std::to_string(j) + ": " + e.what());
    }
  }
  ShapeParams shape;
  shape.beta = raw.tail(kNumBetas);
  return {pose, shape};
}

VecX decode_raw(const PriorHead& head, const Token& token) {
  head.validate();
  if (token.z.size() != head.token_dim()) throw ValidationError("decode: token dimension mismatch");
  return head.weight * token.z + head.bias;
}

std::pair<PoseParams, ShapeParams> decode(const PriorHead& head, const Token& token) {
  return raw_to_pose(decode_raw(head, token));
}

VecX token_grad(const PriorHead& head, const VecX& d_raw) {
  return head.weight.transpose() * d_raw;
}

TokenFit fit_token(const PriorHead& head, const PoseParams& pose, const ShapeParams& shape) {
  head.validate();
  const VecX target = pose_to_raw(pose, shape) - head.bias;
  Eigen::CompleteOrthogonalDecomposition<MatX> cod(head.weight);
  TokenFit fit;
  fit.token.z = cod.solve(target);
  fit.residual = (head.weight * fit.token.z - target).norm();
  fit.rank = cod.rank();
  fit.rank_deficient = fit.rank < std::min(head.weight.rows(), head.weight.cols());
  return fit;
}

PriorHead synth_head(std::uint64_t seed, int token_dim) {
  if (token_dim < 1) throw ValidationError("synth_head: token dimension must be positive");
  PriorHead head;
  head.bias = VecX::Zero(kParamDim);
  const Vec6 rest = rotmat_to_6d(Mat3::Identity()).vec();
  for (int j = 0; j < kNumJoints; ++j) head.bias.segment<6>(6 * j) = rest;

  head.weight = MatX::Zero(kParamDim, token_dim);
  const int root_cols = std::min(6, token_dim);
  for (int k = 0; k < root_cols; ++k) head.weight(k, k) = kRootScale;
  const int body_rows = kParamDim - 6;
  const int body_cols = std::min(token_dim - root_cols, body_rows);
  if (body_cols > 0) {
    Rng rng(mix_seed(seed));
    MatX gauss(body_rows, body_cols);
    for (int r = 0; r < body_rows; ++r) {
      for (int c = 0; c < body_cols; ++c) gauss(r, c) = rng.normal();
    }
    const MatX q = Eigen::HouseholderQR<MatX>(gauss).householderQ() *
                   MatX::Identity(body_rows, body_cols);
    head.weight.block(6, root_cols, body_rows, body_cols) = kBodyScale * q;
  }
  return head;
}

void save_head(const PriorHead& head, const std::string& path) {
  binio::Writer w;
  w.magic(kHeadMagic);
  w.u32(static_cast<std::uint32_t>(head.token_dim()));
  w.u32(static_cast<std::uint32_t>(kParamDim));
  w.matrix(head.weight);
  w.matrix(head.bias);
  w.finish(path);
}

PriorHead load_head(const std::string& path) {
  binio::Reader r(path);
  r.open(kHeadMagic);
  const auto d = static_cast<Eigen::Index>(r.u32());
  const auto p = static_cast<Eigen::Index>(r.u32());
  if (p != kParamDim) throw FormatError(path + ": unexpected output dimension");
  if (d < 1 || d > 1000000) throw FormatError(path + ": implausible token dimension");
  PriorHead head;
  head.weight = r.matrix(p, d);
  head.bias = r.matrix(p, 1);
  r.expect_end();
  head.validate();
  return head;
}

}  // namespace mvfuse
