#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "mvfuse/bodymodel.hpp"
#include "mvfuse/types.hpp"

namespace mvfuse {

struct Token {
  VecX z;
};

// Frozen linear stand-in for a per-view image backbone: a token decodes to
// raw parameters y = W z + b, parsed as 24 rotations in 6D form followed by
// the shape betas. W and b are never optimized.
struct PriorHead {
  MatX weight;  // kParamDim x D
  VecX bias;    // kParamDim

  int token_dim() const { return static_cast<int>(weight.cols()); }
  void validate() const;
};

// Raw parameter vector <-> typed pose/shape. raw_to_pose throws
// DegenerateInputError naming the joint whose 6D block cannot be decoded.
VecX pose_to_raw(const PoseParams& pose, const ShapeParams& shape);
std::pair<PoseParams, ShapeParams> raw_to_pose(const VecX& raw);

VecX decode_raw(const PriorHead& head, const Token& token);
std::pair<PoseParams, ShapeParams> decode(const PriorHead& head, const Token& token);

// Adjoint of decode_raw: dL/dz = W^T dL/dy.
VecX token_grad(const PriorHead& head, const VecX& d_raw);

struct TokenFit {
  Token token;
  double residual = 0.0;    // | W z - (y_target - b) |
  Eigen::Index rank = 0;    // numerical rank of W
  bool rank_deficient = false;
};

// Least-squares token for a target body, via the pseudo-inverse of W.
// Best-effort on rank-deficient heads; the residual is always reported.
TokenFit fit_token(const PriorHead& head, const PoseParams& pose, const ShapeParams& shape);

// Deterministic random head. The bias decodes the zero token to the rest
// pose; the six root rows map one token coordinate each so every global
// orientation is representable, the remaining columns carry small-scale
// (sigma = 0.05) Gaussian entries acting as pose/shape perturbations.
PriorHead synth_head(std::uint64_t seed, int token_dim = 128);

// MVFUSE-HEAD-v1 file format (see docs/formats.md).
void save_head(const PriorHead& head, const std::string& path);
PriorHead load_head(const std::string& path);

}  // namespace mvfuse
