#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mvfuse/bodymodel.hpp"
#include "mvfuse/camera.hpp"
#include "mvfuse/fusion.hpp"
#include "mvfuse/priorhead.hpp"
#include "mvfuse/types.hpp"

namespace mvfuse {

// Detected 2D evidence for one view: rows are (u, v, confidence).
struct Detection2D {
  MatX kp = MatX::Zero(kNumKeypoints, 3);
  MatX ana = MatX::Zero(kNumLandmarks, 3);

  void validate() const;
};

// Detections at or below this confidence are masked out of the 2D loss.
inline constexpr double kConfThreshold = 0.9;

// Residual rows whose norm falls below this epsilon contribute exactly zero
// loss and gradient. Round-off level residuals survive every fit/decode path,
// and several weight products exceed the plain gradient-descent stability
// bound, so without a dead zone those seeds would grow instead of staying
// put; with it a noiseless scene is a bitwise stationary point.
inline constexpr double kResidualDeadband = 1e-10;

struct LossWeights {
  double lambda_kp = 3e-1;
  double lambda_ana = 3e-1;
  double lambda_reg_orient = 3e1;
  double lambda_reg_pose = 1e-1;
  double lambda_reg_betas = 2e-2;
  double lambda_reg_vertice = 1e-2;
  double lambda_con_orient = 5e0;
  double lambda_con_pose = 5e0;
  double lambda_con_betas = 5e0;
  double lambda_con_vertice = 3e-1;
  double lambda_virtual_orient = 3e2;
  double lambda_virtual_pose = 1e1;
  double lambda_virtual_betas = 1e0;
  double lambda_virtual_vertice = 1e-1;

  void validate() const;  // all weights must be finite and nonnegative
};

// Frozen copy of the per-view state right after initialization.
struct ViewSnapshot {
  VecX params;
  std::array<Mat3, kNumJoints> rot{};
  VecX beta;
  MatX3 posed_vertices;
};

// One view during optimization. `params` is the raw parameter vector the
// losses differentiate against; in token mode it is decode_raw(head, token)
// and the token is the optimized variable, in direct mode it is optimized
// itself. All derived fields are refreshed together so the decoded pose,
// meshes and projections always match `params`.
struct ViewState {
  Token token;
  VecX params;
  CameraModel camera;
  Detection2D detection;
  bool calibrated = true;

  std::array<Mat3, kNumJoints> rot{};
  VecX beta;
  Mat3 root_world = Mat3::Identity();
  BodyCache posed_cache;  // posed with the view root (world frame when calibrated)
  BodyCache local_cache;  // posed with identity root
  MatX3 posed_vertices;
  MatX3 local_vertices;
  MatX3 kp3d, ana3d;
  MatX2 kp2d, ana2d;

  ViewSnapshot snapshot;
};

// Rebuilds every derived field from view.params.
void refresh_view(const BodyModel& model, ViewState& view);

// Decodes the token into view.params and refreshes.
void set_view_token(const BodyModel& model, const PriorHead& head, ViewState& view, const VecX& z);

// Builds a view with its initial snapshot from a prior token.
ViewState make_view_state(const BodyModel& model, const PriorHead& head, const Token& token,
                          const CameraModel& camera, const Detection2D& detection, bool calibrated);

// The virtual view during optimization, parameterized like a view.
struct VirtualState {
  VecX params;
  VirtualView::OrientMode orient_mode = VirtualView::OrientMode::kWorld;

  std::array<Mat3, kNumJoints> rot{};
  VecX beta;
  BodyCache local_cache;
  MatX3 local_vertices;
};

void refresh_virtual(const BodyModel& model, VirtualState& virt);
VirtualState make_virtual_state(const BodyModel& model, const VirtualView& view);

// Loss value plus its gradient with respect to each view's raw parameters.
struct LossTerms {
  double value = 0.0;
  std::vector<VecX> d_params;
  std::vector<int> active_rows;  // 2D loss: retained detection rows per view
  bool all_masked = false;       // 2D loss: every detection row masked
};

// Confidence-masked mean squared reprojection error of keypoints and
// landmarks. Point-set residuals (keypoints, landmarks, vertices) reduce as
// the mean squared Euclidean distance over their rows, which keeps the loss
// weights scale-free in point count; rotation terms are per-joint squared
// distances summed over joints. Gradients are proportional to the residuals.
LossTerms loss_2d(const BodyModel& model, const std::vector<ViewState>& views,
                  const LossWeights& weights);

// Cross-view agreement over root orientation (world frame, calibrated
// only), per-joint 6D pose, betas and root-aligned vertices. Pairwise form
// sums unordered pairs; star form compares each view against the detached
// mean. op_counter, when given, accumulates the number of residual rows
// evaluated.
LossTerms loss_consistency_pairwise(const BodyModel& model, const std::vector<ViewState>& views,
                                    const LossWeights& weights, std::uint64_t* op_counter = nullptr);
LossTerms loss_consistency_star(const BodyModel& model, const std::vector<ViewState>& views,
                                const LossWeights& weights, std::uint64_t* op_counter = nullptr);

// Squared distance of each view from its initialization snapshot.
LossTerms loss_regularization(const BodyModel& model, const std::vector<ViewState>& views,
                              const LossWeights& weights);

// Virtual-to-view agreement; gradients flow only to the virtual parameters.
struct VirtualLossTerms {
  double value = 0.0;
  VecX d_params;
};
VirtualLossTerms loss_virtual(const BodyModel& model, const VirtualState& virt,
                              const std::vector<ViewState>& views, const LossWeights& weights);

}  // namespace mvfuse
