#include "mvfuse/losses.hpp"

#include <cmath>
#include <type_traits>

#include "mvfuse/errors.hpp"
#include "mvfuse/rotmath.hpp"

namespace mvfuse {

void Detection2D::validate() const {
  if (kp.rows() != kNumKeypoints || kp.cols() != 3) throw ValidationError("detection: keypoint block must be 44 x 3");
  if (ana.rows() != kNumLandmarks || ana.cols() != 3) throw ValidationError("detection: landmark block must be 35 x 3");
  if (!kp.allFinite() || !ana.allFinite()) throw ValidationError("detection: non-finite entries");
}

void LossWeights::validate() const {
  const double all[] = {lambda_kp, lambda_ana, lambda_reg_orient, lambda_reg_pose,
                        lambda_reg_betas, lambda_reg_vertice, lambda_con_orient, lambda_con_pose,
                        lambda_con_betas, lambda_con_vertice, lambda_virtual_orient,
                        lambda_virtual_pose, lambda_virtual_betas, lambda_virtual_vertice};
  for (const double w : all) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("loss weights must be finite and nonnegative");
  }
}

void refresh_view(const BodyModel& model, ViewState& view) {
  auto [pose, shape] = raw_to_pose(view.params);
  for (int j = 0; j < kNumJoints; ++j) view.rot[static_cast<std::size_t>(j)] = pose.joint(j);
  view.beta = shape.beta;
  view.root_world = view.calibrated ? orient_to_world(pose.root, *view.camera.ext) : pose.root;

  PoseParams posed = pose;
  posed.root = view.root_world;
  const MeshResult pm = forward_cached(model, posed, shape, view.posed_cache);
  view.posed_vertices = pm.vertices;

  PoseParams local = pose;
  local.root = Mat3::Identity();
  const MeshResult lm = forward_cached(model, local, shape, view.local_cache);
  view.local_vertices = lm.vertices;

  view.kp3d = regress_keypoints(model, pm.vertices);
  view.ana3d = extract_landmarks(model, pm.vertices);
  view.kp2d = project(view.camera, view.kp3d, !view.calibrated);
  view.ana2d = project(view.camera, view.ana3d, !view.calibrated);
}

void set_view_token(const BodyModel& model, const PriorHead& head, ViewState& view, const VecX& z) {
  view.token.z = z;
  view.params = decode_raw(head, view.token);
  refresh_view(model, view);
}

ViewState make_view_state(const BodyModel& model, const PriorHead& head, const Token& token,
                          const CameraModel& camera, const Detection2D& detection, bool calibrated) {
  camera.validate();
  detection.validate();
  if (calibrated && !camera.ext) throw ValidationError("calibrated view without extrinsics");
  ViewState view;
  view.camera = camera;
  view.detection = detection;
  view.calibrated = calibrated;
  set_view_token(model, head, view, token.z);
  view.snapshot.params = view.params;
  view.snapshot.rot = view.rot;
  view.snapshot.beta = view.beta;
  view.snapshot.posed_vertices = view.posed_vertices;
  return view;
}

void refresh_virtual(const BodyModel& model, VirtualState& virt) {
  auto [pose, shape] = raw_to_pose(virt.params);
  for (int j = 0; j < kNumJoints; ++j) virt.rot[static_cast<std::size_t>(j)] = pose.joint(j);
  virt.beta = shape.beta;
  PoseParams local = pose;
  local.root = Mat3::Identity();
  const MeshResult lm = forward_cached(model, local, shape, virt.local_cache);
  virt.local_vertices = lm.vertices;
}

VirtualState make_virtual_state(const BodyModel& model, const VirtualView& view) {
  VirtualState virt;
  virt.params = pose_to_raw(view.pose, view.shape);
  virt.orient_mode = view.orient_mode;
  refresh_virtual(model, virt);
  return virt;
}

namespace {

// Gradient accumulator for one view (or the virtual view). Rotation
// gradients are collected as dL/dR and pushed through the 6D decode once.
struct Accum {
  explicit Accum(int n_vertices) {
    for (auto& m : d_rot) m.setZero();
    d_root_world.setZero();
    d_beta = VecX::Zero(kNumBetas);
    d_posed = MatX3::Zero(n_vertices, 3);
    d_local = MatX3::Zero(n_vertices, 3);
  }

  std::array<Mat3, kNumJoints> d_rot;
  Mat3 d_root_world;
  VecX d_beta;
  MatX3 d_posed;
  MatX3 d_local;
  bool posed_used = false;
  bool local_used = false;
  bool world_root_used = false;
};

// dL/dR for a term expressed in the first two matrix columns.
void add_cols(Mat3& target, const Vec6& d6) {
  target.col(0) += d6.head<3>();
  target.col(1) += d6.tail<3>();
}

// coef * |a - b|^2 with the sub-deadband dead zone; gradients are linear in
// the residual, so clipping engages only on real error.
template <typename V, typename G>
double sq_term(const V& a, const V& b, double coef, G* da, std::type_identity_t<G>* db) {
  const V r = a - b;
  const double sq = r.squaredNorm();
  if (sq <= kResidualDeadband * kResidualDeadband) return 0.0;
  const V g = (2.0 * coef) * r;
  if (da) *da += g;
  if (db) *db -= g;
  return coef * sq;
}

double sixd_pair(const Mat3& ri, const Mat3& rj, double coef, Mat3* di, Mat3* dj) {
  Vec6 a, b;
  a << ri.col(0), ri.col(1);
  b << rj.col(0), rj.col(1);
  Vec6 ga = Vec6::Zero(), gb = Vec6::Zero();
  const double v = sq_term(a, b, coef, di ? &ga : nullptr, dj ? &gb : nullptr);
  if (di) add_cols(*di, ga);
  if (dj) add_cols(*dj, gb);
  return v;
}

// Mean squared row distance: coef * (1/R) sum_r |a_r - b_r|^2.
double rows_term(const MatX3& a, const MatX3& b, double coef, MatX3* da, MatX3* db) {
  const auto rows = a.rows();
  const double c = coef / static_cast<double>(rows);
  double value = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec3 diff = (a.row(r) - b.row(r)).transpose();
    const double sq = diff.squaredNorm();
    if (sq <= kResidualDeadband * kResidualDeadband) continue;
    value += c * sq;
    const Vec3 g = (2.0 * c) * diff;
    if (da) da->row(r) += g.transpose();
    if (db) db->row(r) -= g.transpose();
  }
  return value;
}

// Runs the body/rotation adjoints and assembles dL/d(params).
VecX finalize_view(const BodyModel& model, const ViewState& view, Accum& acc) {
  const MatX3 zero_joints;
  if (acc.posed_used) {
    const BodyGrad bg = backward(model, view.posed_cache, acc.d_posed, zero_joints);
    if (view.calibrated) {
      acc.d_root_world += bg.d_rot[0];
      acc.world_root_used = true;
    } else {
      acc.d_rot[0] += bg.d_rot[0];
    }
    for (int j = 1; j < kNumJoints; ++j) acc.d_rot[static_cast<std::size_t>(j)] += bg.d_rot[static_cast<std::size_t>(j)];
    acc.d_beta += bg.d_beta;
  }
  if (acc.local_used) {
    const BodyGrad bg = backward(model, view.local_cache, acc.d_local, zero_joints);
    for (int j = 1; j < kNumJoints; ++j) acc.d_rot[static_cast<std::size_t>(j)] += bg.d_rot[static_cast<std::size_t>(j)];
    acc.d_beta += bg.d_beta;
  }
  if (acc.world_root_used) {
    // root_world = ext.rot^T * root
    acc.d_rot[0] += view.camera.ext->rot * acc.d_root_world;
  }
  VecX grad = VecX::Zero(kParamDim);
  for (int j = 0; j < kNumJoints; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (acc.d_rot[ju].isZero(0.0)) continue;
    grad.segment<6>(6 * j) =
        sixd_to_rotmat_backward(Rot6D::from_vec(view.params.segment<6>(6 * j)), acc.d_rot[ju]);
  }
  grad.tail(kNumBetas) = acc.d_beta;
  return grad;
}

VecX finalize_virtual(const BodyModel& model, const VirtualState& virt, Accum& acc) {
  const MatX3 zero_joints;
  if (acc.local_used) {
    const BodyGrad bg = backward(model, virt.local_cache, acc.d_local, zero_joints);
    for (int j = 1; j < kNumJoints; ++j) acc.d_rot[static_cast<std::size_t>(j)] += bg.d_rot[static_cast<std::size_t>(j)];
    acc.d_beta += bg.d_beta;
  }
  VecX grad = VecX::Zero(kParamDim);
  for (int j = 0; j < kNumJoints; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (acc.d_rot[ju].isZero(0.0)) continue;
    grad.segment<6>(6 * j) =
        sixd_to_rotmat_backward(Rot6D::from_vec(virt.params.segment<6>(6 * j)), acc.d_rot[ju]);
  }
  grad.tail(kNumBetas) = acc.d_beta;
  return grad;
}

// Confidence-masked mean squared pixel distance over one detection block.
double masked_block(const MatX2& pred, const MatX& det, double coef, MatX2& d_pred, int& active) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < det.rows(); ++r) {
    if (det(r, 2) > kConfThreshold) rows.push_back(r);
  }
  active += static_cast<int>(rows.size());
  if (rows.empty() || coef == 0.0) return 0.0;
  const double c = coef / static_cast<double>(rows.size());
  double value = 0.0;
  for (const Eigen::Index r : rows) {
    const Vec2 diff(pred(r, 0) - det(r, 0), pred(r, 1) - det(r, 1));
    const double sq = diff.squaredNorm();
    if (sq <= kResidualDeadband * kResidualDeadband) continue;
    value += c * sq;
    d_pred.row(r) += ((2.0 * c) * diff).transpose();
  }
  return value;
}

}  // namespace

LossTerms loss_2d(const BodyModel& model, const std::vector<ViewState>& views,
                  const LossWeights& weights) {
  weights.validate();
  LossTerms out;
  out.d_params.assign(views.size(), VecX::Zero(kParamDim));
  out.active_rows.assign(views.size(), 0);
  int total_active = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const ViewState& view = views[i];
    MatX2 d_kp2d = MatX2::Zero(kNumKeypoints, 2);
    MatX2 d_ana2d = MatX2::Zero(kNumLandmarks, 2);
    int active = 0;
    double value = masked_block(view.kp2d, view.detection.kp, weights.lambda_kp, d_kp2d, active);
    value += masked_block(view.ana2d, view.detection.ana, weights.lambda_ana, d_ana2d, active);
    out.active_rows[i] = active;
    total_active += active;
    out.value += value;
    if (active == 0) continue;

    Accum acc(model.num_vertices());
    const bool in_cam = !view.calibrated;
    if (!d_kp2d.isZero(0.0)) {
      const MatX3 d_kp3d = project_backward(view.camera, view.kp3d, d_kp2d, in_cam);
      acc.d_posed += model.kp_regressor.transpose() * d_kp3d;
      acc.posed_used = true;
    }
    if (!d_ana2d.isZero(0.0)) {
      const MatX3 d_ana3d = project_backward(view.camera, view.ana3d, d_ana2d, in_cam);
      for (int l = 0; l < kNumLandmarks; ++l) {
        acc.d_posed.row(model.landmark_indices[static_cast<std::size_t>(l)]) += d_ana3d.row(l);
      }
      acc.posed_used = true;
    }
    if (acc.posed_used) out.d_params[i] = finalize_view(model, view, acc);
  }
  out.all_masked = total_active == 0;
  return out;
}

namespace {

LossTerms consistency_impl(const BodyModel& model, const std::vector<ViewState>& views,
                           const LossWeights& weights, bool star, std::uint64_t* op_counter) {
  weights.validate();
  const int n = static_cast<int>(views.size());
  LossTerms out;
  out.d_params.assign(views.size(), VecX::Zero(kParamDim));
  if (n < 2) return out;

  const bool calibrated = views[0].calibrated;
  for (const ViewState& v : views) {
    if (v.calibrated != calibrated) throw ValidationError("consistency loss: mixed calibrated/uncalibrated views");
  }

  std::vector<Accum> acc;
  acc.reserve(views.size());
  for (int i = 0; i < n; ++i) acc.emplace_back(model.num_vertices());

  const auto rows_per_term = static_cast<std::uint64_t>((calibrated ? 1 : 0) + kNumBodyJoints + 1 +
                                                        model.num_vertices());

  if (!star) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const ViewState& vi = views[static_cast<std::size_t>(i)];
        const ViewState& vj = views[static_cast<std::size_t>(j)];
        Accum& ai = acc[static_cast<std::size_t>(i)];
        Accum& aj = acc[static_cast<std::size_t>(j)];
        if (calibrated) {
          out.value += sixd_pair(vi.root_world, vj.root_world, weights.lambda_con_orient,
                                 &ai.d_root_world, &aj.d_root_world);
          ai.world_root_used = aj.world_root_used = true;
        }
        for (int k = 1; k < kNumJoints; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          out.value += sixd_pair(vi.rot[ku], vj.rot[ku], weights.lambda_con_pose,
                                 &ai.d_rot[ku], &aj.d_rot[ku]);
        }
        out.value += sq_term(vi.beta, vj.beta, weights.lambda_con_betas, &ai.d_beta, &aj.d_beta);
        out.value += rows_term(vi.local_vertices, vj.local_vertices, weights.lambda_con_vertice,
                               &ai.d_local, &aj.d_local);
        ai.local_used = aj.local_used = true;
        if (op_counter) *op_counter += rows_per_term;
      }
    }
  } else {
    // Detached means of every compared quantity.
    Mat3 root_mean = Mat3::Zero();
    std::array<Mat3, kNumJoints> rot_mean;
    for (auto& m : rot_mean) m.setZero();
    VecX beta_mean = VecX::Zero(kNumBetas);
    MatX3 vert_mean = MatX3::Zero(model.num_vertices(), 3);
    for (const ViewState& v : views) {
      if (calibrated) root_mean += v.root_world;
      for (int k = 1; k < kNumJoints; ++k) rot_mean[static_cast<std::size_t>(k)] += v.rot[static_cast<std::size_t>(k)];
      beta_mean += v.beta;
      vert_mean += v.local_vertices;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    root_mean *= inv_n;
    for (auto& m : rot_mean) m *= inv_n;
    beta_mean *= inv_n;
    vert_mean *= inv_n;

    for (int i = 0; i < n; ++i) {
      const ViewState& vi = views[static_cast<std::size_t>(i)];
      Accum& ai = acc[static_cast<std::size_t>(i)];
      if (calibrated) {
        out.value += sixd_pair(vi.root_world, root_mean, weights.lambda_con_orient,
                               &ai.d_root_world, nullptr);
        ai.world_root_used = true;
      }
      for (int k = 1; k < kNumJoints; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        out.value += sixd_pair(vi.rot[ku], rot_mean[ku], weights.lambda_con_pose,
                               &ai.d_rot[ku], nullptr);
      }
      out.value += sq_term(vi.beta, beta_mean, weights.lambda_con_betas, &ai.d_beta, nullptr);
      out.value += rows_term(vi.local_vertices, vert_mean, weights.lambda_con_vertice, &ai.d_local,
                             nullptr);
      ai.local_used = true;
      if (op_counter) *op_counter += rows_per_term;
    }
  }

  for (int i = 0; i < n; ++i) {
    out.d_params[static_cast<std::size_t>(i)] =
        finalize_view(model, views[static_cast<std::size_t>(i)], acc[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace

LossTerms loss_consistency_pairwise(const BodyModel& model, const std::vector<ViewState>& views,
                                    const LossWeights& weights, std::uint64_t* op_counter) {
  return consistency_impl(model, views, weights, false, op_counter);
}

LossTerms loss_consistency_star(const BodyModel& model, const std::vector<ViewState>& views,
                                const LossWeights& weights, std::uint64_t* op_counter) {
  return consistency_impl(model, views, weights, true, op_counter);
}

LossTerms loss_regularization(const BodyModel& model, const std::vector<ViewState>& views,
                              const LossWeights& weights) {
  weights.validate();
  LossTerms out;
  out.d_params.assign(views.size(), VecX::Zero(kParamDim));
  for (std::size_t i = 0; i < views.size(); ++i) {
    const ViewState& view = views[i];
    Accum acc(model.num_vertices());
    out.value += sixd_pair(view.rot[0], view.snapshot.rot[0], weights.lambda_reg_orient,
                           &acc.d_rot[0], nullptr);
    for (int k = 1; k < kNumJoints; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      out.value += sixd_pair(view.rot[ku], view.snapshot.rot[ku],
                             weights.lambda_reg_pose, &acc.d_rot[ku], nullptr);
    }
    out.value += sq_term(view.beta, view.snapshot.beta, weights.lambda_reg_betas, &acc.d_beta,
                           nullptr);
    out.value += rows_term(view.posed_vertices, view.snapshot.posed_vertices,
                           weights.lambda_reg_vertice, &acc.d_posed, nullptr);
    acc.posed_used = true;
    out.d_params[i] = finalize_view(model, view, acc);
  }
  return out;
}

VirtualLossTerms loss_virtual(const BodyModel& model, const VirtualState& virt,
                              const std::vector<ViewState>& views, const LossWeights& weights) {
  weights.validate();
  VirtualLossTerms out;
  out.d_params = VecX::Zero(kParamDim);
  if (views.empty()) return out;

  Accum acc(model.num_vertices());
  const bool use_orient = virt.orient_mode == VirtualView::OrientMode::kWorld;
  for (const ViewState& view : views) {
    if (use_orient) {
      if (!view.calibrated) throw ValidationError("virtual loss: world orientation mode needs calibrated views");
      out.value += sixd_pair(virt.rot[0], view.root_world, weights.lambda_virtual_orient,
                             &acc.d_rot[0], nullptr);
    }
    for (int k = 1; k < kNumJoints; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      out.value += sixd_pair(virt.rot[ku], view.rot[ku], weights.lambda_virtual_pose,
                             &acc.d_rot[ku], nullptr);
    }
    out.value += sq_term(virt.beta, view.beta, weights.lambda_virtual_betas, &acc.d_beta, nullptr);
    out.value += rows_term(virt.local_vertices, view.local_vertices, weights.lambda_virtual_vertice,
                           &acc.d_local, nullptr);
    acc.local_used = true;
  }
  out.d_params = finalize_virtual(model, virt, acc);
  return out;
}

}  // namespace mvfuse
