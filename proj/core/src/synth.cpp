#include "mvfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#include "mvfuse/errors.hpp"
#include "mvfuse/rng.hpp"
#include "mvfuse/rotmath.hpp"

namespace mvfuse {

namespace {

// Rest skeleton, meters, Y up, pelvis at the origin. Standard 24-joint
// layout: legs, spine chain, neck/head, collars and arms.
constexpr double kRestJoints[kNumJoints][3] = {
    {0.00, 0.00, 0.00},    // 0 pelvis
    {0.09, -0.05, 0.00},   // 1 left hip
    {-0.09, -0.05, 0.00},  // 2 right hip
    {0.00, 0.11, 0.00},    // 3 spine1
    {0.10, -0.48, 0.00},   // 4 left knee
    {-0.10, -0.48, 0.00},  // 5 right knee
    {0.00, 0.22, 0.00},    // 6 spine2
    {0.11, -0.88, 0.00},   // 7 left ankle
    {-0.11, -0.88, 0.00},  // 8 right ankle
    {0.00, 0.33, 0.00},    // 9 spine3
    {0.12, -0.95, 0.12},   // 10 left foot
    {-0.12, -0.95, 0.12},  // 11 right foot
    {0.00, 0.52, 0.00},    // 12 neck
    {0.07, 0.45, 0.00},    // 13 left collar
    {-0.07, 0.45, 0.00},   // 14 right collar
    {0.00, 0.64, 0.00},    // 15 head
    {0.18, 0.45, 0.00},    // 16 left shoulder
    {-0.18, 0.45, 0.00},   // 17 right shoulder
    {0.45, 0.45, 0.00},    // 18 left elbow
    {-0.45, 0.45, 0.00},   // 19 right elbow
    {0.70, 0.45, 0.00},    // 20 left wrist
    {-0.70, 0.45, 0.00},   // 21 right wrist
    {0.79, 0.45, 0.00},    // 22 left hand
    {-0.79, 0.45, 0.00},   // 23 right hand
};

constexpr int kParents[kNumJoints] = {-1, 0, 0,  0,  1,  2,  3,  4,  5,  6,  7,  8,
                                      9,  9, 9,  12, 13, 14, 16, 17, 18, 19, 20, 21};

constexpr double kMarkerOffset = 0.05;
constexpr double kHeadRadius = 0.11;
constexpr double kHandOffset = 0.07;
constexpr double kGoldenAngle = 2.399963229728653;

// First vertex of each block in the fixed layout: 24 marker pairs, 8 head
// points, 2 + 2 hand points, 1 + 1 foot points, then bone-ring pairs.
constexpr int kHeadBase = 2 * kNumJoints;  // 48
constexpr int kHandBase = kHeadBase + 8;   // 56
constexpr int kFootBase = kHandBase + 4;   // 60
constexpr int kRingBase = kFootBase + 2;   // 62

bool is_torso_joint(int j) {
  return j == 3 || j == 6 || j == 9 || j == 12 || j == 13 || j == 14 || j == 15;
}

Vec3 rest_joint(int j) { return Vec3(kRestJoints[j][0], kRestJoints[j][1], kRestJoints[j][2]); }

// Deterministic RNG stream per scene ingredient, so e.g. changing the
// detection noise level never reshuffles the prior perturbations.
Rng scene_stream(const SceneSpec& spec, const char* tag) {
  return Rng(substream_seed(spec.seed, tag));
}

Mat3 small_rotation(Rng& rng, double rms_rad) {
  // Per-component sd of rms/sqrt(3) makes rms_rad the expected geodesic
  // magnitude of the perturbation.
  return aa_to_rotmat(AxisAngle{rng.normal_vec3(rms_rad / std::sqrt(3.0))});
}

Extrinsics look_at(const Vec3& pos, const Vec3& target) {
  const Vec3 up(0.0, 1.0, 0.0);
  const Vec3 z = (target - pos).normalized();
  Vec3 x = up.cross(z);
  const double n = x.norm();
  if (n < 1e-6) {
    throw DegenerateInputError("look_at: view direction parallel to the up axis");
  }
  x /= n;
  const Vec3 y = z.cross(x);
  Extrinsics ext;
  ext.rot.row(0) = x.transpose();
  ext.rot.row(1) = y.transpose();
  ext.rot.row(2) = z.transpose();
  ext.trans = -ext.rot * pos;
  return ext;
}

MatX3 to_camera_frame(const Extrinsics& ext, const MatX3& pts) {
  MatX3 out(pts.rows(), 3);
  for (Eigen::Index r = 0; r < pts.rows(); ++r) {
    out.row(r) = (ext.rot * pts.row(r).transpose() + ext.trans).transpose();
  }
  return out;
}

struct ViewGeometry {
  CameraModel camera;
  Extrinsics ext;        // true extrinsics, kept even for weak cameras
  MatX3 view_vertices;   // body posed with the camera-frame root
};

// Places one ring camera, retrying placements that would put a joint at or
// behind the near plane.
ViewGeometry place_camera(const SceneSpec& spec, Rng& rng, int view, const MatX3& gt_joints) {
  constexpr int kMaxAttempts = 100;
  constexpr double kDepthMargin = 0.1;
  const RigSpec& rig = spec.rig;
  const Vec3 pelvis = gt_joints.row(0).transpose();

  // Golden-angle spacing keeps every prefix of the ring well spread, so a
  // scene with fewer views is exactly the leading views of the larger one
  // and view-count sweeps compare the same body, detections, and priors.
  constexpr double kGoldenAngleRad = 2.399963229728653;  // pi * (3 - sqrt 5)

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double az =
        kGoldenAngleRad * view + rig.azimuth_jitter_rad * rng.uniform(-1.0, 1.0);
    const Vec3 pos = pelvis + Vec3(rig.radius_m * std::sin(az), rig.height_m,
                                   rig.radius_m * std::cos(az));
    const Vec3 target = pelvis + rng.normal_vec3(rig.lookat_jitter_m);
    if ((target - pos).norm() < 1e-6) {
      continue;
    }
    const Extrinsics ext = look_at(pos, target);
    const MatX3 cam_joints = to_camera_frame(ext, gt_joints);
    if (cam_joints.col(2).minCoeff() <= kDepthMargin) {
      continue;
    }

    ViewGeometry geo;
    geo.ext = ext;
    geo.camera.intr = Intrinsics{rig.fx_px, rig.fy_px, rig.image_w_px / 2.0,
                                 rig.image_h_px / 2.0, rig.image_w_px, rig.image_h_px};
    if (spec.calibrated) {
      geo.camera.kind = CameraKind::kPerspective;
      geo.camera.ext = ext;
      geo.camera.validate();
    } else {
      // Weak parameters are fitted by the caller once the camera-frame
      // body of this view exists.
      geo.camera.kind = CameraKind::kWeakPerspective;
    }
    return geo;
  }
  throw DegenerateInputError("camera placement failed for view " + std::to_string(view));
}

}  // namespace

BodyModel make_humanoid(std::uint64_t seed, int n_vertices) {
  if (n_vertices < kMinHumanoidVertices) {
    throw ValidationError("humanoid: need at least " + std::to_string(kMinHumanoidVertices) +
                          " vertices, got " + std::to_string(n_vertices));
  }
  const int V = n_vertices;
  BodyModel model;
  model.template_vertices = MatX3::Zero(V, 3);
  model.parents = Eigen::VectorXi(kNumJoints);
  for (int j = 0; j < kNumJoints; ++j) {
    model.parents[j] = kParents[j];
  }
  model.skin_weights = MatX::Zero(V, kNumJoints);
  model.joint_regressor_rest = MatX::Zero(kNumJoints, V);
  model.kp_regressor = MatX::Zero(kNumKeypoints, V);
  model.pelvis_index = 0;

  // Marker pairs: joint position +/- a small offset along a cycling axis,
  // rigidly skinned, so both joint regressors recover the joints exactly.
  for (int j = 0; j < kNumJoints; ++j) {
    Vec3 axis = Vec3::Zero();
    axis[j % 3] = 1.0;
    model.template_vertices.row(2 * j) = (rest_joint(j) + kMarkerOffset * axis).transpose();
    model.template_vertices.row(2 * j + 1) = (rest_joint(j) - kMarkerOffset * axis).transpose();
    model.skin_weights(2 * j, j) = 1.0;
    model.skin_weights(2 * j + 1, j) = 1.0;
    model.joint_regressor_rest(j, 2 * j) = 0.5;
    model.joint_regressor_rest(j, 2 * j + 1) = 0.5;
    model.kp_regressor(j, 2 * j) = 0.5;
    model.kp_regressor(j, 2 * j + 1) = 0.5;
  }

  // Feature points: a box of head vertices, two markers across each hand,
  // one toe marker per foot.
  const Vec3 head = rest_joint(15);
  for (int c = 0; c < 8; ++c) {
    const Vec3 dir =
        Vec3(c & 1 ? 1.0 : -1.0, c & 2 ? 1.0 : -1.0, c & 4 ? 1.0 : -1.0).normalized();
    model.template_vertices.row(kHeadBase + c) = (head + kHeadRadius * dir).transpose();
    model.skin_weights(kHeadBase + c, 15) = 1.0;
  }
  for (int side = 0; side < 2; ++side) {
    const int hand_joint = 22 + side;
    const Vec3 hand = rest_joint(hand_joint);
    for (int s = 0; s < 2; ++s) {
      const int v = kHandBase + 2 * side + s;
      model.template_vertices.row(v) =
          (hand + Vec3(0.0, s == 0 ? kHandOffset : -kHandOffset, 0.0)).transpose();
      model.skin_weights(v, hand_joint) = 1.0;
    }
    const int foot_joint = 10 + side;
    model.template_vertices.row(kFootBase + side) =
        (rest_joint(foot_joint) + Vec3(0.0, -0.03, 0.08)).transpose();
    model.skin_weights(kFootBase + side, foot_joint) = 1.0;
  }

  // Bone rings: pairs of opposed surface points around each bone, blended
  // between parent and child so posing bends them smoothly. Passes cycle
  // through bone fractions 1/2, 1/4, 3/4.
  const int n_pairs = (V - kRingBase) / 2;
  constexpr double kFracs[3] = {0.5, 0.25, 0.75};
  for (int s = 0; s < n_pairs; ++s) {
    const int child = 1 + s % kNumBodyJoints;
    const int parent = kParents[child];
    const double f = kFracs[(s / kNumBodyJoints) % 3];
    const Vec3 a = rest_joint(parent);
    const Vec3 b = rest_joint(child);
    const Vec3 center = a + f * (b - a);
    const Vec3 u = (b - a).normalized();
    const Vec3 h = std::abs(u.x()) < 0.9 ? Vec3(1.0, 0.0, 0.0) : Vec3(0.0, 1.0, 0.0);
    const Vec3 e1 = u.cross(h).normalized();
    const Vec3 e2 = u.cross(e1);
    const double phi = kGoldenAngle * (s + 1);
    const Vec3 dir = std::cos(phi) * e1 + std::sin(phi) * e2;
    const double radius = is_torso_joint(child) ? 0.09 : 0.05;
    const int v = kRingBase + 2 * s;
    model.template_vertices.row(v) = (center + radius * dir).transpose();
    model.template_vertices.row(v + 1) = (center - radius * dir).transpose();
    for (int k = 0; k < 2; ++k) {
      model.skin_weights(v + k, child) = f;
      model.skin_weights(v + k, parent) = 1.0 - f;
    }
  }
  if ((V - kRingBase) % 2 == 1) {
    // Odd vertex budget: park the spare vertex on the head.
    model.template_vertices.row(V - 1) =
        (head + kHeadRadius * Vec3(2.0, 1.0, 0.0).normalized()).transpose();
    model.skin_weights(V - 1, 15) = 1.0;
  }

  // Keypoints 24..43: four head corners, one point per hand and foot, then
  // the first ring of the second pass along twelve bones.
  for (int c = 0; c < 4; ++c) {
    model.kp_regressor(24 + c, kHeadBase + c) = 1.0;
  }
  model.kp_regressor(28, kHandBase) = 1.0;
  model.kp_regressor(29, kHandBase + 2) = 1.0;
  model.kp_regressor(30, kFootBase) = 1.0;
  model.kp_regressor(31, kFootBase + 1) = 1.0;
  for (int r = 0; r < 12; ++r) {
    model.kp_regressor(32 + r, kRingBase + 2 * (kNumBodyJoints + r)) = 1.0;
  }

  // Landmarks: one first-pass ring vertex per bone plus the head box and
  // the hand markers.
  model.landmark_indices.clear();
  for (int b = 0; b < kNumBodyJoints; ++b) {
    model.landmark_indices.push_back(kRingBase + 2 * b);
  }
  for (int c = 0; c < 8; ++c) {
    model.landmark_indices.push_back(kHeadBase + c);
  }
  for (int s = 0; s < 4; ++s) {
    model.landmark_indices.push_back(kHandBase + s);
  }

  // Blendshapes move the rest joints (shape 0 scales the skeleton, the
  // rest are random per-joint fields) and carry every vertex along with
  // its skinning weights, which keeps the regressed joints consistent
  // with the skinning pivots for every beta.
  Rng rng(substream_seed(seed, "shape-dirs"));
  model.shape_dirs.resize(kNumBetas);
  for (int b = 0; b < kNumBetas; ++b) {
    MatX3 joint_field(kNumJoints, 3);
    for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 d = b == 0 ? Vec3(0.06 * rest_joint(j)) : rng.normal_vec3(0.02);
      joint_field.row(j) = d.transpose();
    }
    model.shape_dirs[b] = model.skin_weights * joint_field;
  }

  model.validate();
  return model;
}

void SceneSpec::validate() const {
  if (n_views < 1) {
    throw ValidationError("scene spec: n_views must be at least 1");
  }
  if (!(rig.radius_m > 0.0) || !(rig.fx_px > 0.0) || !(rig.fy_px > 0.0) ||
      !(rig.image_w_px > 0.0) || !(rig.image_h_px > 0.0)) {
    throw ValidationError("scene spec: rig radius, focals and image size must be positive");
  }
  if (!std::isfinite(rig.height_m) || rig.lookat_jitter_m < 0.0 || rig.azimuth_jitter_rad < 0.0) {
    throw ValidationError("scene spec: rig height must be finite and jitters nonnegative");
  }
  if (!(gt_pose_range_rad >= 0.0) || gt_pose_range_rad > M_PI) {
    throw ValidationError("scene spec: gt_pose_range_rad must lie in [0, pi]");
  }
  if (!(gt_shape_scale >= 0.0) || !(detection_noise_px >= 0.0) || !(prior_shape_noise >= 0.0) ||
      !(prior_pose_noise_rad >= 0.0)) {
    throw ValidationError("scene spec: noise scales must be nonnegative");
  }
  if (!(detection_dropout >= 0.0) || !(detection_dropout <= 1.0)) {
    throw ValidationError("scene spec: detection_dropout must lie in [0, 1]");
  }
  for (const OutlierSpec& o : outliers) {
    if (o.view < 0 || o.view >= n_views || o.joint < 0 || o.joint >= kNumJoints) {
      throw ValidationError("scene spec: outlier view/joint out of range");
    }
    if (!(o.offset_rad > 0.0) || !(o.offset_rad < M_PI)) {
      throw ValidationError("scene spec: outlier offset must lie in (0, pi)");
    }
  }
  if (!calibrated) {
    // One weak-perspective scale serves both pixel axes only when the
    // focal lengths match the image aspect.
    if (std::abs(rig.fx_px * rig.image_h_px - rig.fy_px * rig.image_w_px) >
        1e-9 * rig.fx_px * rig.image_h_px) {
      throw ValidationError("scene spec: uncalibrated rig needs fx/image_w == fy/image_h");
    }
  }
}

Scene generate_scene(const std::shared_ptr<const BodyModel>& model, const PriorHead& head,
                     const SceneSpec& spec) {
  if (!model) {
    throw ValidationError("generate_scene: null body model");
  }
  spec.validate();
  head.validate();

  // Ground truth: a bounded random pose and shape, projected through the
  // prior head so the truth is exactly representable by a token.
  Rng gt_rng = scene_stream(spec, "gt");
  PoseParams draw_pose;
  for (int j = 0; j < kNumJoints; ++j) {
    const double angle = spec.gt_pose_range_rad * gt_rng.uniform();
    draw_pose.joint(j) = aa_to_rotmat(AxisAngle{angle * gt_rng.unit_vec3()});
  }
  ShapeParams draw_shape;
  for (int b = 0; b < kNumBetas; ++b) {
    draw_shape.beta[b] = gt_rng.normal(0.0, spec.gt_shape_scale);
  }
  // Project the draw into the set of poses the head reproduces exactly:
  // alternate between the token fit (projection onto the head's affine
  // range) and the decode (back onto orthonormal rotation blocks) until
  // the token stops moving. Priors built from this truth then decode to
  // it exactly once their perturbations are zero.
  TokenFit gt_fit = fit_token(head, draw_pose, draw_shape);
  PoseParams gt_pose;
  ShapeParams gt_shape;
  for (int it = 0; it < 200; ++it) {
    std::tie(gt_pose, gt_shape) = decode(head, gt_fit.token);
    TokenFit next = fit_token(head, gt_pose, gt_shape);
    const double moved = (next.token.z - gt_fit.token.z).norm();
    gt_fit = std::move(next);
    if (moved < 1e-14) {
      break;
    }
  }
  std::tie(gt_pose, gt_shape) = decode(head, gt_fit.token);
  const MeshResult gt_mesh = forward(*model, gt_pose, gt_shape);
  const MatX3 gt_kp3d = regress_keypoints(*model, gt_mesh.vertices);
  const MatX3 gt_ana3d = extract_landmarks(*model, gt_mesh.vertices);

  Scene scene;
  scene.model = model;
  scene.calibrated = spec.calibrated;
  SceneGroundTruth gt;
  gt.pose = gt_pose;
  gt.shape = gt_shape;
  gt.joints = gt_mesh.joints;
  gt.vertices = gt_mesh.vertices;

  // Cameras on the ring, plus the camera-frame-rooted body of each view
  // (the weak projection and the uncalibrated detections live there).
  Rng cam_rng = scene_stream(spec, "cameras");
  std::vector<ViewGeometry> views;
  views.reserve(static_cast<std::size_t>(spec.n_views));
  for (int i = 0; i < spec.n_views; ++i) {
    ViewGeometry geo = place_camera(spec, cam_rng, i, gt_mesh.joints);
    PoseParams view_pose = gt_pose;
    view_pose.root = orient_to_view(gt_pose.root, geo.ext);
    const MeshResult view_mesh = forward(*model, view_pose, gt_shape);
    geo.view_vertices = view_mesh.vertices;
    if (!spec.calibrated) {
      // Weak-perspective parameters that match the true camera at the mean
      // body depth. The gap between camera-frame points and the camera-
      // frame-rooted body is constant across the body (posing is rigid-
      // equivariant in the root), so a single (scale, tx, ty) is exact up
      // to the flat-depth approximation.
      const MatX3 cam_joints = to_camera_frame(geo.ext, gt_mesh.joints);
      const MatX3& view_joints = view_mesh.joints;
      const double zbar = cam_joints.col(2).mean();
      const Vec3 delta = (cam_joints - view_joints).colwise().mean().transpose();
      const Intrinsics& intr = geo.camera.intr;
      WeakParams weak;
      weak.scale = 2.0 * intr.fx / (intr.image_w * zbar);
      weak.tx = 2.0 * (intr.fx * delta.x() / zbar + intr.cx) / intr.image_w - 1.0;
      weak.ty = 2.0 * (intr.fy * delta.y() / zbar + intr.cy) / intr.image_h - 1.0;
      geo.camera.weak = weak;
      geo.camera.validate();
    }
    gt.view_extrinsics.push_back(geo.ext);
    scene.cameras.push_back(geo.camera);
    views.push_back(std::move(geo));
  }

  // Detections: the projected truth plus pixel noise. Confidences land
  // above the 0.9 gate unless the dropout coin fires.
  Rng det_rng = scene_stream(spec, "detections");
  for (int i = 0; i < spec.n_views; ++i) {
    const ViewGeometry& geo = views[i];
    MatX2 kp2d, ana2d;
    if (spec.calibrated) {
      kp2d = project(geo.camera, gt_kp3d);
      ana2d = project(geo.camera, gt_ana3d);
    } else {
      kp2d = project(geo.camera, regress_keypoints(*model, geo.view_vertices), true);
      ana2d = project(geo.camera, extract_landmarks(*model, geo.view_vertices), true);
    }
    Detection2D det;
    auto fill = [&](MatX& rows, const MatX2& clean) {
      for (Eigen::Index r = 0; r < clean.rows(); ++r) {
        rows(r, 0) = clean(r, 0) + spec.detection_noise_px * det_rng.normal();
        rows(r, 1) = clean(r, 1) + spec.detection_noise_px * det_rng.normal();
        const bool dropped = det_rng.uniform() < spec.detection_dropout;
        const double conf = det_rng.uniform();
        rows(r, 2) = dropped ? 0.89 * conf : 0.95 + 0.05 * conf;
      }
    };
    fill(det.kp, kp2d);
    fill(det.ana, ana2d);
    det.validate();
    scene.detections.push_back(std::move(det));
  }

  // Per-view priors: the truth with its root moved to the camera frame,
  // independently perturbed, then encoded as the nearest token.
  Rng prior_rng = scene_stream(spec, "priors");
  std::vector<PoseParams> prior_pose(static_cast<std::size_t>(spec.n_views));
  std::vector<ShapeParams> prior_shape(static_cast<std::size_t>(spec.n_views));
  for (int i = 0; i < spec.n_views; ++i) {
    PoseParams& pp = prior_pose[static_cast<std::size_t>(i)];
    pp.root = orient_to_view(gt_pose.root, views[static_cast<std::size_t>(i)].ext) *
              small_rotation(prior_rng, spec.prior_pose_noise_rad);
    for (int j = 1; j < kNumJoints; ++j) {
      pp.joint(j) = gt_pose.joint(j) * small_rotation(prior_rng, spec.prior_pose_noise_rad);
    }
    ShapeParams& ps = prior_shape[static_cast<std::size_t>(i)];
    ps.beta = gt_shape.beta;
    for (int b = 0; b < kNumBetas; ++b) {
      ps.beta[b] += prior_rng.normal(0.0, spec.prior_shape_noise);
    }
  }

  // Outliers: push the chosen prior joint until its decoded rotation sits
  // offset_rad from the truth. The token fit smooths large edits, so the
  // step size is calibrated by a few multiplicative corrections.
  Rng outlier_rng = scene_stream(spec, "outliers");
  for (const OutlierSpec& o : spec.outliers) {
    PoseParams& pp = prior_pose[static_cast<std::size_t>(o.view)];
    const ShapeParams& ps = prior_shape[static_cast<std::size_t>(o.view)];
    const Mat3 base = pp.joint(o.joint);
    const Mat3 target = o.joint == 0
                            ? orient_to_view(gt_pose.root, views[static_cast<std::size_t>(o.view)].ext)
                            : gt_pose.joint(o.joint);
    const Vec3 axis = outlier_rng.unit_vec3();
    double scale = 1.0;
    for (int iter = 0; iter < 8; ++iter) {
      pp.joint(o.joint) = base * aa_to_rotmat(AxisAngle{scale * o.offset_rad * axis});
      const TokenFit fit = fit_token(head, pp, ps);
      const auto decoded = decode(head, fit.token);
      const double got = geodesic_dist(decoded.first.joint(o.joint), target);
      if (std::abs(got - o.offset_rad) <= 0.02 * o.offset_rad) {
        break;
      }
      scale *= o.offset_rad / std::max(got, 1e-3);
      scale = std::clamp(scale, 1e-3, 1e3);
    }
  }

  for (int i = 0; i < spec.n_views; ++i) {
    scene.tokens.push_back(fit_token(head, prior_pose[static_cast<std::size_t>(i)],
                                     prior_shape[static_cast<std::size_t>(i)])
                               .token);
  }

  scene.gt = std::move(gt);
  scene.validate();
  return scene;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "views") return SweepAxis::kViews;
  if (name == "steps") return SweepAxis::kSteps;
  if (name == "lr") return SweepAxis::kLr;
  if (name == "noise") return SweepAxis::kNoise;
  throw ValidationError("unknown sweep axis '" + name + "' (views, steps, lr, noise)");
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kViews:
      return "views";
    case SweepAxis::kSteps:
      return "steps";
    case SweepAxis::kLr:
      return "lr";
    case SweepAxis::kNoise:
      return "noise";
  }
  throw ValidationError("unknown sweep axis");
}

std::vector<SweepRow> sweep(const std::shared_ptr<const BodyModel>& model, const PriorHead& head,
                            const SceneSpec& spec, const TTAConfig& base, SweepAxis axis,
                            const std::vector<double>& values) {
  if (values.empty()) {
    throw ValidationError("sweep: empty value list");
  }
  const bool rebuilds_scene = axis == SweepAxis::kViews || axis == SweepAxis::kNoise;
  std::optional<Scene> shared;
  if (!rebuilds_scene) {
    shared = generate_scene(model, head, spec);
  }

  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (double value : values) {
    SceneSpec point_spec = spec;
    TTAConfig cfg = base;
    switch (axis) {
      case SweepAxis::kViews: {
        const int n = static_cast<int>(value);
        if (n < 1 || static_cast<double>(n) != value) {
          throw ValidationError("sweep: views values must be positive integers");
        }
        point_spec.n_views = n;
        break;
      }
      case SweepAxis::kSteps: {
        const int n = static_cast<int>(value);
        if (n < 0 || static_cast<double>(n) != value) {
          throw ValidationError("sweep: steps values must be nonnegative integers");
        }
        cfg.steps = n;
        cfg.warmup_steps = std::min(base.warmup_steps, n);
        break;
      }
      case SweepAxis::kLr: {
        if (!(value > 0.0)) {
          throw ValidationError("sweep: lr values must be positive");
        }
        cfg.eta = value;
        break;
      }
      case SweepAxis::kNoise: {
        if (!(value >= 0.0)) {
          throw ValidationError("sweep: noise values must be nonnegative");
        }
        point_spec.detection_noise_px = value;
        break;
      }
    }
    const Scene& scene = rebuilds_scene
                             ? (shared = generate_scene(model, head, point_spec), *shared)
                             : *shared;
    cfg.calibrated = scene.calibrated;
    const TTAResult result = run_tta(scene, head, cfg);
    SweepRow row;
    row.value = value;
    row.initial = result.trace.front().output_metrics;
    row.final = result.trace.back().output_metrics;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mvfuse
