#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mvfuse/metrics.hpp"
#include "mvfuse/scene.hpp"
#include "mvfuse/tta.hpp"

namespace mvfuse {

// Smallest vertex budget that still carries the marker pairs, feature
// points and the bone rings the keypoint/landmark tables index into.
inline constexpr int kMinHumanoidVertices = 132;

// Procedural SMPL-like body: 24 joints in the standard tree, marker-pair
// vertices at every joint (so regressed joints are exact), feature points
// on head/hands/feet, and rings of blend-skinned vertices along each bone.
// Geometry is fixed; the shape blendshapes are drawn from the seed.
BodyModel make_humanoid(std::uint64_t seed, int n_vertices = 200);

// Camera ring around the body. Cameras sit on a circle of the given radius
// at the given height, look at the pelvis (plus jitter), and share one
// intrinsics block.
struct RigSpec {
  double radius_m = 4.0;
  double height_m = 1.0;
  double lookat_jitter_m = 0.05;
  double azimuth_jitter_rad = 0.1;
  double fx_px = 1200.0;
  double fy_px = 1200.0;
  double image_w_px = 1024.0;
  double image_h_px = 1024.0;
};

// One deliberately corrupted prior joint: the named view's prior is pushed
// offset_rad away from ground truth at that joint (geodesic).
struct OutlierSpec {
  int view = 0;
  int joint = 0;
  double offset_rad = 1.5;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int n_views = 4;
  RigSpec rig;
  double gt_pose_range_rad = 0.6;  // per-joint axis-angle magnitude bound
  double gt_shape_scale = 0.3;
  double detection_noise_px = 3.0;
  double detection_dropout = 0.0;      // probability of a sub-0.9 confidence
  double prior_pose_noise_rad = 0.15;  // per-joint geodesic rms
  double prior_shape_noise = 0.05;
  std::vector<OutlierSpec> outliers;
  bool calibrated = true;

  void validate() const;
};

// Deterministic synthetic capture: a ground-truth body drawn inside the
// head's decodable range, cameras on the rig ring, detections projected
// from ground truth plus Gaussian pixel noise, and per-view prior tokens
// fit to the perturbed ground truth.
Scene generate_scene(const std::shared_ptr<const BodyModel>& model, const PriorHead& head,
                     const SceneSpec& spec);

enum class SweepAxis { kViews, kSteps, kLr, kNoise };

SweepAxis parse_axis(const std::string& name);  // throws ValidationError
std::string axis_name(SweepAxis axis);

struct SweepRow {
  double value = 0.0;
  MetricReport initial;  // step-0 output-body metrics
  MetricReport final;    // post-run output-body metrics
};

// Runs the TTA loop once per value along the chosen axis. The views and
// noise axes regenerate the scene from the spec (same seed, so noise draws
// stay paired); the steps and lr axes reuse one scene. The steps axis
// clamps warmup_steps to the step budget.
std::vector<SweepRow> sweep(const std::shared_ptr<const BodyModel>& model, const PriorHead& head,
                            const SceneSpec& spec, const TTAConfig& base, SweepAxis axis,
                            const std::vector<double>& values);

}  // namespace mvfuse
