#pragma once

#include <vector>

#include "mvfuse/types.hpp"

namespace mvfuse {

// Default PCK threshold and AUC integration range, in millimeters. The
// conventional 3D-PCK setup: 150 mm cutoff, AUC over 0..150 mm in 31 steps.
inline constexpr double kPckThresholdMm = 150.0;
inline constexpr double kAucMaxMm = 150.0;
inline constexpr int kAucSamples = 31;

// Equispaced kAucSamples thresholds spanning [0, kAucMaxMm].
std::vector<double> default_auc_thresholds();

// All metric inputs are in meters (pixels for epe); results carry the unit
// in their name. Joint metrics align prediction and ground truth at the
// pelvis joint before measuring.

// Mean per-joint position error after pelvis alignment.
double mpjpe_mm(const MatX3& pred_joints, const MatX3& gt_joints, int pelvis_index);

// Mean per-joint position error after similarity (Procrustes) alignment.
double pa_mpjpe_mm(const MatX3& pred_joints, const MatX3& gt_joints);

// Mean per-vertex position error, translated by explicitly given pelvis
// positions (the vertex set does not contain the joints).
double mpvpe_mm(const MatX3& pred_vertices, const MatX3& gt_vertices, const Vec3& pred_pelvis,
                const Vec3& gt_pelvis);

// Percentage of pelvis-aligned joints with error <= threshold (inclusive).
double pck_pct(const MatX3& pred_joints, const MatX3& gt_joints, int pelvis_index,
               double threshold_mm = kPckThresholdMm);

// Trapezoidal integral of PCK over a strictly increasing threshold grid,
// normalized by the grid span; percent like PCK itself.
double auc_pct(const MatX3& pred_joints, const MatX3& gt_joints, int pelvis_index,
               const std::vector<double>& thresholds_mm);
double auc_pct(const MatX3& pred_joints, const MatX3& gt_joints, int pelvis_index);

// Mean 2D end-point error in pixels.
double epe_px(const MatX2& pred_px, const MatX2& gt_px);

// Least-squares similarity transform of src onto dst (rotation, isotropic
// scale, translation), returning the transformed src points. Throws
// DegenerateInputError when either cloud lacks the spatial extent to pin
// the transform (fewer than 3 points, collinear configurations).
MatX3 procrustes_align(const MatX3& src, const MatX3& dst);

struct MetricReport {
  double mpjpe_mm = 0.0;
  double pa_mpjpe_mm = 0.0;
  double mpvpe_mm = 0.0;
  double pck_pct = 0.0;
  double auc_pct = 0.0;
  double epe_px = 0.0;
};

// Joint/vertex metrics of one predicted body against ground truth. epe_px
// needs projections and stays 0 here; callers with cameras fill it in.
MetricReport evaluate_mesh(const MatX3& pred_joints, const MatX3& pred_vertices,
                           const MatX3& gt_joints, const MatX3& gt_vertices, int pelvis_index);

}  // namespace mvfuse
