#include "mvfuse/metrics.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "mvfuse/errors.hpp"

namespace mvfuse {

namespace {

constexpr double kMetersToMm = 1000.0;

void check_pair(const MatX3& pred, const MatX3& gt, const char* what) {
  if (pred.rows() != gt.rows()) {
    throw ValidationError(std::string(what) + ": prediction and ground truth differ in size");
  }
  if (pred.rows() < 1) throw ValidationError(std::string(what) + ": empty point set");
}

void check_pelvis(const MatX3& joints, int pelvis_index, const char* what) {
  if (pelvis_index < 0 || pelvis_index >= joints.rows()) {
    throw ValidationError(std::string(what) + ": pelvis index out of range");
  }
}

double mean_row_distance(const MatX3& a, const MatX3& b) {
  return (a - b).rowwise().norm().mean();
}

// Per-joint errors in millimeters after pelvis alignment.
VecX aligned_errors_mm(const MatX3& pred, const MatX3& gt, int pelvis_index) {
  const Vec3 dp = pred.row(pelvis_index).transpose();
  const Vec3 dg = gt.row(pelvis_index).transpose();
  VecX err(pred.rows());
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    const Vec3 d = (pred.row(r).transpose() - dp) - (gt.row(r).transpose() - dg);
    err[r] = kMetersToMm * d.norm();
  }
  return err;
}

double pck_of_errors(const VecX& err_mm, double threshold_mm) {
  const double hits = (err_mm.array() <= threshold_mm).count();
  return 100.0 * hits / static_cast<double>(err_mm.size());
}

}  // namespace

std::vector<double> default_auc_thresholds() {
  std::vector<double> grid(kAucSamples);
  for (int k = 0; k < kAucSamples; ++k) {
    grid[static_cast<std::size_t>(k)] = kAucMaxMm * static_cast<double>(k) / (kAucSamples - 1);
  }
  return grid;
}

double mpjpe_mm(const MatX3& pred_joints, const MatX3& gt_joints, int pelvis_index) {
  check_pair(pred_joints, gt_joints, "mpjpe");
  check_pelvis(pred_joints, pelvis_index, "mpjpe");
  return aligned_errors_mm(pred_joints, gt_joints, pelvis_index).mean();
}

double pa_mpjpe_mm(const MatX3& pred_joints, const MatX3& gt_joints) {
  check_pair(pred_joints, gt_joints, "pa_mpjpe");
  return kMetersToMm * mean_row_distance(procrustes_align(pred_joints, gt_joints), gt_joints);
}

double mpvpe_mm(const MatX3& pred_vertices, const MatX3& gt_vertices, const Vec3& pred_pelvis,
                const Vec3& gt_pelvis) {
  check_pair(pred_vertices, gt_vertices, "mpvpe");
  const MatX3 pred = pred_vertices.rowwise() - pred_pelvis.transpose();
  const MatX3 gt = gt_vertices.rowwise() - gt_pelvis.transpose();
  return kMetersToMm * mean_row_distance(pred, gt);
}

double pck_pct(const MatX3& pred_joints, const MatX3& gt_joints, int pelvis_index,
               double threshold_mm) {
  check_pair(pred_joints, gt_joints, "pck");
  check_pelvis(pred_joints, pelvis_index, "pck");
  if (!(threshold_mm > 0.0)) throw ValidationError("pck: threshold must be positive");
  return pck_of_errors(aligned_errors_mm(pred_joints, gt_joints, pelvis_index), threshold_mm);
}

double auc_pct(const MatX3& pred_joints, const MatX3& gt_joints, int pelvis_index,
               const std::vector<double>& thresholds_mm) {
  check_pair(pred_joints, gt_joints, "auc");
  check_pelvis(pred_joints, pelvis_index, "auc");
  if (thresholds_mm.size() < 2) throw ValidationError("auc: need at least two thresholds");
  for (std::size_t k = 1; k < thresholds_mm.size(); ++k) {
    if (!(thresholds_mm[k] > thresholds_mm[k - 1])) {
      throw ValidationError("auc: thresholds must be strictly increasing");
    }
  }
  const VecX err = aligned_errors_mm(pred_joints, gt_joints, pelvis_index);
  double integral = 0.0;
  double prev = pck_of_errors(err, thresholds_mm[0]);
  for (std::size_t k = 1; k < thresholds_mm.size(); ++k) {
    const double p = pck_of_errors(err, thresholds_mm[k]);
    integral += 0.5 * (prev + p) * (thresholds_mm[k] - thresholds_mm[k - 1]);
    prev = p;
  }
  return integral / (thresholds_mm.back() - thresholds_mm.front());
}

double auc_pct(const MatX3& pred_joints, const MatX3& gt_joints, int pelvis_index) {
  return auc_pct(pred_joints, gt_joints, pelvis_index, default_auc_thresholds());
}

double epe_px(const MatX2& pred_px, const MatX2& gt_px) {
  if (pred_px.rows() != gt_px.rows()) {
    throw ValidationError("epe: prediction and ground truth differ in size");
  }
  if (pred_px.rows() < 1) throw ValidationError("epe: empty point set");
  return (pred_px - gt_px).rowwise().norm().mean();
}

MatX3 procrustes_align(const MatX3& src, const MatX3& dst) {
  check_pair(src, dst, "procrustes");
  if (src.rows() < 3) throw DegenerateInputError("procrustes: need at least 3 points");
  const double n = static_cast<double>(src.rows());
  const Vec3 mu_s = src.colwise().mean().transpose();
  const Vec3 mu_d = dst.colwise().mean().transpose();
  const MatX3 xs = src.rowwise() - mu_s.transpose();
  const MatX3 xd = dst.rowwise() - mu_d.transpose();

  const double var_s = xs.squaredNorm() / n;
  if (var_s < 1e-12) throw DegenerateInputError("procrustes: source points have no spatial extent");

  const Mat3 cov = xd.transpose() * xs / n;
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // A rank-deficient covariance (collinear clouds) leaves the rotation free
  // about an axis; refuse rather than return an arbitrary branch.
  if (svd.singularValues()[1] <= 1e-12 * svd.singularValues()[0]) {
    throw DegenerateInputError("procrustes: degenerate (collinear) point configuration");
  }
  Vec3 s = Vec3::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s[2] = -1.0;
  const Mat3 rot = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  const double scale = svd.singularValues().dot(s) / var_s;
  const Vec3 trans = mu_d - scale * rot * mu_s;

  MatX3 out = scale * src * rot.transpose();
  out.rowwise() += trans.transpose();
  return out;
}

MetricReport evaluate_mesh(const MatX3& pred_joints, const MatX3& pred_vertices,
                           const MatX3& gt_joints, const MatX3& gt_vertices, int pelvis_index) {
  MetricReport rep;
  rep.mpjpe_mm = mpjpe_mm(pred_joints, gt_joints, pelvis_index);
  rep.pa_mpjpe_mm = pa_mpjpe_mm(pred_joints, gt_joints);
  rep.mpvpe_mm = mpvpe_mm(pred_vertices, gt_vertices, pred_joints.row(pelvis_index).transpose(),
                          gt_joints.row(pelvis_index).transpose());
  rep.pck_pct = pck_pct(pred_joints, gt_joints, pelvis_index);
  rep.auc_pct = auc_pct(pred_joints, gt_joints, pelvis_index);
  return rep;
}

}  // namespace mvfuse
