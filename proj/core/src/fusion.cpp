#include "mvfuse/fusion.hpp"

#include <cmath>

#include "mvfuse/errors.hpp"
#include "mvfuse/rotmath.hpp"

namespace mvfuse {

InitStrategy parse_strategy(const std::string& name) {
  if (name == "none") return InitStrategy::kNone;
  if (name == "t-pose") return InitStrategy::kTPose;
  if (name == "averaged") return InitStrategy::kAveraged;
  if (name == "weighted") return InitStrategy::kWeighted;
  throw ValidationError("unknown strategy: " + name);
}

std::string strategy_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::kNone: return "none";
    case InitStrategy::kTPose: return "t-pose";
    case InitStrategy::kAveraged: return "averaged";
    case InitStrategy::kWeighted: return "weighted";
  }
  return "?";
}

std::vector<int> filter_joint(const std::vector<Vec6>& candidates) {
  const int n = static_cast<int>(candidates.size());
  if (n == 0) throw ValidationError("filter_joint: empty candidate set");

  Vec6 mean = Vec6::Zero();
  for (const Vec6& c : candidates) mean += c;
  mean /= static_cast<double>(n);

  VecX dist(n);
  for (int i = 0; i < n; ++i) dist[i] = (candidates[i] - mean).norm();

  double sigma = 0.0;
  if (n > 1) {
    const double d_mean = dist.mean();
    sigma = std::sqrt((dist.array() - d_mean).square().sum() / static_cast<double>(n - 1));
  }

  // Inclusive comparison with a small relative slack: the boundary case
  // (clustered candidates plus one outlier) lands exactly on d == sigma.
  const double cutoff = sigma + 1e-12 * std::max(sigma, 1.0);
  std::vector<int> retained;
  for (int i = 0; i < n; ++i) {
    if (dist[i] <= cutoff) retained.push_back(i);
  }
  if (retained.empty()) {
    for (int i = 0; i < n; ++i) retained.push_back(i);
  }
  return retained;
}

namespace {

Mat3 world_root(const PoseParams& pose, const std::optional<std::vector<Extrinsics>>& ext, int i) {
  return ext ? orient_to_world(pose.root, (*ext)[static_cast<std::size_t>(i)]) : pose.root;
}

Mat3 fuse_rotations(const std::vector<Vec6>& sixd, bool filtered, int* retained_count) {
  std::vector<int> keep;
  if (filtered) {
    keep = filter_joint(sixd);
  } else {
    for (int i = 0; i < static_cast<int>(sixd.size()); ++i) keep.push_back(i);
  }
  Vec6 mean = Vec6::Zero();
  for (const int i : keep) mean += sixd[static_cast<std::size_t>(i)];
  mean /= static_cast<double>(keep.size());
  if (retained_count) *retained_count = static_cast<int>(keep.size());
  return sixd_to_rotmat(Rot6D::from_vec(mean));
}

PoseParams mean_pose(const std::vector<PoseParams>& views,
                     const std::optional<std::vector<Extrinsics>>& extrinsics, bool filtered,
                     FusionDiag* diag) {
  const int n = static_cast<int>(views.size());
  if (n == 0) throw ValidationError("init_virtual_pose: empty view set");
  if (extrinsics && static_cast<int>(extrinsics->size()) != n) {
    throw ValidationError("init_virtual_pose: mixed calibrated/uncalibrated view set");
  }

  PoseParams fused;
  FusionDiag local;
  if (extrinsics) {
    std::vector<Vec6> roots;
    roots.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      roots.push_back(rotmat_to_6d(world_root(views[static_cast<std::size_t>(i)], extrinsics, i)).vec());
    }
    fused.root = fuse_rotations(roots, filtered, &local.retained_counts[0]);
  } else {
    fused.root = views[0].root;
    local.retained_counts[0] = n;
  }

  for (int j = 1; j < kNumJoints; ++j) {
    std::vector<Vec6> sixd;
    sixd.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      sixd.push_back(rotmat_to_6d(views[static_cast<std::size_t>(i)].joint(j)).vec());
    }
    fused.joint(j) = fuse_rotations(sixd, filtered, &local.retained_counts[static_cast<std::size_t>(j)]);
  }
  if (diag) *diag = local;
  return fused;
}

}  // namespace

PoseParams init_virtual_pose(const std::vector<PoseParams>& views,
                             const std::optional<std::vector<Extrinsics>>& extrinsics,
                             FusionDiag* diag) {
  return mean_pose(views, extrinsics, true, diag);
}

ShapeParams init_virtual_shape(const std::vector<ShapeParams>& views) {
  if (views.empty()) throw ValidationError("init_virtual_shape: empty view set");
  ShapeParams out;
  for (const ShapeParams& s : views) out.beta += s.beta;
  out.beta /= static_cast<double>(views.size());
  return out;
}

std::optional<VirtualView> init_strategy(const std::vector<PoseParams>& poses,
                                         const std::vector<ShapeParams>& shapes,
                                         InitStrategy strategy,
                                         const std::optional<std::vector<Extrinsics>>& extrinsics,
                                         FusionDiag* diag) {
  if (strategy == InitStrategy::kNone) return std::nullopt;
  if (poses.empty() || poses.size() != shapes.size()) {
    throw ValidationError("init_strategy: view pose/shape lists must be nonempty and equal-sized");
  }
  VirtualView v;
  v.orient_mode = extrinsics ? VirtualView::OrientMode::kWorld : VirtualView::OrientMode::kPerViewFree;
  v.shape = init_virtual_shape(shapes);
  switch (strategy) {
    case InitStrategy::kTPose:
      v.pose = PoseParams{};
      v.shape = ShapeParams{};
      if (diag) diag->retained_counts.fill(static_cast<int>(poses.size()));
      break;
    case InitStrategy::kAveraged:
      v.pose = mean_pose(poses, extrinsics, false, diag);
      break;
    case InitStrategy::kWeighted:
      v.pose = mean_pose(poses, extrinsics, true, diag);
      break;
    case InitStrategy::kNone:
      break;
  }
  return v;
}

}  // namespace mvfuse
