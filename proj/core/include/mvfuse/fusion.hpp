#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mvfuse/bodymodel.hpp"
#include "mvfuse/camera.hpp"
#include "mvfuse/types.hpp"

namespace mvfuse {

// Shared body estimate fused from the per-view estimates. With calibration
// the root orientation lives in the world frame; without it the root is a
// first-view placeholder and stays view-specific during optimization.
struct VirtualView {
  enum class OrientMode { kWorld, kPerViewFree };

  PoseParams pose;
  ShapeParams shape;
  OrientMode orient_mode = OrientMode::kWorld;
};

enum class InitStrategy { kNone, kTPose, kAveraged, kWeighted };

InitStrategy parse_strategy(const std::string& name);  // throws ValidationError
std::string strategy_name(InitStrategy s);

// Reliability filter over N candidate 6D vectors for one joint: distances
// to the mean are compared against their standard deviation and the close
// candidates are retained; an empty result degenerates to retaining all.
std::vector<int> filter_joint(const std::vector<Vec6>& candidates);

struct FusionDiag {
  std::array<int, kNumJoints> retained_counts{};
};

// Per-joint filtered mean of the view poses. With extrinsics the roots are
// compared and averaged in the world frame; without them the root is copied
// from the first view. Extrinsics must be given for all views or none.
PoseParams init_virtual_pose(const std::vector<PoseParams>& views,
                             const std::optional<std::vector<Extrinsics>>& extrinsics,
                             FusionDiag* diag = nullptr);

// Arithmetic mean of the view betas.
ShapeParams init_virtual_shape(const std::vector<ShapeParams>& views);

// Dispatches on the strategy; kNone yields no virtual view.
std::optional<VirtualView> init_strategy(const std::vector<PoseParams>& poses,
                                         const std::vector<ShapeParams>& shapes,
                                         InitStrategy strategy,
                                         const std::optional<std::vector<Extrinsics>>& extrinsics,
                                         FusionDiag* diag = nullptr);

}  // namespace mvfuse
