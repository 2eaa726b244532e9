#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvfuse/fusion.hpp"
#include "mvfuse/losses.hpp"
#include "mvfuse/metrics.hpp"
#include "mvfuse/scene.hpp"

namespace mvfuse {

enum class ConsistencyMode { kPairwise, kStar };
enum class OptimVariable { kToken, kParams };

ConsistencyMode parse_consistency(const std::string& name);  // throws ValidationError
std::string consistency_name(ConsistencyMode m);
OptimVariable parse_variable(const std::string& name);  // throws ValidationError
std::string variable_name(OptimVariable v);

// Which parameter blocks the virtual-view phase is allowed to update.
struct VirtualComponents {
  bool orientation = true;  // raw rows 0..5
  bool pose = true;         // raw rows 6..143
  bool shape = true;        // raw rows 144..153
};

struct TTAConfig {
  int steps = 200;
  int warmup_steps = 20;
  double clip_norm = 0.1;   // per-variable gradient clipping threshold
  double eta = 6e-2;        // per-view step size
  double eta_virtual = 1e-2;
  LossWeights weights;
  ConsistencyMode consistency = ConsistencyMode::kPairwise;
  OptimVariable variable = OptimVariable::kToken;
  VirtualComponents virtual_components;
  InitStrategy init = InitStrategy::kWeighted;
  bool calibrated = true;  // must match the scene; guards config mixups

  void validate() const;
};

// One row of the optimization trace. Row 0 describes the initialization;
// row t describes the state after step t. Loss values and gradient norms
// are evaluated fresh at the recorded state, before any clipping. Metric
// rows are filled only when the scene carries ground truth; output_metrics
// scores the run's output body: the virtual view when present, else the
// plain mean of the current per-view bodies.
struct StepRecord {
  int step = 0;
  double loss_2d = 0.0;
  double loss_consistency = 0.0;
  double loss_regularization = 0.0;
  double loss_total = 0.0;  // per-view objective: 2d + consistency + regularization
  double loss_virtual = 0.0;
  double grad_norm = 0.0;          // concatenated per-view gradients
  double virtual_grad_norm = 0.0;  // masked virtual gradient
  double eta_eff = 0.0;            // step size applied at this step (0 in row 0)
  bool has_metrics = false;
  MetricReport view_metrics;  // mean over views
  MetricReport output_metrics;
};

struct TTADiagnostics {
  std::vector<int> active_detections;  // unmasked detection rows per view
  bool all_detections_masked = false;  // ran on consistency + regularization only
  std::uint64_t clip_events = 0;       // applied gradient clips across the run
  std::uint64_t consistency_rows = 0;  // residual rows evaluated by the consistency loss
};

struct TTAResult {
  std::vector<StepRecord> trace;  // steps + 1 rows
  std::vector<VecX> view_params;  // final raw parameters per view
  std::vector<Token> view_tokens;
  std::optional<VecX> virtual_params;  // absent when init strategy is none
  VecX output_params;                  // raw parameters of the output body
  FusionDiag init_diag;
  TTADiagnostics diag;
  bool has_gt = false;
  MetricReport final_view_metrics;
  MetricReport final_output_metrics;
};

// Scales g down to clip_norm when its Euclidean norm exceeds it; reports
// whether scaling was applied.
bool clip_gradient(VecX& g, double clip_norm);

// Warmup ramp: the step size applied at step t (1-based) is
// eta * min(1, t / warmup_steps); warmup_steps == 0 disables the ramp.
double warmup_scale(int step, int warmup_steps);

// Runs the two-phase adaptation loop on a scene: phase A steps every view
// against the 2D, cross-view-consistency and regularization losses, phase B
// steps the virtual view against the views (stop-gradient). Throws
// NumericError naming the step and term when a value turns non-finite.
TTAResult run_tta(const Scene& scene, const PriorHead& head, const TTAConfig& config);

// Same loop with the per-view raw parameters as the optimized variables.
// The head still decodes the scene's tokens into the starting parameters.
TTAResult optimize_smpl_direct(const Scene& scene, const PriorHead& head, const TTAConfig& config);

}  // namespace mvfuse
