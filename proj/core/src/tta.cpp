#include "mvfuse/tta.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mvfuse/errors.hpp"

namespace mvfuse {

ConsistencyMode parse_consistency(const std::string& name) {
  if (name == "pairwise") return ConsistencyMode::kPairwise;
  if (name == "star") return ConsistencyMode::kStar;
  throw ValidationError("unknown consistency mode: " + name);
}

std::string consistency_name(ConsistencyMode m) {
  return m == ConsistencyMode::kPairwise ? "pairwise" : "star";
}

OptimVariable parse_variable(const std::string& name) {
  if (name == "token") return OptimVariable::kToken;
  if (name == "params") return OptimVariable::kParams;
  throw ValidationError("unknown optimization variable: " + name);
}

std::string variable_name(OptimVariable v) {
  return v == OptimVariable::kToken ? "token" : "params";
}

void TTAConfig::validate() const {
  if (steps < 0) throw ValidationError("tta config: steps must be nonnegative");
  if (warmup_steps < 0) throw ValidationError("tta config: warmup_steps must be nonnegative");
  if (warmup_steps > steps) throw ValidationError("tta config: warmup_steps must not exceed steps");
  if (!std::isfinite(clip_norm) || clip_norm <= 0.0) {
    throw ValidationError("tta config: clip_norm must be positive");
  }
  if (!std::isfinite(eta) || eta <= 0.0) throw ValidationError("tta config: eta must be positive");
  if (!std::isfinite(eta_virtual) || eta_virtual <= 0.0) {
    throw ValidationError("tta config: eta_virtual must be positive");
  }
  weights.validate();
}

bool clip_gradient(VecX& g, double clip_norm) {
  const double n = g.norm();
  if (n > clip_norm) {
    g *= clip_norm / n;
    return true;
  }
  return false;
}

double warmup_scale(int step, int warmup_steps) {
  if (warmup_steps <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup_steps));
}

namespace {

void check_value(double v, int step, const char* term) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite value in ") + term + " at step " +
                           std::to_string(step),
                       step, term);
  }
}

void check_vec(const VecX& v, int step, const char* term) {
  if (!v.allFinite()) {
    throw NumericError(std::string("non-finite entries in ") + term + " at step " +
                           std::to_string(step),
                       step, term);
  }
}

void mask_virtual(VecX& g, const VirtualComponents& c) {
  if (!c.orientation) g.segment<6>(0).setZero();
  if (!c.pose) g.segment(6, 6 * kNumBodyJoints).setZero();
  if (!c.shape) g.tail(kNumBetas).setZero();
}

// Losses and pre-clip gradients at one optimization state.
struct Eval {
  LossTerms l2, lc, lr;
  VirtualLossTerms lv;
  std::vector<VecX> view_grads;  // in the optimized variable (token or raw)
  VecX virtual_grad;             // masked
  double grad_norm = 0.0;
  double virtual_grad_norm = 0.0;
};

Eval evaluate(const BodyModel& model, const PriorHead& head, const TTAConfig& cfg,
              const std::vector<ViewState>& views, const std::optional<VirtualState>& virt,
              int step, std::uint64_t* rows) {
  Eval e;
  e.l2 = loss_2d(model, views, cfg.weights);
  check_value(e.l2.value, step, "2d loss");
  e.lc = cfg.consistency == ConsistencyMode::kPairwise
             ? loss_consistency_pairwise(model, views, cfg.weights, rows)
             : loss_consistency_star(model, views, cfg.weights, rows);
  check_value(e.lc.value, step, "consistency loss");
  e.lr = loss_regularization(model, views, cfg.weights);
  check_value(e.lr.value, step, "regularization loss");

  double sq = 0.0;
  e.view_grads.resize(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    VecX g = e.l2.d_params[i] + e.lc.d_params[i] + e.lr.d_params[i];
    if (cfg.variable == OptimVariable::kToken) g = token_grad(head, g);
    check_vec(g, step, "view gradient");
    sq += g.squaredNorm();
    e.view_grads[i] = std::move(g);
  }
  e.grad_norm = std::sqrt(sq);

  if (virt) {
    e.lv = loss_virtual(model, *virt, views, cfg.weights);
    check_value(e.lv.value, step, "virtual loss");
    VecX gv = e.lv.d_params;
    mask_virtual(gv, cfg.virtual_components);
    check_vec(gv, step, "virtual gradient");
    e.virtual_grad_norm = gv.norm();
    e.virtual_grad = std::move(gv);
  }
  return e;
}

// Ground-truth targets expressed in the frame each prediction lives in
// (world when calibrated, the matching camera frame otherwise), plus the
// noiseless keypoint projections EPE is measured against.
struct GtTargets {
  bool present = false;
  std::vector<MatX3> view_joints, view_vertices;
  std::vector<MatX2> view_kp2d;
  MatX3 out_joints, out_vertices;
};

GtTargets make_targets(const Scene& scene) {
  GtTargets t;
  if (!scene.gt) return t;
  const SceneGroundTruth& gt = *scene.gt;
  t.present = true;
  const int n = scene.num_views();
  if (scene.calibrated) {
    t.view_joints.assign(static_cast<std::size_t>(n), gt.joints);
    t.view_vertices.assign(static_cast<std::size_t>(n), gt.vertices);
    const MatX3 kp = regress_keypoints(*scene.model, gt.vertices);
    for (int i = 0; i < n; ++i) {
      t.view_kp2d.push_back(project(scene.cameras[static_cast<std::size_t>(i)], kp, false));
    }
    t.out_joints = gt.joints;
    t.out_vertices = gt.vertices;
  } else {
    for (int i = 0; i < n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      PoseParams p = gt.pose;
      p.root = orient_to_view(gt.pose.root, gt.view_extrinsics[iu]);
      const MeshResult m = forward(*scene.model, p, gt.shape);
      t.view_joints.push_back(m.joints);
      t.view_vertices.push_back(m.vertices);
      t.view_kp2d.push_back(
          project(scene.cameras[iu], regress_keypoints(*scene.model, m.vertices), true));
    }
    t.out_joints = t.view_joints[0];
    t.out_vertices = t.view_vertices[0];
  }
  return t;
}

struct MetricCtx {
  const BodyModel& model;
  const GtTargets& targets;
  const std::vector<CameraModel>& cameras;
  bool calibrated = true;
};

void add_report(MetricReport& acc, const MetricReport& r, double w) {
  acc.mpjpe_mm += w * r.mpjpe_mm;
  acc.pa_mpjpe_mm += w * r.pa_mpjpe_mm;
  acc.mpvpe_mm += w * r.mpvpe_mm;
  acc.pck_pct += w * r.pck_pct;
  acc.auc_pct += w * r.auc_pct;
  acc.epe_px += w * r.epe_px;
}

MetricReport mean_view_metrics(const MetricCtx& c, const std::vector<ViewState>& views) {
  MetricReport acc;
  const double w = 1.0 / static_cast<double>(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    MetricReport r =
        evaluate_mesh(views[i].posed_cache.world_joints, views[i].posed_vertices,
                      c.targets.view_joints[i], c.targets.view_vertices[i], c.model.pelvis_index);
    r.epe_px = epe_px(views[i].kp2d, c.targets.view_kp2d[i]);
    add_report(acc, r, w);
  }
  return acc;
}

// Metrics of the output body against ground truth; EPE of its reprojection
// through every camera when calibrated, through view 0 otherwise (the body
// lives in view 0's frame there).
MetricReport output_report(const MetricCtx& c, const VecX& params) {
  auto [pose, shape] = raw_to_pose(params);
  const MeshResult m = forward(c.model, pose, shape);
  MetricReport rep = evaluate_mesh(m.joints, m.vertices, c.targets.out_joints,
                                   c.targets.out_vertices, c.model.pelvis_index);
  const MatX3 kp = regress_keypoints(c.model, m.vertices);
  if (c.calibrated) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c.cameras.size(); ++i) {
      acc += epe_px(project(c.cameras[i], kp, false), c.targets.view_kp2d[i]);
    }
    rep.epe_px = acc / static_cast<double>(c.cameras.size());
  } else {
    rep.epe_px = epe_px(project(c.cameras[0], kp, true), c.targets.view_kp2d[0]);
  }
  return rep;
}

// The run's output body: the virtual view when present, else the plain mean
// of the current per-view bodies (root from view 0 when uncalibrated).
VecX output_body_params(const std::vector<ViewState>& views,
                        const std::optional<VirtualState>& virt,
                        const std::optional<std::vector<Extrinsics>>& exts) {
  if (virt) return virt->params;
  std::vector<PoseParams> poses;
  std::vector<ShapeParams> shapes;
  for (const ViewState& v : views) {
    auto [p, s] = raw_to_pose(v.params);
    poses.push_back(p);
    shapes.push_back(s);
  }
  const std::optional<VirtualView> vv =
      init_strategy(poses, shapes, InitStrategy::kAveraged, exts, nullptr);
  return pose_to_raw(vv->pose, vv->shape);
}

StepRecord make_record(int step, double eta_eff, const Eval& e, const MetricCtx& c,
                       const std::vector<ViewState>& views,
                       const std::optional<VirtualState>& virt,
                       const std::optional<std::vector<Extrinsics>>& exts) {
  StepRecord rec;
  rec.step = step;
  rec.loss_2d = e.l2.value;
  rec.loss_consistency = e.lc.value;
  rec.loss_regularization = e.lr.value;
  rec.loss_total = e.l2.value + e.lc.value + e.lr.value;
  rec.loss_virtual = e.lv.value;
  rec.grad_norm = e.grad_norm;
  rec.virtual_grad_norm = e.virtual_grad_norm;
  rec.eta_eff = eta_eff;
  if (c.targets.present) {
    rec.has_metrics = true;
    rec.view_metrics = mean_view_metrics(c, views);
    rec.output_metrics = output_report(c, output_body_params(views, virt, exts));
  }
  return rec;
}

}  // namespace

TTAResult run_tta(const Scene& scene, const PriorHead& head, const TTAConfig& config) {
  scene.validate();
  config.validate();
  head.validate();
  if (config.calibrated != scene.calibrated) {
    throw ValidationError("tta: config calibration flag does not match the scene");
  }
  const BodyModel& model = *scene.model;
  const int n = scene.num_views();
  for (const Token& tok : scene.tokens) {
    if (tok.z.size() != head.token_dim()) {
      throw ValidationError("tta: token dimension does not match the head");
    }
  }

  std::vector<ViewState> views;
  views.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    views.push_back(make_view_state(model, head, scene.tokens[iu], scene.cameras[iu],
                                    scene.detections[iu], scene.calibrated));
  }

  std::vector<PoseParams> poses;
  std::vector<ShapeParams> shapes;
  for (const ViewState& v : views) {
    auto [p, s] = raw_to_pose(v.params);
    poses.push_back(p);
    shapes.push_back(s);
  }
  std::optional<std::vector<Extrinsics>> exts;
  if (scene.calibrated) {
    exts.emplace();
    for (const CameraModel& c : scene.cameras) exts->push_back(*c.ext);
  }

  TTAResult out;
  const std::optional<VirtualView> vv =
      init_strategy(poses, shapes, config.init, exts, &out.init_diag);
  std::optional<VirtualState> virt;
  if (vv) virt = make_virtual_state(model, *vv);

  const GtTargets targets = make_targets(scene);
  const MetricCtx mctx{model, targets, scene.cameras, scene.calibrated};
  out.has_gt = targets.present;
  out.trace.reserve(static_cast<std::size_t>(config.steps) + 1);

  Eval eval = evaluate(model, head, config, views, virt, 0, &out.diag.consistency_rows);
  out.diag.active_detections = eval.l2.active_rows;
  out.diag.all_detections_masked = eval.l2.all_masked;
  out.trace.push_back(make_record(0, 0.0, eval, mctx, views, virt, exts));

  for (int t = 1; t <= config.steps; ++t) {
    const double scale = warmup_scale(t, config.warmup_steps);
    const double eta_eff = config.eta * scale;

    for (std::size_t i = 0; i < views.size(); ++i) {
      VecX g = eval.view_grads[i];
      if (clip_gradient(g, config.clip_norm)) ++out.diag.clip_events;
      ViewState& view = views[i];
      if (config.variable == OptimVariable::kToken) {
        set_view_token(model, head, view, view.token.z - eta_eff * g);
      } else {
        view.params -= eta_eff * g;
        refresh_view(model, view);
      }
      check_vec(view.params, t, "view parameters");
    }

    if (virt) {
      const VirtualLossTerms lv = loss_virtual(model, *virt, views, config.weights);
      check_value(lv.value, t, "virtual loss");
      VecX gv = lv.d_params;
      mask_virtual(gv, config.virtual_components);
      check_vec(gv, t, "virtual gradient");
      if (clip_gradient(gv, config.clip_norm)) ++out.diag.clip_events;
      virt->params -= config.eta_virtual * scale * gv;
      check_vec(virt->params, t, "virtual parameters");
      refresh_virtual(model, *virt);
    }

    eval = evaluate(model, head, config, views, virt, t, &out.diag.consistency_rows);
    out.trace.push_back(make_record(t, eta_eff, eval, mctx, views, virt, exts));
  }

  for (const ViewState& v : views) {
    out.view_params.push_back(v.params);
    out.view_tokens.push_back(v.token);
  }
  if (virt) out.virtual_params = virt->params;
  out.output_params = output_body_params(views, virt, exts);
  if (out.has_gt) {
    out.final_view_metrics = out.trace.back().view_metrics;
    out.final_output_metrics = out.trace.back().output_metrics;
  }
  return out;
}

TTAResult optimize_smpl_direct(const Scene& scene, const PriorHead& head, const TTAConfig& config) {
  TTAConfig direct = config;
  direct.variable = OptimVariable::kParams;
  return run_tta(scene, head, direct);
}

}  // namespace mvfuse
