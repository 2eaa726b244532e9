#include "mvfuse/sceneio.hpp"

#include <fstream>
#include <memory>
#include <vector>

#include <json.hpp>

#include "binio.hpp"
#include "mvfuse/errors.hpp"
#include "mvfuse/rotmath.hpp"
#include "payloads.hpp"

namespace mvfuse {

namespace {

using nlohmann::json;

constexpr char kSceneMagic[] = "MVFUSE-SCENE-v1";

void check_rotation(const Mat3& r, const char* what) {
  if (!is_rotation(r)) {
    throw ValidationError(std::string("scene: ") + what + " is not a rotation");
  }
}

void write_extrinsics(binio::Writer& w, const Extrinsics& ext) {
  w.matrix(ext.rot);
  for (int k = 0; k < 3; ++k) w.f64(ext.trans[k]);
}

Extrinsics read_extrinsics(binio::Reader& r) {
  Extrinsics ext;
  ext.rot = r.matrix(3, 3);
  for (int k = 0; k < 3; ++k) ext.trans[k] = r.f64();
  return ext;
}

json metrics_json(const MetricReport& m) {
  return json{{"mpjpe_mm", m.mpjpe_mm},   {"pa_mpjpe_mm", m.pa_mpjpe_mm},
              {"mpvpe_mm", m.mpvpe_mm},   {"pck_pct", m.pck_pct},
              {"auc_pct", m.auc_pct},     {"epe_px", m.epe_px}};
}

std::vector<double> to_std(const VecX& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

void Scene::validate() const {
  if (!model) {
    throw ValidationError("scene: missing body model");
  }
  const int n = num_views();
  if (n < 1) {
    throw ValidationError("scene: need at least one view");
  }
  if (static_cast<int>(detections.size()) != n || static_cast<int>(tokens.size()) != n) {
    throw ValidationError("scene: cameras, detections and tokens must agree in count");
  }
  const Eigen::Index token_dim = tokens.front().z.size();
  if (token_dim < 1) {
    throw ValidationError("scene: empty prior token");
  }
  for (int i = 0; i < n; ++i) {
    const CameraModel& cam = cameras[static_cast<std::size_t>(i)];
    cam.validate();
    if (calibrated && (cam.kind != CameraKind::kPerspective || !cam.ext)) {
      throw ValidationError("scene: calibrated views need perspective cameras with extrinsics");
    }
    if (!calibrated && (cam.kind != CameraKind::kWeakPerspective || !cam.weak)) {
      throw ValidationError("scene: uncalibrated views need weak-perspective cameras");
    }
    detections[static_cast<std::size_t>(i)].validate();
    const Token& tok = tokens[static_cast<std::size_t>(i)];
    if (tok.z.size() != token_dim || !tok.z.allFinite()) {
      throw ValidationError("scene: prior tokens must be finite and share one dimension");
    }
  }
  if (gt) {
    check_rotation(gt->pose.root, "ground-truth root");
    for (int j = 1; j < kNumJoints; ++j) {
      check_rotation(gt->pose.joint(j), "ground-truth joint rotation");
    }
    if (gt->shape.beta.size() != kNumBetas) {
      throw ValidationError("scene: ground-truth beta has the wrong size");
    }
    if (gt->joints.rows() != model->num_joints() || gt->vertices.rows() != model->num_vertices()) {
      throw ValidationError("scene: ground-truth joints/vertices do not match the model");
    }
    if (!gt->joints.allFinite() || !gt->vertices.allFinite() || !gt->shape.beta.allFinite()) {
      throw ValidationError("scene: ground truth must be finite");
    }
    if (static_cast<int>(gt->view_extrinsics.size()) != n) {
      throw ValidationError("scene: ground truth needs one extrinsics block per view");
    }
    for (const Extrinsics& ext : gt->view_extrinsics) {
      check_rotation(ext.rot, "ground-truth extrinsics");
      if (!ext.trans.allFinite()) {
        throw ValidationError("scene: ground-truth extrinsics must be finite");
      }
    }
  }
}

void save_scene(const Scene& scene, const std::string& path) {
  scene.validate();
  binio::Writer w;
  w.magic(kSceneMagic);
  w.u8(scene.calibrated ? 1 : 0);
  w.u8(scene.gt ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(scene.num_views()));
  w.u32(static_cast<std::uint32_t>(scene.tokens.front().z.size()));
  detail::write_model_payload(w, *scene.model);
  for (int i = 0; i < scene.num_views(); ++i) {
    const CameraModel& cam = scene.cameras[static_cast<std::size_t>(i)];
    w.u8(cam.kind == CameraKind::kWeakPerspective ? 1 : 0);
    w.f64(cam.intr.fx);
    w.f64(cam.intr.fy);
    w.f64(cam.intr.cx);
    w.f64(cam.intr.cy);
    w.f64(cam.intr.image_w);
    w.f64(cam.intr.image_h);
    w.u8(cam.ext ? 1 : 0);
    if (cam.ext) write_extrinsics(w, *cam.ext);
    w.u8(cam.weak ? 1 : 0);
    if (cam.weak) {
      w.f64(cam.weak->scale);
      w.f64(cam.weak->tx);
      w.f64(cam.weak->ty);
    }
    const Detection2D& det = scene.detections[static_cast<std::size_t>(i)];
    w.matrix(det.kp);
    w.matrix(det.ana);
    w.matrix(scene.tokens[static_cast<std::size_t>(i)].z);
  }
  if (scene.gt) {
    const SceneGroundTruth& gt = *scene.gt;
    w.matrix(gt.pose.root);
    for (int j = 1; j < kNumJoints; ++j) w.matrix(gt.pose.joint(j));
    w.matrix(gt.shape.beta);
    w.matrix(gt.joints);
    w.matrix(gt.vertices);
    for (const Extrinsics& ext : gt.view_extrinsics) write_extrinsics(w, ext);
  }
  w.finish(path);
}

Scene load_scene(const std::string& path) {
  binio::Reader r(path);
  r.open(kSceneMagic);
  Scene scene;
  scene.calibrated = r.u8() != 0;
  const bool has_gt = r.u8() != 0;
  const auto n_views = static_cast<int>(r.u32());
  const auto token_dim = static_cast<Eigen::Index>(r.u32());
  if (n_views < 1 || n_views > 100000 || token_dim < 1 || token_dim > 1000000) {
    throw FormatError(path + ": implausible header dimensions");
  }
  scene.model = std::make_shared<const BodyModel>(detail::read_model_payload(r, path));
  for (int i = 0; i < n_views; ++i) {
    CameraModel cam;
    cam.kind = r.u8() != 0 ? CameraKind::kWeakPerspective : CameraKind::kPerspective;
    cam.intr.fx = r.f64();
    cam.intr.fy = r.f64();
    cam.intr.cx = r.f64();
    cam.intr.cy = r.f64();
    cam.intr.image_w = r.f64();
    cam.intr.image_h = r.f64();
    if (r.u8() != 0) cam.ext = read_extrinsics(r);
    if (r.u8() != 0) {
      WeakParams weak;
      weak.scale = r.f64();
      weak.tx = r.f64();
      weak.ty = r.f64();
      cam.weak = weak;
    }
    scene.cameras.push_back(cam);
    Detection2D det;
    det.kp = r.matrix(kNumKeypoints, 3);
    det.ana = r.matrix(kNumLandmarks, 3);
    scene.detections.push_back(std::move(det));
    Token tok;
    tok.z = r.matrix(token_dim, 1);
    scene.tokens.push_back(std::move(tok));
  }
  if (has_gt) {
    SceneGroundTruth gt;
    gt.pose.root = r.matrix(3, 3);
    for (int j = 1; j < kNumJoints; ++j) gt.pose.joint(j) = r.matrix(3, 3);
    gt.shape.beta = r.matrix(kNumBetas, 1);
    gt.joints = r.matrix(scene.model->num_joints(), 3);
    gt.vertices = r.matrix(scene.model->num_vertices(), 3);
    for (int i = 0; i < n_views; ++i) gt.view_extrinsics.push_back(read_extrinsics(r));
    scene.gt = std::move(gt);
  }
  r.expect_end();
  scene.validate();
  return scene;
}

ExportFormat parse_export_format(const std::string& name) {
  if (name == "records") return ExportFormat::kRecords;
  if (name == "summary") return ExportFormat::kSummary;
  throw ValidationError("unknown export format '" + name + "' (records, summary)");
}

std::string export_format_name(ExportFormat format) {
  return format == ExportFormat::kRecords ? "records" : "summary";
}

void export_result(const TTAResult& result, const std::string& path, ExportFormat format) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open for writing: " + path);
  }
  if (format == ExportFormat::kRecords) {
    for (const StepRecord& s : result.trace) {
      json line{{"step", s.step},
                {"loss_2d", s.loss_2d},
                {"loss_consistency", s.loss_consistency},
                {"loss_regularization", s.loss_regularization},
                {"loss_total", s.loss_total},
                {"loss_virtual", s.loss_virtual},
                {"grad_norm", s.grad_norm},
                {"virtual_grad_norm", s.virtual_grad_norm},
                {"eta_eff", s.eta_eff}};
      if (s.has_metrics) {
        line["view_metrics"] = metrics_json(s.view_metrics);
        line["output_metrics"] = metrics_json(s.output_metrics);
      }
      out << line.dump() << '\n';
    }
  } else {
    json j = metrics_json(result.final_output_metrics);
    j["has_gt"] = result.has_gt;
    j["steps"] = result.trace.size() - 1;
    j["view_metrics"] = metrics_json(result.final_view_metrics);
    j["output_params"] = to_std(result.output_params);
    json views = json::array();
    for (const VecX& p : result.view_params) views.push_back(to_std(p));
    j["view_params"] = std::move(views);
    out << j.dump(2) << '\n';
  }
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

}  // namespace mvfuse
