#include "mvfuse/bodymodel.hpp"

#include <cmath>
#include <string>

#include "binio.hpp"
#include "mvfuse/errors.hpp"
#include "payloads.hpp"

namespace mvfuse {

namespace {

constexpr char kModelMagic[] = "MVFUSE-MODEL-v1";

void check_row_sums(const MatX& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double s = m.row(r).sum();
    if (std::abs(s - 1.0) > 1e-6) {
      throw ValidationError(std::string(what) + ": row " + std::to_string(r) + " sums to " +
                            std::to_string(s));
    }
  }
}

}  // namespace

void BodyModel::validate() {
  const int v = num_vertices();
  const int j = num_joints();
  const int b = num_betas();
  if (v < 1) throw ValidationError("body model: no vertices");
  if (j != kNumJoints) throw ValidationError("body model: expected " + std::to_string(kNumJoints) + " joints, got " + std::to_string(j));
  if (b != kNumBetas) throw ValidationError("body model: expected " + std::to_string(kNumBetas) + " blendshapes, got " + std::to_string(b));
  if (!template_vertices.allFinite()) throw ValidationError("body model: non-finite template");
  for (const MatX3& d : shape_dirs) {
    if (d.rows() != v || !d.allFinite()) throw ValidationError("body model: bad blendshape block");
  }
  if (parents[0] != -1) throw ValidationError("body model: parents[0] must be -1");
  for (int k = 1; k < j; ++k) {
    if (parents[k] < 0 || parents[k] >= k) {
      throw ValidationError("body model: parents[" + std::to_string(k) + "] must point to a lower-indexed joint");
    }
  }
  if (joint_regressor_rest.rows() != j || joint_regressor_rest.cols() != v) {
    throw ValidationError("body model: joint regressor shape mismatch");
  }
  if (skin_weights.rows() != v || skin_weights.cols() != j) {
    throw ValidationError("body model: skin weight shape mismatch");
  }
  if (kp_regressor.rows() != kNumKeypoints || kp_regressor.cols() != v) {
    throw ValidationError("body model: keypoint regressor shape mismatch");
  }
  if (static_cast<int>(landmark_indices.size()) != kNumLandmarks) {
    throw ValidationError("body model: expected " + std::to_string(kNumLandmarks) + " landmark indices");
  }
  for (const int idx : landmark_indices) {
    if (idx < 0 || idx >= v) throw ValidationError("body model: landmark index out of range");
  }
  if (pelvis_index < 0 || pelvis_index >= j) throw ValidationError("body model: pelvis index out of range");
  check_row_sums(joint_regressor_rest, "joint regressor");
  check_row_sums(skin_weights, "skin weights");
  check_row_sums(kp_regressor, "keypoint regressor");
  if ((skin_weights.array() < 0.0).any()) {
    throw ValidationError("body model: skin weights must be nonnegative");
  }

  skin_nz_.assign(static_cast<std::size_t>(v), {});
  for (int i = 0; i < v; ++i) {
    for (int k = 0; k < j; ++k) {
      const double w = skin_weights(i, k);
      if (std::abs(w) > 1e-12) skin_nz_[static_cast<std::size_t>(i)].emplace_back(k, w);
    }
  }
}

MeshResult forward_cached(const BodyModel& model, const PoseParams& pose, const ShapeParams& shape,
                          BodyCache& cache) {
  const int v = model.num_vertices();
  const int j = model.num_joints();
  if (shape.beta.size() != model.num_betas()) throw ValidationError("forward: beta size mismatch");

  cache.shaped = model.template_vertices;
  for (int b = 0; b < model.num_betas(); ++b) {
    cache.shaped += shape.beta[b] * model.shape_dirs[static_cast<std::size_t>(b)];
  }
  cache.rest_joints = model.joint_regressor_rest * cache.shaped;

  for (int k = 0; k < j; ++k) cache.rot[static_cast<std::size_t>(k)] = pose.joint(k);
  cache.world_joints.resize(j, 3);
  cache.world_rot[0] = pose.root;
  cache.world_joints.row(0) = cache.rest_joints.row(0);
  for (int k = 1; k < j; ++k) {
    const int p = model.parents[k];
    cache.world_rot[static_cast<std::size_t>(k)] =
        cache.world_rot[static_cast<std::size_t>(p)] * pose.joint(k);
    const Vec3 offset = (cache.rest_joints.row(k) - cache.rest_joints.row(p)).transpose();
    cache.world_joints.row(k) =
        cache.world_joints.row(p) +
        (cache.world_rot[static_cast<std::size_t>(p)] * offset).transpose();
  }

  MeshResult out;
  out.joints = cache.world_joints;
  out.vertices.resize(v, 3);
  const auto& lists = model.skin_lists();
  for (int i = 0; i < v; ++i) {
    Vec3 acc = Vec3::Zero();
    const Vec3 si = cache.shaped.row(i).transpose();
    for (const auto& [k, w] : lists[static_cast<std::size_t>(i)]) {
      const Vec3 local = si - cache.rest_joints.row(k).transpose();
      acc += w * (cache.world_rot[static_cast<std::size_t>(k)] * local +
                  cache.world_joints.row(k).transpose());
    }
    out.vertices.row(i) = acc.transpose();
  }
  return out;
}

MeshResult forward(const BodyModel& model, const PoseParams& pose, const ShapeParams& shape) {
  BodyCache cache;
  return forward_cached(model, pose, shape, cache);
}

BodyGrad backward(const BodyModel& model, const BodyCache& cache, const MatX3& d_vertices,
                  const MatX3& d_joints) {
  const int v = model.num_vertices();
  const int j = model.num_joints();

  std::array<Mat3, kNumJoints> d_world_rot;
  for (auto& m : d_world_rot) m.setZero();
  MatX3 d_rest = MatX3::Zero(j, 3);
  MatX3 d_shaped = MatX3::Zero(v, 3);
  MatX3 d_t = d_joints.rows() == j ? d_joints : MatX3::Zero(j, 3);

  const auto& lists = model.skin_lists();
  if (d_vertices.rows() == v) {
    for (int i = 0; i < v; ++i) {
      const Vec3 gv = d_vertices.row(i).transpose();
      if (gv.isZero(0.0)) continue;
      const Vec3 si = cache.shaped.row(i).transpose();
      for (const auto& [k, w] : lists[static_cast<std::size_t>(i)]) {
        const auto ku = static_cast<std::size_t>(k);
        const Vec3 local = si - cache.rest_joints.row(k).transpose();
        d_world_rot[ku] += w * gv * local.transpose();
        d_t.row(k) += w * gv.transpose();
        const Vec3 back = w * (cache.world_rot[ku].transpose() * gv);
        d_shaped.row(i) += back.transpose();
        d_rest.row(k) -= back.transpose();
      }
    }
  }

  BodyGrad grad;
  for (int k = j - 1; k >= 1; --k) {
    const auto ku = static_cast<std::size_t>(k);
    const int p = model.parents[k];
    const auto pu = static_cast<std::size_t>(p);
    grad.d_rot[ku] = cache.world_rot[pu].transpose() * d_world_rot[ku];
    d_world_rot[pu] += d_world_rot[ku] * cache.rot[ku].transpose();

    const Vec3 gt = d_t.row(k).transpose();
    d_t.row(p) += gt.transpose();
    const Vec3 offset = (cache.rest_joints.row(k) - cache.rest_joints.row(p)).transpose();
    d_world_rot[pu] += gt * offset.transpose();
    const Vec3 back = cache.world_rot[pu].transpose() * gt;
    d_rest.row(k) += back.transpose();
    d_rest.row(p) -= back.transpose();
  }
  grad.d_rot[0] = d_world_rot[0];
  d_rest.row(0) += d_t.row(0);

  d_shaped += model.joint_regressor_rest.transpose() * d_rest;
  grad.d_beta.resize(model.num_betas());
  for (int b = 0; b < model.num_betas(); ++b) {
    grad.d_beta[b] = model.shape_dirs[static_cast<std::size_t>(b)].cwiseProduct(d_shaped).sum();
  }
  return grad;
}

MatX3 regress_keypoints(const BodyModel& model, const MatX3& vertices) {
  return model.kp_regressor * vertices;
}

MatX3 extract_landmarks(const BodyModel& model, const MatX3& vertices) {
  MatX3 out(kNumLandmarks, 3);
  for (int l = 0; l < kNumLandmarks; ++l) {
    out.row(l) = vertices.row(model.landmark_indices[static_cast<std::size_t>(l)]);
  }
  return out;
}

namespace detail {

void write_model_payload(binio::Writer& w, const BodyModel& model) {
  w.u32(static_cast<std::uint32_t>(model.num_vertices()));
  w.u32(static_cast<std::uint32_t>(model.num_joints()));
  w.u32(static_cast<std::uint32_t>(model.num_betas()));
  w.u32(static_cast<std::uint32_t>(model.pelvis_index));
  w.u32(static_cast<std::uint32_t>(model.kp_regressor.rows()));
  w.u32(static_cast<std::uint32_t>(model.landmark_indices.size()));
  w.matrix(model.template_vertices);
  for (const MatX3& d : model.shape_dirs) w.matrix(d);
  for (Eigen::Index k = 0; k < model.parents.size(); ++k) w.i32(model.parents[k]);
  w.matrix(model.joint_regressor_rest);
  w.matrix(model.skin_weights);
  w.matrix(model.kp_regressor);
  for (const int idx : model.landmark_indices) w.i32(idx);
}

BodyModel read_model_payload(binio::Reader& r, const std::string& path) {
  const auto v = static_cast<Eigen::Index>(r.u32());
  const auto j = static_cast<Eigen::Index>(r.u32());
  const auto b = static_cast<Eigen::Index>(r.u32());
  const auto pelvis = static_cast<int>(r.u32());
  const auto n_kp = static_cast<Eigen::Index>(r.u32());
  const auto n_lm = static_cast<Eigen::Index>(r.u32());
  if (v < 1 || v > 10000000 || j < 1 || j > 1024 || b < 0 || b > 1024 || n_kp < 0 ||
      n_kp > 100000 || n_lm < 0 || n_lm > 100000) {
    throw FormatError(path + ": implausible header dimensions");
  }

  BodyModel model;
  model.pelvis_index = pelvis;
  model.template_vertices = r.matrix(v, 3);
  model.shape_dirs.reserve(static_cast<std::size_t>(b));
  for (Eigen::Index k = 0; k < b; ++k) model.shape_dirs.push_back(r.matrix(v, 3));
  model.parents.resize(j);
  for (Eigen::Index k = 0; k < j; ++k) model.parents[k] = r.i32();
  model.joint_regressor_rest = r.matrix(j, v);
  model.skin_weights = r.matrix(v, j);
  model.kp_regressor = r.matrix(n_kp, v);
  model.landmark_indices.resize(static_cast<std::size_t>(n_lm));
  for (Eigen::Index k = 0; k < n_lm; ++k) model.landmark_indices[static_cast<std::size_t>(k)] = r.i32();
  model.validate();
  return model;
}

}  // namespace detail

void save_model(const BodyModel& model, const std::string& path) {
  binio::Writer w;
  w.magic(kModelMagic);
  detail::write_model_payload(w, model);
  w.finish(path);
}

BodyModel load_model(const std::string& path) {
  binio::Reader r(path);
  r.open(kModelMagic);
  BodyModel model = detail::read_model_payload(r, path);
  r.expect_end();
  return model;
}

}  // namespace mvfuse
