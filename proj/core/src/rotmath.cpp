#include "mvfuse/rotmath.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvfuse/errors.hpp"

namespace mvfuse {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

void check_finite(const Mat3& r, const char* what) {
  if (!r.allFinite()) throw DegenerateInputError(std::string(what) + ": non-finite matrix");
}

}  // namespace

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho_err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho_err <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 aa_to_rotmat(const AxisAngle& aa) {
  if (!aa.v.allFinite()) throw DegenerateInputError("aa_to_rotmat: non-finite input");
  const double theta = aa.v.norm();
  const Mat3 k = skew(aa.v);
  if (theta < 1e-8) {
    // sin(t)/t ~ 1 - t^2/6, (1-cos(t))/t^2 ~ 1/2 - t^2/24
    const double t2 = theta * theta;
    return Mat3::Identity() + (1.0 - t2 / 6.0) * k + (0.5 - t2 / 24.0) * k * k;
  }
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + s * k + c * k * k;
}

AxisAngle rotmat_to_aa(const Mat3& r) {
  check_finite(r, "rotmat_to_aa");
  if (!is_rotation(r, 1e-6)) throw DegenerateInputError("rotmat_to_aa: input is not a rotation matrix");
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_theta = 0.5 * w.norm();
  const double cos_theta = 0.5 * (r.trace() - 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < 1e-8) {
    return AxisAngle{0.5 * w};
  }
  if (theta < M_PI - 1e-4) {
    return AxisAngle{theta * w / (2.0 * sin_theta)};
  }
  // Near pi the skew part vanishes; recover the axis from R + I, whose
  // columns are all parallel to the axis.
  const Mat3 b = 0.5 * (r + Mat3::Identity());
  int k = 0;
  b.diagonal().maxCoeff(&k);
  Vec3 axis;
  axis[k] = std::sqrt(std::max(b(k, k), 0.0));
  for (int j = 0; j < 3; ++j) {
    if (j != k) axis[j] = b(j, k) / axis[k];
  }
  axis.normalize();
  // Keep sign consistent with the skew part when it is still usable,
  // otherwise make the first nonzero component nonnegative.
  if (sin_theta > 1e-12) {
    if (axis.dot(w) < 0.0) axis = -axis;
  } else {
    for (int j = 0; j < 3; ++j) {
      if (std::abs(axis[j]) > 1e-12) {
        if (axis[j] < 0.0) axis = -axis;
        break;
      }
    }
  }
  return AxisAngle{theta * axis};
}

Rot6D rotmat_to_6d(const Mat3& r) {
  check_finite(r, "rotmat_to_6d");
  return Rot6D{r.col(0), r.col(1)};
}

Mat3 sixd_to_rotmat(const Rot6D& d) {
  if (!d.a.allFinite() || !d.b.allFinite()) throw DegenerateInputError("sixd_to_rotmat: non-finite input");
  const double na = d.a.norm();
  if (na < 1e-8) throw DegenerateInputError("sixd_to_rotmat: first column near zero");
  const Vec3 c1 = d.a / na;
  const Vec3 u = d.b - c1.dot(d.b) * c1;
  const double nu = u.norm();
  if (nu < 1e-8) throw DegenerateInputError("sixd_to_rotmat: columns near collinear");
  const Vec3 c2 = u / nu;
  Mat3 r;
  r.col(0) = c1;
  r.col(1) = c2;
  r.col(2) = c1.cross(c2);
  return r;
}

Vec6 sixd_to_rotmat_backward(const Rot6D& d, const Mat3& d_r) {
  const double na = d.a.norm();
  if (na < 1e-8) throw DegenerateInputError("sixd_to_rotmat_backward: first column near zero");
  const Vec3 c1 = d.a / na;
  const double dot = c1.dot(d.b);
  const Vec3 u = d.b - dot * c1;
  const double nu = u.norm();
  if (nu < 1e-8) throw DegenerateInputError("sixd_to_rotmat_backward: columns near collinear");
  const Vec3 c2 = u / nu;

  const Vec3 g1 = d_r.col(0);
  const Vec3 g2 = d_r.col(1);
  const Vec3 g3 = d_r.col(2);

  // c3 = c1 x c2
  Vec3 d_c1 = c2.cross(g3);
  Vec3 d_c2 = g3.cross(c1);
  d_c2 += g2;

  // c2 = u / |u|
  const Vec3 d_u = (d_c2 - c2 * c2.dot(d_c2)) / nu;

  // u = b - (c1 . b) c1
  Vec3 d_b = d_u - c1 * c1.dot(d_u);
  d_c1 += -d.b * c1.dot(d_u) - dot * d_u;

  d_c1 += g1;

  // c1 = a / |a|
  const Vec3 d_a = (d_c1 - c1 * c1.dot(d_c1)) / na;

  Vec6 out;
  out << d_a, d_b;
  return out;
}

double geodesic_dist(const Mat3& r1, const Mat3& r2) {
  check_finite(r1, "geodesic_dist");
  check_finite(r2, "geodesic_dist");
  const double c = std::clamp(0.5 * ((r1.transpose() * r2).trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace mvfuse
