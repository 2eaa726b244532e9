#pragma once

#include "mvfuse/types.hpp"

namespace mvfuse {

// Rotation as a rotation vector (axis * angle, radians).
struct AxisAngle {
  Vec3 v = Vec3::Zero();
};

// Continuous 6D rotation representation: the first two columns of a
// rotation matrix, stored column-after-column as (a, b).
struct Rot6D {
  Vec3 a = Vec3::UnitX();
  Vec3 b = Vec3::UnitY();

  Vec6 vec() const {
    Vec6 v;
    v << a, b;
    return v;
  }
  static Rot6D from_vec(const Vec6& v) { return Rot6D{v.head<3>(), v.tail<3>()}; }
};

// True when R^T R = I within tol and det(R) = 1 within tol.
bool is_rotation(const Mat3& r, double tol = 1e-6);

// Rodrigues formula with a second-order Taylor branch below 1e-8 rad.
Mat3 aa_to_rotmat(const AxisAngle& aa);

// Inverse of aa_to_rotmat. Input must be a rotation matrix (checked).
// Angle is returned in [0, pi]; at exactly pi the axis sign is fixed by
// making its first nonzero component nonnegative.
AxisAngle rotmat_to_aa(const Mat3& r);

// First two columns of the matrix.
Rot6D rotmat_to_6d(const Mat3& r);

// Gram-Schmidt decode of the 6D representation. Throws DegenerateInputError
// when the first column is near zero or the two columns are near collinear.
Mat3 sixd_to_rotmat(const Rot6D& d);

// Adjoint of sixd_to_rotmat: given dL/dR, returns dL/d(a,b) evaluated at
// the same input that produced R.
Vec6 sixd_to_rotmat_backward(const Rot6D& d, const Mat3& d_r);

// arccos((trace(r1^T r2) - 1) / 2) with the argument clamped to [-1, 1].
double geodesic_dist(const Mat3& r1, const Mat3& r2);

}  // namespace mvfuse
