#pragma once

#include "dgf/types.hpp"

namespace dgf {

// Unit quaternion stored vector-first: q = [v; s].
//
// The attached rotation maps body vectors into the inertial frame:
//   A(q) = (2s^2 - 1) I + 2 s [v x] + 2 v v^T
// and the product convention is chosen so that composition reads
//   A(q1 * q2) = A(q2) A(q1).
// Constructors normalize; ops that require unit inputs check them against
// kUnitNormTol and throw std::invalid_argument on violation.
struct Quaternion {
  Vec3 v{0.0, 0.0, 0.0};
  double s{1.0};

  Quaternion() = default;
  Quaternion(const Vec3& vec, double scalar);  // normalizes, throws on ~zero norm

  double norm() const;
  Quaternion conjugate() const;      // [-v; s]
  Quaternion normalized() const;
  Quaternion canonicalized() const;  // flips sign so s >= 0
  Vec4 coeffs() const;               // [vx, vy, vz, s]
};

inline constexpr double kUnitNormTol = 1e-6;

// Skew-symmetric cross-product matrix [v x].
Mat3 cross_matrix(const Vec3& v);

// 4x4 product kernel: Omega(v) = [[-[v x], v], [-v^T, 0]].
Mat4 omega_matrix(const Vec3& v);

// Body-to-inertial rotation of a unit quaternion.
Mat3 rotation_from_quat(const Quaternion& q);

// q1 * q2 = (s1 I + Omega(v1)) [v2; s2]; satisfies A(q1*q2) = A(q2) A(q1).
Quaternion quat_multiply(const Quaternion& q1, const Quaternion& q2);

// Error quaternion from a small vector part: [dqv; sqrt(1 - |dqv|^2)].
// Throws std::invalid_argument when |dqv| > 1 (divergent update).
Quaternion quat_from_error(const Vec3& dqv);

// Inverse of rotation_from_quat for proper rotation matrices
// (orthonormality checked against tol; returns canonicalized q).
Quaternion quat_from_rotation(const Mat3& A, double tol = 1e-6);

// Rotation angle in [0, pi]: 2*atan2(|v|, |s|).
double rotation_angle(const Quaternion& q);

}  // namespace dgf
