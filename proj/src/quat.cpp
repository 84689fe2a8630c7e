#include "dgf/quat.hpp"

#include <cmath>
#include <stdexcept>

namespace dgf {

namespace {

void check_unit(const Quaternion& q, const char* where) {
  if (std::abs(q.norm() - 1.0) > kUnitNormTol) {
    throw std::invalid_argument(std::string(where) + ": quaternion norm deviates from 1 beyond tolerance");
  }
}

}  // namespace

Quaternion::Quaternion(const Vec3& vec, double scalar) : v(vec), s(scalar) {
  const double n = std::sqrt(v.squaredNorm() + s * s);
  if (n < 1e-12) {
    throw std::invalid_argument("Quaternion: near-zero norm");
  }
  v /= n;
  s /= n;
}

double Quaternion::norm() const { return std::sqrt(v.squaredNorm() + s * s); }

Quaternion Quaternion::conjugate() const {
  Quaternion q;
  q.v = -v;
  q.s = s;
  return q;
}

Quaternion Quaternion::normalized() const { return Quaternion(v, s); }

Quaternion Quaternion::canonicalized() const {
  Quaternion q = *this;
  if (q.s < 0.0) {
    q.v = -q.v;
    q.s = -q.s;
  }
  return q;
}

Vec4 Quaternion::coeffs() const { return Vec4(v.x(), v.y(), v.z(), s); }

Mat3 cross_matrix(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Mat4 omega_matrix(const Vec3& v) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = -cross_matrix(v);
  m.topRightCorner<3, 1>() = v;
  m.bottomLeftCorner<1, 3>() = -v.transpose();
  return m;
}

Mat3 rotation_from_quat(const Quaternion& q) {
  check_unit(q, "rotation_from_quat");
  return (2.0 * q.s * q.s - 1.0) * Mat3::Identity() + 2.0 * q.s * cross_matrix(q.v) +
         2.0 * q.v * q.v.transpose();
}

Quaternion quat_multiply(const Quaternion& q1, const Quaternion& q2) {
  check_unit(q1, "quat_multiply");
  check_unit(q2, "quat_multiply");
  Quaternion out;
  out.v = q1.s * q2.v - q1.v.cross(q2.v) + q2.s * q1.v;
  out.s = q1.s * q2.s - q1.v.dot(q2.v);
  return out;
}

Quaternion quat_from_error(const Vec3& dqv) {
  const double n2 = dqv.squaredNorm();
  if (n2 > 1.0) {
    throw std::invalid_argument("quat_from_error: |dqv| > 1 (divergent attitude correction)");
  }
  Quaternion q;
  q.v = dqv;
  q.s = std::sqrt(1.0 - n2);
  return q;
}

Quaternion quat_from_rotation(const Mat3& A, double tol) {
  if ((A * A.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > tol ||
      std::abs(A.determinant() - 1.0) > tol) {
    throw std::invalid_argument("quat_from_rotation: input is not a proper rotation");
  }
  // Shepperd's method; the component formulas match the A(q) expansion above.
  Quaternion q;
  const double tr = A.trace();
  if (tr > 0.0) {
    double t = std::sqrt(1.0 + tr);
    q.s = 0.5 * t;
    t = 0.5 / t;
    q.v.x() = (A(2, 1) - A(1, 2)) * t;
    q.v.y() = (A(0, 2) - A(2, 0)) * t;
    q.v.z() = (A(1, 0) - A(0, 1)) * t;
  } else {
    int i = 0;
    if (A(1, 1) > A(0, 0)) i = 1;
    if (A(2, 2) > A(i, i)) i = 2;
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    double t = std::sqrt(1.0 + A(i, i) - A(j, j) - A(k, k));
    q.v(i) = 0.5 * t;
    t = 0.5 / t;
    q.s = (A(k, j) - A(j, k)) * t;
    q.v(j) = (A(j, i) + A(i, j)) * t;
    q.v(k) = (A(k, i) + A(i, k)) * t;
  }
  return q.normalized().canonicalized();
}

double rotation_angle(const Quaternion& q) {
  return 2.0 * std::atan2(q.v.norm(), std::abs(q.s));
}

}  // namespace dgf
