#include "dgf/models.hpp"

#include <stdexcept>

namespace dgf {

namespace {

const Vec3& antenna_arm(const SensorGeometry& geom, int antenna) {
  if (antenna == 1) return geom.e1;
  if (antenna == 2) return geom.e2;
  throw std::invalid_argument("antenna index must be 1 or 2");
}

Vec4 quat_vec(const Quaternion& q) { return q.coeffs(); }

}  // namespace

Mat9 NoiseSpec::imu_covariance() const {
  Mat9 m = Mat9::Zero();
  m.block<3, 3>(0, 0) = sigma_g * sigma_g * Mat3::Identity();
  m.block<3, 3>(3, 3) = sigma_a * sigma_a * Mat3::Identity();
  m.block<3, 3>(6, 6) = sigma_b * sigma_b * Mat3::Identity();
  return m;
}

Vec6 predict_measurement(const StateEstimate& x, const SensorGeometry& geom) {
  const Mat3 A = x.rotation();
  Vec6 h;
  h.head<3>() = x.r + A * geom.e1;
  h.tail<3>() = x.r + A * geom.e2;
  return h;
}

Vec3 predict_measurement_single(const StateEstimate& x, const SensorGeometry& geom, int antenna) {
  return x.r + x.rotation() * antenna_arm(geom, antenna);
}

Mat6x12 measurement_jacobian(const StateEstimate& x, const SensorGeometry& geom) {
  const Mat3 A = x.rotation();
  Mat6x12 H = Mat6x12::Zero();
  H.block<3, 3>(0, kAtt) = -2.0 * A * cross_matrix(geom.e1);
  H.block<3, 3>(0, kPos) = Mat3::Identity();
  H.block<3, 3>(3, kAtt) = -2.0 * A * cross_matrix(geom.e2);
  H.block<3, 3>(3, kPos) = Mat3::Identity();
  return H;
}

Mat3x12 measurement_jacobian_single(const StateEstimate& x, const SensorGeometry& geom,
                                    int antenna) {
  const Mat3 A = x.rotation();
  Mat3x12 H = Mat3x12::Zero();
  H.block<3, 3>(0, kAtt) = -2.0 * A * cross_matrix(antenna_arm(geom, antenna));
  H.block<3, 3>(0, kPos) = Mat3::Identity();
  return H;
}

StateDerivative continuous_dynamics(const StateEstimate& x, const ImuSample& u,
                                    const SensorGeometry& geom) {
  StateDerivative d;
  const Vec3 w = u.gyro + x.b;
  d.q_dot = 0.5 * omega_matrix(w) * quat_vec(x.q);
  d.r_dot = x.v;
  d.v_dot = x.rotation() * u.accel - geom.gravity_vec();
  d.b_dot = Vec3::Zero();
  return d;
}

Mat12 linearized_F(const StateEstimate& x, const ImuSample& u) {
  const Vec3 w = u.gyro + x.b;
  Mat12 F = Mat12::Zero();
  F.block<3, 3>(kAtt, kAtt) = -cross_matrix(w);
  F.block<3, 3>(kAtt, kBias) = 0.5 * Mat3::Identity();
  F.block<3, 3>(kPos, kVel) = Mat3::Identity();
  F.block<3, 3>(kVel, kAtt) = -2.0 * x.rotation() * cross_matrix(u.accel);
  return F;
}

Mat12x9 noise_jacobian_G(const StateEstimate& x) {
  Mat12x9 G = Mat12x9::Zero();
  G.block<3, 3>(kAtt, 0) = 0.5 * Mat3::Identity();
  G.block<3, 3>(kVel, 3) = x.rotation();
  G.block<3, 3>(kBias, 6) = Mat3::Identity();
  return G;
}

StateEstimate integrate_rk4(const StateEstimate& x, const ImuSample& u_lo, const ImuSample& u_hi,
                            double dt, const SensorGeometry& geom) {
  if (!(dt >= 0.0)) {
    throw std::invalid_argument("integrate_rk4: dt must be non-negative");
  }
  auto advance = [&](const StateEstimate& base, const StateDerivative& d, double h) {
    StateEstimate out = base;
    Vec4 qc = quat_vec(base.q) + h * d.q_dot;
    out.q.v = qc.head<3>();
    out.q.s = qc(3);
    out.q = out.q.normalized();  // keep intermediate stages on the unit sphere
    out.r = base.r + h * d.r_dot;
    out.v = base.v + h * d.v_dot;
    out.b = base.b + h * d.b_dot;
    return out;
  };
  ImuSample u_mid = u_lo;
  u_mid.gyro = 0.5 * (u_lo.gyro + u_hi.gyro);
  u_mid.accel = 0.5 * (u_lo.accel + u_hi.accel);
  const StateDerivative k1 = continuous_dynamics(x, u_lo, geom);
  const StateDerivative k2 = continuous_dynamics(advance(x, k1, 0.5 * dt), u_mid, geom);
  const StateDerivative k3 = continuous_dynamics(advance(x, k2, 0.5 * dt), u_mid, geom);
  const StateDerivative k4 = continuous_dynamics(advance(x, k3, dt), u_hi, geom);

  StateEstimate out = x;
  Vec4 qc = quat_vec(x.q) +
            (dt / 6.0) * (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot);
  out.q.v = qc.head<3>();
  out.q.s = qc(3);
  out.q = out.q.normalized();
  out.r = x.r + (dt / 6.0) * (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot);
  out.v = x.v + (dt / 6.0) * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot);
  out.b = x.b + (dt / 6.0) * (k1.b_dot + 2.0 * k2.b_dot + 2.0 * k3.b_dot + k4.b_dot);
  return out;
}

StateEstimate integrate_rk4(const StateEstimate& x, const ImuSample& u, double dt,
                            const SensorGeometry& geom) {
  return integrate_rk4(x, u, u, dt, geom);
}

}  // namespace dgf
