#pragma once

#include <cstdint>

#include "dgf/quat.hpp"
#include "dgf/types.hpp"

namespace dgf {

// One IMU reading: body rates (rad/s) and specific force (m/s^2).
struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

// One dual-antenna GPS fix; per-antenna validity flags.
struct GpsFix {
  double t = 0.0;
  Vec3 p1 = Vec3::Zero();
  Vec3 p2 = Vec3::Zero();
  bool valid1 = true;
  bool valid2 = true;
};

// Antenna lever arms in the body frame and local gravity magnitude (z-up).
struct SensorGeometry {
  Vec3 e1{0.5, 0.0, 0.0};
  Vec3 e2{-0.5, 0.0, 0.0};
  double gravity = kDefaultGravity;

  Vec3 gravity_vec() const { return Vec3(0.0, 0.0, gravity); }
  Vec3 baseline() const { return e1 - e2; }
};

// Continuous-time noise densities: gyro (rad/s/sqrt(Hz)),
// accel (m/s^2/sqrt(Hz)), gyro-bias random walk (rad/s^2/sqrt(Hz)).
struct NoiseSpec {
  double sigma_g = 0.005;
  double sigma_a = 0.05;
  double sigma_b = 1e-4;

  Mat9 imu_covariance() const;  // diag(sg^2 I, sa^2 I, sb^2 I)
};

// Full state: attitude quaternion, position, velocity, gyro bias.
struct StateEstimate {
  Quaternion q{};
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 b = Vec3::Zero();

  Mat3 rotation() const { return rotation_from_quat(q); }
};

// Predicted antenna positions: h(x) = [r + A(q) e1; r + A(q) e2].
Vec6 predict_measurement(const StateEstimate& x, const SensorGeometry& geom);
Vec3 predict_measurement_single(const StateEstimate& x, const SensorGeometry& geom, int antenna);

// Measurement Jacobian wrt the error state [dq_v, dr, dv, db]:
// row block i = [-2 A [e_i x], I, 0, 0].
Mat6x12 measurement_jacobian(const StateEstimate& x, const SensorGeometry& geom);
Mat3x12 measurement_jacobian_single(const StateEstimate& x, const SensorGeometry& geom, int antenna);

// Time derivative of the full state under one IMU sample (zero noise):
// q_dot = 1/2 Omega(u_g + b) q, r_dot = v, v_dot = A(q) u_a - g, b_dot = 0.
struct StateDerivative {
  Vec4 q_dot = Vec4::Zero();
  Vec3 r_dot = Vec3::Zero();
  Vec3 v_dot = Vec3::Zero();
  Vec3 b_dot = Vec3::Zero();
};
StateDerivative continuous_dynamics(const StateEstimate& x, const ImuSample& u,
                                    const SensorGeometry& geom);

// Error-state dynamics Jacobian F (12x12) at the current estimate, with
// w_hat = u_g + b_hat and a_hat = u_a:
//   [ -[w x]      0  0  I/2 ]
//   [  0          0  I  0   ]
//   [ -2 A [a x]  0  0  0   ]
//   [  0          0  0  0   ]
Mat12 linearized_F(const StateEstimate& x, const ImuSample& u);

// Noise input Jacobian G (12x9) for w = [w_g, w_a, w_b].
Mat12x9 noise_jacobian_G(const StateEstimate& x);

// One RK4 step of continuous_dynamics over [t, t + dt] with the inputs varying
// linearly from u_lo to u_hi across the step (stage inputs at t, t + dt/2,
// t + dt); renormalizes the quaternion afterwards.  Holding a sampled rate
// constant over its interval would cap the integration at first order in the
// sample spacing; the linear reconstruction keeps smooth signals at the
// integrator's own accuracy.
StateEstimate integrate_rk4(const StateEstimate& x, const ImuSample& u_lo, const ImuSample& u_hi,
                            double dt, const SensorGeometry& geom);

// Constant-input convenience overload (u_lo == u_hi).
StateEstimate integrate_rk4(const StateEstimate& x, const ImuSample& u, double dt,
                            const SensorGeometry& geom);

}  // namespace dgf
