#pragma once

#include <cstdint>
#include <vector>

#include "dgf/models.hpp"
#include "dgf/quat.hpp"
#include "dgf/types.hpp"

namespace dgf {

enum class TrajectoryKind { Static, Straight, Circle, Figure8, Scripted };

// One leg of a scripted trajectory: constant body rate and constant
// body-frame coordinate acceleration (not specific force) for `duration`.
struct ScriptedSegment {
  double duration = 0.0;
  Vec3 omega_body = Vec3::Zero();
  Vec3 accel_body = Vec3::Zero();
};

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::Figure8;
  double duration = 120.0;
  double imu_rate = 100.0;
  double speed = 2.0;     // m/s along track
  double radius = 25.0;   // m, circle radius / figure-eight half-width
  double ramp_time = 2.0; // s, exponential spin-up from rest (<= 0 disables)
  double yaw0 = 0.0;
  Vec3 start = Vec3::Zero();
  // Small roll/pitch oscillations layered on the planar kinds.
  double roll_amp = 0.05;
  double pitch_amp = 0.03;
  double roll_period = 7.0;
  double pitch_period = 11.0;
  std::vector<ScriptedSegment> script;
};

struct TruthSample {
  double t = 0.0;
  Quaternion q;
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();      // inertial coordinate acceleration
  Vec3 omega = Vec3::Zero();  // body angular rate
};

// GPS dropout window; antenna 1, 2, or 3 for both.
struct OutageWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
  int antenna = 3;
};

struct OutageScript {
  std::vector<OutageWindow> windows;
  bool blocks(double t, int antenna) const {
    for (const auto& w : windows) {
      if (t >= w.t_begin && t < w.t_end && (w.antenna == 3 || w.antenna == antenna)) return true;
    }
    return false;
  }
};

// Samples the trajectory on the IMU grid t_i = i / imu_rate. Analytic kinds
// are evaluated in closed form; Scripted integrates the rigid-body kinematics
// at 10x the IMU rate with the exact quaternion increment per substep.
std::vector<TruthSample> generate_truth(const TrajectorySpec& spec);

// Truth interpolated at t: linear in r, v, a, omega; normalized lerp in q.
// Samples within 1e-9 s are returned exactly.
TruthSample truth_at(const std::vector<TruthSample>& truth, double t);

// u_g = omega - bias_true + w_g, u_a = A(q)^T (a + g) + w_a, with per-sample
// noise sigma * sqrt(rate) so the continuous-time densities match `noise`.
std::vector<ImuSample> synthesize_imu(const std::vector<TruthSample>& truth,
                                      const NoiseSpec& noise, const Vec3& bias_true,
                                      const SensorGeometry& geom, double rate,
                                      std::uint64_t seed);

// p_i = r + A(q) e_i + L z with L L^T = r_true (PSD square root).
std::vector<GpsFix> synthesize_gps(const std::vector<TruthSample>& truth,
                                   const SensorGeometry& geom, const Mat6& r_true,
                                   double gps_rate, const OutageScript& outages,
                                   std::uint64_t seed);

}  // namespace dgf
