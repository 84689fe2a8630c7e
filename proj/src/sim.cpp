#include "dgf/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dgf/rng.hpp"

namespace dgf {
namespace {

constexpr std::uint64_t kImuStream = 1;
constexpr std::uint64_t kGpsStream = 2;

// Rotation increment for constant body rate w held for h seconds.
Quaternion exp_increment(const Vec3& w, double h) {
  const double th = w.norm() * h;
  Quaternion dq;
  if (th < 1e-12) {
    dq.v = 0.5 * h * w;
    dq.s = 1.0;
  } else {
    dq.v = std::sin(0.5 * th) / w.norm() * w;
    dq.s = std::cos(0.5 * th);
  }
  return dq.normalized();
}

Quaternion quat_from_euler_zyx(double roll, double pitch, double yaw) {
  const Quaternion qx{Vec3(std::sin(0.5 * roll), 0, 0), std::cos(0.5 * roll)};
  const Quaternion qy{Vec3(0, std::sin(0.5 * pitch), 0), std::cos(0.5 * pitch)};
  const Quaternion qz{Vec3(0, 0, std::sin(0.5 * yaw)), std::cos(0.5 * yaw)};
  return quat_multiply(quat_multiply(qx, qy), qz).normalized();
}

// ZYX Euler angle rates to body angular velocity.
Vec3 body_rates(double roll, double pitch, double droll, double dpitch, double dyaw) {
  Vec3 w;
  w.x() = droll - dyaw * std::sin(pitch);
  w.y() = dpitch * std::cos(roll) + dyaw * std::cos(pitch) * std::sin(roll);
  w.z() = -dpitch * std::sin(roll) + dyaw * std::cos(pitch) * std::cos(roll);
  return w;
}

struct PlanarState {
  Vec3 r, v, a;
  double yaw, dyaw;
};

// Arc-length ramp tau(t) = t - T (1 - exp(-t/T)): starts at rest, approaches
// unit rate with time constant T.
void ramp(double t, double T, double& tau, double& dtau, double& ddtau) {
  if (T <= 0.0) {
    tau = t;
    dtau = 1.0;
    ddtau = 0.0;
    return;
  }
  const double e = std::exp(-t / T);
  tau = t - T * (1.0 - e);
  dtau = 1.0 - e;
  ddtau = e / T;
}

PlanarState eval_planar(const TrajectorySpec& spec, double t) {
  PlanarState ps{};
  double tau, dtau, ddtau;
  ramp(t, spec.ramp_time, tau, dtau, ddtau);
  switch (spec.kind) {
    case TrajectoryKind::Static: {
      ps.r = spec.start;
      ps.v.setZero();
      ps.a.setZero();
      ps.yaw = spec.yaw0;
      ps.dyaw = 0.0;
      return ps;
    }
    case TrajectoryKind::Straight: {
      const Vec3 dir(std::cos(spec.yaw0), std::sin(spec.yaw0), 0.0);
      ps.r = spec.start + spec.speed * tau * dir;
      ps.v = spec.speed * dtau * dir;
      ps.a = spec.speed * ddtau * dir;
      ps.yaw = spec.yaw0;
      ps.dyaw = 0.0;
      return ps;
    }
    case TrajectoryKind::Circle: {
      const double wc = spec.speed / spec.radius;
      const double phi = wc * tau;
      const double dphi = wc * dtau;
      const double ddphi = wc * ddtau;
      const Vec3 rad(std::cos(phi), std::sin(phi), 0.0);
      const Vec3 tan(-std::sin(phi), std::cos(phi), 0.0);
      ps.r = spec.start + spec.radius * (rad - Vec3(1, 0, 0));
      ps.v = spec.radius * dphi * tan;
      ps.a = spec.radius * (ddphi * tan - dphi * dphi * rad);
      ps.yaw = spec.yaw0 + phi + std::numbers::pi / 2.0;
      ps.dyaw = dphi;
      return ps;
    }
    case TrajectoryKind::Figure8: {
      // Gerono lemniscate x = R sin th, y = (R/2) sin 2th; track speed is
      // spec.speed at the crossing, so th advances at speed / (R sqrt(2)).
      const double R = spec.radius;
      const double om = spec.speed / (R * std::numbers::sqrt2);
      const double th = om * tau;
      const double dth = om * dtau;
      const double ddth = om * ddtau;
      const double s1 = std::sin(th), c1 = std::cos(th);
      const double s2 = std::sin(2 * th), c2 = std::cos(2 * th);
      const Vec3 dpdth(R * c1, R * c2, 0.0);
      const Vec3 d2pdth2(-R * s1, -2.0 * R * s2, 0.0);
      ps.r = spec.start + Vec3(R * s1, 0.5 * R * s2, 0.0);
      ps.v = dpdth * dth;
      ps.a = d2pdth2 * dth * dth + dpdth * ddth;
      // Heading follows the tangent; c1 and c2 never vanish together.
      ps.yaw = spec.yaw0 + std::atan2(c2, c1);
      ps.dyaw = dth * (s1 * c2 - 2.0 * c1 * s2) / (c1 * c1 + c2 * c2);
      return ps;
    }
    default:
      throw std::logic_error("eval_planar: not a planar trajectory");
  }
}

TruthSample eval_analytic(const TrajectorySpec& spec, double t) {
  const PlanarState ps = eval_planar(spec, t);
  double roll = 0.0, pitch = 0.0, droll = 0.0, dpitch = 0.0;
  if (spec.kind != TrajectoryKind::Static) {
    const double wr = 2.0 * std::numbers::pi / spec.roll_period;
    const double wp = 2.0 * std::numbers::pi / spec.pitch_period;
    roll = spec.roll_amp * std::sin(wr * t);
    droll = spec.roll_amp * wr * std::cos(wr * t);
    pitch = spec.pitch_amp * std::sin(wp * t);
    dpitch = spec.pitch_amp * wp * std::cos(wp * t);
  }
  TruthSample ts;
  ts.t = t;
  ts.q = quat_from_euler_zyx(roll, pitch, ps.yaw);
  ts.r = ps.r;
  ts.v = ps.v;
  ts.a = ps.a;
  ts.omega = body_rates(roll, pitch, droll, dpitch, ps.dyaw);
  return ts;
}

// One substep of the scripted kinematics: exact attitude for constant w,
// RK4 on (r, v) with the attitude-dependent acceleration A(q(s)) f.
void scripted_step(Quaternion& q, Vec3& r, Vec3& v, const Vec3& w, const Vec3& f, double h) {
  const Quaternion qh2 = quat_multiply(exp_increment(w, 0.5 * h), q);
  const Quaternion qh = quat_multiply(exp_increment(w, h), q);
  const Vec3 a0 = rotation_from_quat(q) * f;
  const Vec3 a1 = rotation_from_quat(qh2) * f;
  const Vec3 a2 = rotation_from_quat(qh) * f;
  r += h * v + h * h / 6.0 * (a0 + 2.0 * a1);
  v += h / 6.0 * (a0 + 4.0 * a1 + a2);
  q = qh.normalized();
}

std::vector<TruthSample> generate_scripted(const TrajectorySpec& spec) {
  if (spec.script.empty()) throw std::invalid_argument("scripted trajectory without segments");
  std::vector<double> ends;
  double total = 0.0;
  for (const auto& seg : spec.script) {
    if (!(seg.duration > 0.0)) throw std::invalid_argument("scripted segment duration must be positive");
    total += seg.duration;
    ends.push_back(total);
  }
  const double duration = std::min(spec.duration, total);
  const long n = std::lround(duration * spec.imu_rate);
  const double dt = 1.0 / spec.imu_rate;
  const int nsub = 10;

  Quaternion q = quat_from_euler_zyx(0.0, 0.0, spec.yaw0);
  Vec3 r = spec.start;
  Vec3 v = Vec3::Zero();
  double t = 0.0;
  auto active = [&](double tq) {
    const auto it = std::upper_bound(ends.begin(), ends.end(), tq + 1e-12);
    const size_t idx = std::min(static_cast<size_t>(it - ends.begin()), spec.script.size() - 1);
    return spec.script[idx];
  };

  std::vector<TruthSample> out;
  out.reserve(static_cast<size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) {
    const double t_grid = static_cast<double>(i) / spec.imu_rate;
    // Advance to the grid point, splitting substeps at segment boundaries.
    while (t < t_grid - 1e-12) {
      const auto seg = active(t);
      const auto it = std::upper_bound(ends.begin(), ends.end(), t + 1e-12);
      const double seg_end = (it == ends.end()) ? t_grid : std::min(*it, t_grid);
      const double h = std::min(dt / nsub, seg_end - t);
      scripted_step(q, r, v, seg.omega_body, seg.accel_body, h);
      t += h;
    }
    const auto seg = active(t_grid);
    TruthSample ts;
    ts.t = t_grid;
    ts.q = q;
    ts.r = r;
    ts.v = v;
    ts.omega = seg.omega_body;
    ts.a = rotation_from_quat(q) * seg.accel_body;
    out.push_back(ts);
  }
  return out;
}

}  // namespace

std::vector<TruthSample> generate_truth(const TrajectorySpec& spec) {
  if (!(spec.imu_rate > 0.0)) throw std::invalid_argument("imu_rate must be positive");
  if (!(spec.duration > 0.0)) throw std::invalid_argument("duration must be positive");
  if (spec.kind == TrajectoryKind::Scripted) return generate_scripted(spec);
  if (spec.kind == TrajectoryKind::Circle || spec.kind == TrajectoryKind::Figure8) {
    if (!(spec.radius > 0.0)) throw std::invalid_argument("radius must be positive");
  }
  const long n = std::lround(spec.duration * spec.imu_rate);
  std::vector<TruthSample> out;
  out.reserve(static_cast<size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) {
    out.push_back(eval_analytic(spec, static_cast<double>(i) / spec.imu_rate));
  }
  return out;
}

TruthSample truth_at(const std::vector<TruthSample>& truth, double t) {
  if (truth.empty()) throw std::invalid_argument("truth_at: empty trajectory");
  if (t <= truth.front().t) return truth.front();
  if (t >= truth.back().t) return truth.back();
  const auto it = std::lower_bound(truth.begin(), truth.end(), t,
                                   [](const TruthSample& s, double tq) { return s.t < tq; });
  if (std::abs(it->t - t) <= 1e-9) return *it;
  const TruthSample& hi = *it;
  const TruthSample& lo = *(it - 1);
  const double al = (t - lo.t) / (hi.t - lo.t);
  TruthSample ts;
  ts.t = t;
  ts.r = (1 - al) * lo.r + al * hi.r;
  ts.v = (1 - al) * lo.v + al * hi.v;
  ts.a = (1 - al) * lo.a + al * hi.a;
  ts.omega = (1 - al) * lo.omega + al * hi.omega;
  Vec4 c0 = lo.q.coeffs();
  Vec4 c1 = hi.q.coeffs();
  if (c0.dot(c1) < 0.0) c1 = -c1;
  const Vec4 c = (1 - al) * c0 + al * c1;
  ts.q = Quaternion(c.head<3>(), c(3));  // normalizing constructor
  return ts;
}

std::vector<ImuSample> synthesize_imu(const std::vector<TruthSample>& truth,
                                      const NoiseSpec& noise, const Vec3& bias_true,
                                      const SensorGeometry& geom, double rate,
                                      std::uint64_t seed) {
  if (!(rate > 0.0)) throw std::invalid_argument("synthesize_imu: rate must be positive");
  CounterRng rng(seed, kImuStream);
  const double sg = noise.sigma_g * std::sqrt(rate);
  const double sa = noise.sigma_a * std::sqrt(rate);
  const Vec3 g = geom.gravity_vec();
  std::vector<ImuSample> out;
  out.reserve(truth.size());
  for (const auto& ts : truth) {
    ImuSample s;
    s.t = ts.t;
    s.gyro = ts.omega - bias_true + sg * rng.gaussian3();
    s.accel = rotation_from_quat(ts.q).transpose() * (ts.a + g) + sa * rng.gaussian3();
    out.push_back(s);
  }
  return out;
}

std::vector<GpsFix> synthesize_gps(const std::vector<TruthSample>& truth,
                                   const SensorGeometry& geom, const Mat6& r_true,
                                   double gps_rate, const OutageScript& outages,
                                   std::uint64_t seed) {
  if (truth.empty()) throw std::invalid_argument("synthesize_gps: empty trajectory");
  if (!(gps_rate > 0.0)) throw std::invalid_argument("synthesize_gps: rate must be positive");
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (r_true + r_true.transpose()));
  if (es.eigenvalues().minCoeff() < -1e-12) {
    throw std::invalid_argument("synthesize_gps: measurement covariance not PSD");
  }
  const Mat6 l = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                 es.eigenvectors().transpose();
  CounterRng rng(seed, kGpsStream);
  std::vector<GpsFix> out;
  const double t_end = truth.back().t;
  for (long j = 0;; ++j) {
    const double t = static_cast<double>(j) / gps_rate;
    if (t > t_end + 1e-9) break;
    const TruthSample ts = truth_at(truth, t);
    const Mat3 a = rotation_from_quat(ts.q);
    Vec6 z;
    z << rng.gaussian3(), rng.gaussian3();
    const Vec6 noise = l * z;
    GpsFix fix;
    fix.t = t;
    fix.p1 = ts.r + a * geom.e1 + noise.head<3>();
    fix.p2 = ts.r + a * geom.e2 + noise.tail<3>();
    fix.valid1 = !outages.blocks(t, 1);
    fix.valid2 = !outages.blocks(t, 2);
    out.push_back(fix);
  }
  return out;
}

}  // namespace dgf
