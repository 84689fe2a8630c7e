#include "dgf/ekf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dgf/discretize.hpp"
#include "dgf/quat.hpp"

namespace dgf {
namespace {

// Eigenvalue floor; keeps the matrix symmetric PSD with min eigenvalue >= floor.
Mat6 floor_psd(const Mat6& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (m + m.transpose()));
  Vec6 ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  if ((u * v.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return u * d * v.transpose();
}

}  // namespace

Mat6 adapt_noise(FilterState& fs, const Vec6& rho, const Mat6x12& H, const Mat12& P_prior,
                 const FilterConfig& cfg) {
  const long w = cfg.window_w;
  fs.k += 1;
  Mat6 outer = rho * rho.transpose();
  if (static_cast<long>(fs.residual_window.size()) == w) {
    const Vec6 old = fs.residual_window.front();
    fs.residual_window.pop_front();
    fs.S_hat += (outer - old * old.transpose()) / static_cast<double>(w);
  } else {
    const double k = static_cast<double>(fs.k);
    fs.S_hat = ((k - 1.0) / k) * fs.S_hat + outer / k;
  }
  fs.residual_window.push_back(rho);
  if (cfg.adapt_enabled && fs.k >= cfg.adapt_min_count) {
    fs.R_hat = floor_psd(fs.S_hat - H * P_prior * H.transpose(), cfg.r_floor);
  }
  return fs.R_hat;
}

void Ekf::initialize(const GpsFix& fix, const ImuSample& imu) {
  if (!fix.valid1 || !fix.valid2) {
    throw std::invalid_argument("initialize requires a fix with both antennas valid");
  }
  const Vec3 dp = fix.p1 - fix.p2;
  const Vec3 de = cfg_.geom.e1 - cfg_.geom.e2;
  if (de.norm() < 1e-12) {
    throw std::invalid_argument("antenna geometry invalid: zero baseline");
  }
  if (dp.norm() < 1e-12) {
    throw std::runtime_error("initialization degenerate: measured baseline is zero");
  }
  const Vec3 g = cfg_.geom.gravity_vec();
  const double ang = std::atan2(dp.cross(g).norm(), dp.dot(g));
  if (std::min(ang, std::numbers::pi - ang) < 0.05) {
    throw std::runtime_error("initialization degenerate: baseline within 0.05 rad of gravity");
  }

  Mat3 m;
  m.col(0) = dp;
  m.col(1) = g;
  m.col(2) = dp.cross(g);
  Mat3 n;
  n.col(0) = de;
  n.col(1) = imu.accel;
  n.col(2) = de.cross(imu.accel);
  Eigen::FullPivLU<Mat3> lu(n);
  if (!lu.isInvertible()) {
    throw std::runtime_error("initialization degenerate: accel collinear with antenna baseline");
  }
  const Mat3 a0 = nearest_rotation(m * lu.inverse());

  fs_ = FilterState{};
  fs_.x.q = quat_from_rotation(a0);
  fs_.x.r = 0.5 * (fix.p1 + fix.p2) - 0.5 * (a0 * (cfg_.geom.e1 + cfg_.geom.e2));
  fs_.x.v.setZero();
  fs_.x.b.setZero();
  fs_.P.setZero();
  fs_.P.block<3, 3>(kAtt, kAtt) = cfg_.p0_att * cfg_.p0_att * Mat3::Identity();
  fs_.P.block<3, 3>(kPos, kPos) = cfg_.p0_pos * cfg_.p0_pos * Mat3::Identity();
  fs_.P.block<3, 3>(kVel, kVel) = cfg_.p0_vel * cfg_.p0_vel * Mat3::Identity();
  fs_.P.block<3, 3>(kBias, kBias) = cfg_.p0_bias * cfg_.p0_bias * Mat3::Identity();
  fs_.R_hat = cfg_.r_init_sigma * cfg_.r_init_sigma * Mat6::Identity();
  fs_.t = fix.t;
  fs_.initialized = true;
}

ImuSample Ekf::average_inputs(std::span<const ImuSample> samples, double t0, double t1) {
  if (samples.empty()) throw std::invalid_argument("average_inputs: no samples");
  if (!(t1 > t0)) throw std::invalid_argument("average_inputs: empty interval");
  ImuSample out;
  out.t = t0;
  out.gyro.setZero();
  out.accel.setZero();
  double total = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double lo = (i == 0) ? -std::numeric_limits<double>::infinity() : samples[i].t;
    const double hi =
        (i + 1 < samples.size()) ? samples[i + 1].t : std::numeric_limits<double>::infinity();
    const double w = std::min(hi, t1) - std::max(lo, t0);
    if (w <= 0.0) continue;
    out.gyro += w * samples[i].gyro;
    out.accel += w * samples[i].accel;
    total += w;
  }
  out.gyro /= total;
  out.accel /= total;
  return out;
}

void Ekf::propagate(std::span<const ImuSample> samples, double t_delta) {
  if (!fs_.initialized) throw std::logic_error("propagate before initialize");
  if (!(t_delta > 0.0) || !std::isfinite(t_delta)) {
    throw std::invalid_argument("propagate: t_delta must be positive");
  }
  if (samples.empty()) throw std::invalid_argument("propagate: no samples");
  for (size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) {
      throw std::invalid_argument("propagate: non-monotonic sample timestamps");
    }
  }
  const double t0 = fs_.t;
  const double t1 = t0 + t_delta;

  // Covariance transition is evaluated at the pre-integration attitude and
  // the time-averaged inputs over the interval.
  const ImuSample avg = average_inputs(samples, t0, t1);
  const Mat3 a_hat = fs_.x.rotation();
  const Vec3 w_hat = avg.gyro + fs_.x.b;
  const TransitionMatrix phi = state_transition(a_hat, w_hat, avg.accel, t_delta);
  const ProcessNoiseMatrix q = process_noise_closed(a_hat, w_hat, avg.accel, t_delta, cfg_.noise);

  for (size_t i = 0; i < samples.size(); ++i) {
    const double lo = (i == 0) ? -std::numeric_limits<double>::infinity() : samples[i].t;
    const double hi =
        (i + 1 < samples.size()) ? samples[i + 1].t : std::numeric_limits<double>::infinity();
    const double a = std::max(lo, t0);
    const double b = std::min(hi, t1);
    if (b - a <= 0.0) continue;
    if (i + 1 < samples.size()) {
      // Reconstruct the inputs linearly between the bracketing samples so the
      // integration order is not capped by the sampling.
      auto lerp = [&](double t) {
        const double al = (t - samples[i].t) / (samples[i + 1].t - samples[i].t);
        ImuSample u = samples[i];
        u.t = t;
        u.gyro += al * (samples[i + 1].gyro - samples[i].gyro);
        u.accel += al * (samples[i + 1].accel - samples[i].accel);
        return u;
      };
      fs_.x = integrate_rk4(fs_.x, lerp(a), lerp(b), b - a, cfg_.geom);
    } else {
      // No sample beyond the interval end: hold the last one.
      fs_.x = integrate_rk4(fs_.x, samples[i], b - a, cfg_.geom);
    }
  }

  fs_.P = phi.m * fs_.P * phi.m.transpose() + q.m;
  fs_.P = 0.5 * (fs_.P + fs_.P.transpose());
  fs_.t = t1;
}

UpdateResult Ekf::update(const GpsFix& fix) {
  if (!fs_.initialized) throw std::logic_error("update before initialize");
  UpdateResult res;
  const bool v1 = fix.valid1;
  const bool v2 = fix.valid2;
  if (!v1 && !v2) {
    res.outcome = UpdateResult::Outcome::NoValidAntenna;
    return res;
  }

  const Mat6x12 h_full = measurement_jacobian(fs_.x, cfg_.geom);
  const Vec6 z_full = (Vec6() << fix.p1, fix.p2).finished();
  const Vec6 rho_full = z_full - predict_measurement(fs_.x, cfg_.geom);

  Eigen::MatrixXd h;
  Eigen::VectorXd rho;
  Eigen::MatrixXd r_used;
  if (v1 && v2) {
    h = h_full;
    rho = rho_full;
    r_used = fs_.R_hat;
    res.residual = rho_full;
    res.rows = 6;
  } else {
    const int off = v1 ? 0 : 3;
    h = h_full.middleRows(off, 3);
    rho = rho_full.segment(off, 3);
    r_used = fs_.R_hat.block(off, off, 3, 3);
    res.residual.segment(off, 3) = rho;
    res.rows = 3;
  }

  const Eigen::MatrixXd s =
      h * fs_.P * h.transpose() + r_used;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  const double ev_min = es.eigenvalues().minCoeff();
  const double ev_max = es.eigenvalues().maxCoeff();
  res.condition = (ev_min > 0.0) ? ev_max / ev_min : std::numeric_limits<double>::infinity();
  if (!(res.condition <= cfg_.cond_max)) {
    res.outcome = UpdateResult::Outcome::SkippedIllConditioned;
    return res;
  }

  const Mat12 p_prior = fs_.P;
  const Eigen::MatrixXd k_gain = s.ldlt().solve(h * fs_.P).transpose();
  const Vec12 dx = k_gain * rho;
  if (dx.segment<3>(kAtt).norm() > 1.0) {
    throw FilterDivergence("filter divergence: attitude correction |dq_v| > 1");
  }
  fs_.x.q = quat_multiply(quat_from_error(dx.segment<3>(kAtt)), fs_.x.q).normalized();
  fs_.x.r += dx.segment<3>(kPos);
  fs_.x.v += dx.segment<3>(kVel);
  fs_.x.b += dx.segment<3>(kBias);
  fs_.P = (Mat12::Identity() - k_gain * h) * fs_.P;
  fs_.P = 0.5 * (fs_.P + fs_.P.transpose());

  // Only complete dual residuals feed the adaptation.
  if (v1 && v2) adapt_noise(fs_, rho_full, h_full, p_prior, cfg_);

  res.outcome = UpdateResult::Outcome::Updated;
  return res;
}

Vec6 Ekf::residual(const GpsFix& fix) const {
  const Vec6 z = (Vec6() << fix.p1, fix.p2).finished();
  return z - predict_measurement(fs_.x, cfg_.geom);
}

Vec12 Ekf::error_state(const StateEstimate& truth) const {
  Quaternion dq = quat_multiply(truth.q, fs_.x.q.conjugate()).canonicalized();
  Vec12 e;
  e.segment<3>(kAtt) = dq.v;
  e.segment<3>(kPos) = truth.r - fs_.x.r;
  e.segment<3>(kVel) = truth.v - fs_.x.v;
  e.segment<3>(kBias) = truth.b - fs_.x.b;
  return e;
}

double Ekf::nees(const StateEstimate& truth) const {
  const Vec12 e = error_state(truth);
  return e.dot(fs_.P.ldlt().solve(e));
}

}  // namespace dgf
