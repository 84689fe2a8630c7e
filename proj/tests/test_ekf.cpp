#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dgf/ekf.hpp"
#include "dgf/rng.hpp"
#include "oracles.hpp"

using namespace dgf;

namespace {

// Ground-truth static pose and the exact dual fix / IMU sample it produces.
struct StaticScene {
  StateEstimate x;
  GpsFix fix;
  ImuSample imu;
};

StaticScene make_scene(CounterRng& rng, const SensorGeometry& geom) {
  StaticScene s;
  s.x.q = test::random_quat(rng);
  s.x.r = 5.0 * rng.gaussian3();
  const Mat3 a = s.x.rotation();
  s.fix.p1 = s.x.r + a * geom.e1;
  s.fix.p2 = s.x.r + a * geom.e2;
  s.imu.accel = a.transpose() * geom.gravity_vec();
  return s;
}

Ekf make_initialized(CounterRng& rng, const SensorGeometry& geom) {
  Ekf ekf{FilterConfig{}};
  const StaticScene s = make_scene(rng, geom);
  ekf.initialize(s.fix, s.imu);
  return ekf;
}

double min_eig(const Mat6& m) {
  return Eigen::SelfAdjointEigenSolver<Mat6>(m).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("windowed covariance recursion equals the batch mean in both phases") {
  FilterConfig cfg;
  cfg.window_w = 5;
  cfg.adapt_enabled = false;  // isolate the S recursion
  FilterState fs;
  CounterRng rng(51, 0);
  const Mat6x12 h = Mat6x12::Random();
  const Mat12 p = Mat12::Zero();
  std::vector<Vec6> all;
  for (int k = 1; k <= 17; ++k) {
    Vec6 rho;
    for (int i = 0; i < 6; ++i) rho(i) = rng.gaussian();
    all.push_back(rho);
    adapt_noise(fs, rho, h, p, cfg);
    const Mat6 batch = test::batch_residual_mean(all, cfg.window_w);
    CHECK((fs.S_hat - batch).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(fs.k == k);
    CHECK(static_cast<int>(fs.residual_window.size()) <= cfg.window_w);
  }
}

TEST_CASE("noise refresh subtracts the projected prior and floors eigenvalues") {
  FilterConfig cfg;
  cfg.window_w = 30;
  cfg.adapt_min_count = 1;
  FilterState fs;
  CounterRng rng(52, 0);
  const StateEstimate x = test::random_state(rng);
  const Mat6x12 h = measurement_jacobian(x, cfg.geom);

  SUBCASE("large residuals dominate: R_hat = S_hat - H P H^T exactly") {
    const Mat12 p = 1e-6 * Mat12::Identity();
    Mat6 want = Mat6::Zero();
    for (int k = 1; k <= 40; ++k) {
      const Vec6 rho = 0.5 * Vec6::Ones() + 0.1 * Vec6::Random();
      const Mat6 r = adapt_noise(fs, rho, h, p, cfg);
      want = fs.S_hat - h * p * h.transpose();
      // Until the window fills out its rank, small eigenvalues get floored;
      // once S_hat dominates the floor the refresh must be the plain formula.
      if (k >= 12) CHECK((r - want).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((fs.R_hat - r).norm() == 0.0);
    }
    CHECK(min_eig(want) > cfg.r_floor);  // no clipping at the end of the run
  }

  SUBCASE("prior larger than the residual spread clips at the floor") {
    const Mat12 p = Mat12::Identity();  // H P H^T >> S_hat
    Mat6 r = Mat6::Zero();
    for (int k = 0; k < 10; ++k) r = adapt_noise(fs, 1e-3 * Vec6::Random(), h, p, cfg);
    CHECK(min_eig(r) >= cfg.r_floor - 1e-15);
    CHECK((r - r.transpose()).norm() < 1e-15);
    // Flooring only raises eigenvalues.
    const Mat6 raw = fs.S_hat - h * p * h.transpose();
    CHECK(min_eig(r - raw) > -1e-12);
  }
}

TEST_CASE("noise refresh waits for the warmup count and honors the disable switch") {
  FilterConfig cfg;
  const Mat6 seed = 4e-4 * Mat6::Identity();
  FilterState fs;
  fs.R_hat = seed;
  const Mat6x12 h = Mat6x12::Random();
  const Mat12 p = Mat12::Zero();

  for (int k = 1; k < cfg.adapt_min_count; ++k) {
    adapt_noise(fs, Vec6::Constant(0.3), h, p, cfg);
    CHECK((fs.R_hat - seed).norm() == 0.0);  // untouched below the count
  }
  adapt_noise(fs, Vec6::Constant(0.3), h, p, cfg);
  CHECK((fs.R_hat - seed).norm() > 0.0);

  FilterState frozen;
  frozen.R_hat = seed;
  FilterConfig off = cfg;
  off.adapt_enabled = false;
  for (int k = 0; k < 20; ++k) adapt_noise(frozen, Vec6::Constant(0.3), h, p, off);
  CHECK((frozen.R_hat - seed).norm() == 0.0);  // S keeps updating, R stays fixed
  CHECK(frozen.k == 20);
}

TEST_CASE("initialization recovers an exact static pose") {
  SensorGeometry geom;
  CounterRng rng(53, 0);
  for (int i = 0; i < 20; ++i) {
    const StaticScene s = make_scene(rng, geom);
    Ekf ekf{FilterConfig{}};
    ekf.initialize(s.fix, s.imu);
    const StateEstimate& est = ekf.state().x;
    const Quaternion dq = quat_multiply(s.x.q, est.q.conjugate());
    CHECK(rotation_angle(dq) < 1e-10);
    CHECK((est.r - s.x.r).norm() < 1e-10);
    CHECK(est.v.norm() == 0.0);
    CHECK(est.b.norm() == 0.0);
    // Returned attitude is a proper rotation to tight tolerance.
    const Mat3 a = est.rotation();
    CHECK((a * a.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("initialization seeds the covariances from the config") {
  SensorGeometry geom;
  CounterRng rng(54, 0);
  FilterConfig cfg;
  Ekf ekf{cfg};
  const StaticScene s = make_scene(rng, geom);
  ekf.initialize(s.fix, s.imu);
  const FilterState& fs = ekf.state();
  CHECK(fs.initialized);
  CHECK(fs.P(kAtt, kAtt) == doctest::Approx(cfg.p0_att * cfg.p0_att));
  CHECK(fs.P(kPos, kPos) == doctest::Approx(cfg.p0_pos * cfg.p0_pos));
  CHECK(fs.P(kVel, kVel) == doctest::Approx(cfg.p0_vel * cfg.p0_vel));
  CHECK(fs.P(kBias, kBias) == doctest::Approx(cfg.p0_bias * cfg.p0_bias));
  CHECK((fs.R_hat - cfg.r_init_sigma * cfg.r_init_sigma * Mat6::Identity()).norm() < 1e-15);
  CHECK(fs.k == 0);
}

TEST_CASE("initialization rejects degenerate inputs") {
  Ekf ekf{FilterConfig{}};
  GpsFix fix;
  ImuSample imu;
  imu.accel = Vec3(0.0, 0.0, 9.81);

  SUBCASE("invalid antenna flags") {
    fix.valid2 = false;
    CHECK_THROWS_AS(ekf.initialize(fix, imu), std::invalid_argument);
  }
  SUBCASE("baseline along gravity") {
    fix.p1 = Vec3(0.0, 0.0, 0.5);
    fix.p2 = Vec3(0.0, 0.0, -0.5);
    CHECK_THROWS_AS(ekf.initialize(fix, imu), std::runtime_error);
  }
  SUBCASE("zero measured baseline") {
    fix.p1 = Vec3(1.0, 2.0, 3.0);
    fix.p2 = fix.p1;
    CHECK_THROWS_AS(ekf.initialize(fix, imu), std::runtime_error);
  }
  CHECK_FALSE(ekf.state().initialized);
}

TEST_CASE("average_inputs is the hold-weighted mean") {
  std::vector<ImuSample> samples(3);
  samples[0].t = 0.0;
  samples[0].gyro = Vec3(1.0, 0.0, 0.0);
  samples[1].t = 0.1;
  samples[1].gyro = Vec3(0.0, 2.0, 0.0);
  samples[2].t = 0.2;
  samples[2].gyro = Vec3(0.0, 0.0, 4.0);
  // Holds over [0.05, 0.25): 0.05 s of #0, 0.1 s of #1, 0.05 s of #2.
  const ImuSample avg = Ekf::average_inputs(samples, 0.05, 0.25);
  CHECK(avg.t == 0.05);
  CHECK((avg.gyro - Vec3(0.25, 1.0, 1.0)).norm() < 1e-14);
  CHECK_THROWS_AS(Ekf::average_inputs(samples, 0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Ekf::average_inputs(std::span<const ImuSample>{}, 0.0, 0.1),
                  std::invalid_argument);
}

TEST_CASE("propagate advances time and inflates the covariance") {
  SensorGeometry geom;
  CounterRng rng(55, 0);
  Ekf ekf = make_initialized(rng, geom);
  const double tr0 = ekf.state().P.trace();

  std::vector<ImuSample> samples;
  for (int i = 0; i < 20; ++i) {
    ImuSample u;
    u.t = ekf.state().t + i * 0.01;
    u.gyro = Vec3(0.0, 0.0, 0.1);
    u.accel = ekf.state().x.rotation().transpose() * geom.gravity_vec();
    samples.push_back(u);
  }
  ekf.propagate(samples, 0.2);
  const FilterState& fs = ekf.state();
  CHECK(fs.t == doctest::Approx(0.2));
  CHECK(fs.P.trace() > tr0);
  CHECK((fs.P - fs.P.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(fs.x.q.norm() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(ekf.propagate(samples, -0.1), std::invalid_argument);
  Ekf fresh{FilterConfig{}};
  CHECK_THROWS_AS(fresh.propagate(samples, 0.1), std::logic_error);
}

TEST_CASE("update outcomes cover all antenna configurations") {
  SensorGeometry geom;
  CounterRng rng(56, 0);
  const StaticScene s = make_scene(rng, geom);
  Ekf ekf{FilterConfig{}};
  ekf.initialize(s.fix, s.imu);

  SUBCASE("dual update consumes both rows and feeds the adaptation") {
    GpsFix fix = s.fix;
    fix.p1 += Vec3(0.01, 0.0, 0.0);
    const UpdateResult res = ekf.update(fix);
    CHECK(res.outcome == UpdateResult::Outcome::Updated);
    CHECK(res.rows == 6);
    CHECK(ekf.state().k == 1);
    CHECK(res.residual.head<3>().norm() > 0.0);
  }
  SUBCASE("single-antenna update uses three rows and skips the adaptation") {
    GpsFix fix = s.fix;
    fix.valid1 = false;
    fix.p2 += Vec3(0.0, 0.01, 0.0);
    const Mat6 r_before = ekf.state().R_hat;
    const UpdateResult res = ekf.update(fix);
    CHECK(res.outcome == UpdateResult::Outcome::Updated);
    CHECK(res.rows == 3);
    CHECK(res.residual.head<3>().norm() == 0.0);  // invalid rows stay zero
    CHECK(res.residual.tail<3>().norm() > 0.0);
    CHECK(ekf.state().k == 0);
    CHECK((ekf.state().R_hat - r_before).norm() == 0.0);
  }
  SUBCASE("no valid antenna leaves the state untouched") {
    GpsFix fix = s.fix;
    fix.valid1 = fix.valid2 = false;
    const Mat12 p_before = ekf.state().P;
    const UpdateResult res = ekf.update(fix);
    CHECK(res.outcome == UpdateResult::Outcome::NoValidAntenna);
    CHECK(res.rows == 0);
    CHECK((ekf.state().P - p_before).norm() == 0.0);
  }
  SUBCASE("ill-conditioned innovation covariance skips the update") {
    ekf.mutable_state().P.setZero();
    Mat6 r = Mat6::Identity();
    r(1, 1) = 1e-14;
    ekf.mutable_state().R_hat = r;
    const StateEstimate x_before = ekf.state().x;
    const UpdateResult res = ekf.update(s.fix);
    CHECK(res.outcome == UpdateResult::Outcome::SkippedIllConditioned);
    CHECK(res.condition > ekf.config().cond_max);
    CHECK((ekf.state().x.r - x_before.r).norm() == 0.0);
  }
  SUBCASE("oversized attitude correction raises FilterDivergence") {
    ekf.mutable_state().P.block<3, 3>(kAtt, kAtt) = 1e4 * Mat3::Identity();
    GpsFix fix = s.fix;
    // Differential offset twisting the baseline far beyond the unit error ball.
    const Vec3 twist = 3.0 * s.x.rotation() * Vec3::UnitY().cross(geom.e1).normalized();
    fix.p1 += twist;
    fix.p2 -= twist;
    CHECK_THROWS_AS(ekf.update(fix), FilterDivergence);
  }
  Ekf fresh{FilterConfig{}};
  CHECK_THROWS_AS(fresh.update(s.fix), std::logic_error);
}

TEST_CASE("dual update tightens the covariance and reduces the residual") {
  SensorGeometry geom;
  CounterRng rng(57, 0);
  const StaticScene s = make_scene(rng, geom);
  Ekf ekf{FilterConfig{}};
  ekf.initialize(s.fix, s.imu);
  // Displace the estimate, then update with the exact fix.
  ekf.mutable_state().x.r += Vec3(0.03, -0.02, 0.01);
  const double rho0 = ekf.residual(s.fix).norm();
  const double tr0 = ekf.state().P.trace();
  ekf.update(s.fix);
  CHECK(ekf.residual(s.fix).norm() < rho0);
  CHECK(ekf.state().P.trace() < tr0);
}

TEST_CASE("error state and NEES against a reference pose") {
  SensorGeometry geom;
  CounterRng rng(58, 0);
  Ekf ekf = make_initialized(rng, geom);
  const StateEstimate& est = ekf.state().x;
  CHECK(ekf.error_state(est).norm() == 0.0);
  CHECK(ekf.nees(est) == doctest::Approx(0.0));

  Vec12 d;
  d.setZero();
  d.segment<3>(kAtt) = Vec3(0.01, -0.02, 0.005);
  d.segment<3>(kPos) = Vec3(0.1, 0.0, -0.3);
  const StateEstimate truth = test::inject_error(est, d);
  const Vec12 e = ekf.error_state(truth);
  CHECK((e - d).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ekf.nees(truth) > 0.0);
}
