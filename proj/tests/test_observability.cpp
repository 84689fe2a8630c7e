#include "doctest.h"

#include <cmath>
#include <numbers>

#include "dgf/observability.hpp"
#include "dgf/rng.hpp"
#include "oracles.hpp"

using namespace dgf;

namespace {

struct Frozen {
  Mat3 a;
  Vec3 w;
  Vec3 accel;
};

Frozen random_point(CounterRng& rng) {
  const StateEstimate x = test::random_state(rng);
  const ImuSample u = test::random_imu(rng);
  return {x.rotation(), u.gyro + x.b, u.accel};
}

double kernel_residual(const Eigen::MatrixXd& o, const Vec12& eta) {
  return (o * eta).norm() / (o.norm() * eta.norm());
}

}  // namespace

TEST_CASE("dual-antenna stack has full rank at generic operating points") {
  CounterRng rng(41, 0);
  SensorGeometry geom;
  for (int i = 0; i < 50; ++i) {
    const Frozen p = random_point(rng);
    const Eigen::MatrixXd o = observability_matrix(p.a, p.w, p.accel, geom, GpsMode::Dual);
    CHECK(o.rows() == 24);
    CHECK(numeric_rank(o) == 12);
  }
}

TEST_CASE("static dual keeps full rank, static single drops to 10") {
  SensorGeometry geom;
  const Mat3 a = Mat3::Identity();
  const Vec3 w = Vec3::Zero();
  const Vec3 accel(0.0, 0.0, kDefaultGravity);  // level rest: specific force is vertical
  CHECK(numeric_rank(observability_matrix(a, w, accel, geom, GpsMode::Dual)) == 12);
  CHECK(numeric_rank(observability_matrix(a, w, accel, geom, GpsMode::Single, 3, 1)) == 10);
}

TEST_CASE("single-antenna stack never reaches full rank") {
  CounterRng rng(42, 0);
  SensorGeometry geom;
  for (int i = 0; i < 50; ++i) {
    const Frozen p = random_point(rng);
    for (int antenna : {1, 2}) {
      const Eigen::MatrixXd o =
          observability_matrix(p.a, p.w, p.accel, geom, GpsMode::Single, 3, antenna);
      CHECK(o.rows() == 12);
      CHECK(numeric_rank(o) <= 11);
      const Vec3 lever = antenna == 1 ? geom.e1 : geom.e2;
      const Vec12 eta = single_gps_null_vector(p.a, p.w, p.accel, lever);
      CHECK(eta.norm() > 0.0);
      CHECK(kernel_residual(o, eta) < 1e-12);
    }
  }
}

TEST_CASE("the analytic null direction survives higher stack orders") {
  CounterRng rng(43, 0);
  SensorGeometry geom;
  const Frozen p = random_point(rng);
  const Vec12 eta = single_gps_null_vector(p.a, p.w, p.accel, geom.e1);
  for (int order : {3, 5, 11}) {
    const Eigen::MatrixXd o =
        observability_matrix(p.a, p.w, p.accel, geom, GpsMode::Single, order, 1);
    CHECK(kernel_residual(o, eta) < 1e-12);
    CHECK(numeric_rank(o) == 11);  // deeper stacks recover nothing further
  }
}

TEST_CASE("baseline aligned with specific force degrades the dual stack") {
  CounterRng rng(44, 0);
  SensorGeometry geom;
  const StateEstimate x = test::random_state(rng);
  const Mat3 a = x.rotation();
  const Vec3 w = 0.3 * rng.gaussian3();
  // Specific force along the rotated baseline direction.
  const Vec3 de = geom.baseline();
  const Vec3 accel = 4.0 * de.normalized();
  const Eigen::MatrixXd o = observability_matrix(a, w, accel, geom, GpsMode::Dual);
  CHECK(numeric_rank(o) == 11);
  // The lost direction is the single-antenna null vector of either lever arm.
  const Vec12 eta = single_gps_null_vector(a, w, accel, geom.e1);
  CHECK(kernel_residual(o, eta) < 1e-12);
  // Any misalignment restores the rank.
  const Vec3 tilted = (accel + Vec3(0.0, 0.4, 0.0)).eval();
  CHECK(numeric_rank(observability_matrix(a, w, tilted, geom, GpsMode::Dual)) == 12);
}

TEST_CASE("pi matrix annihilates the specific force and has rank 2") {
  CounterRng rng(45, 0);
  for (int i = 0; i < 30; ++i) {
    const Vec3 de = rng.gaussian3().normalized();
    const Vec3 a = 5.0 * rng.gaussian3();
    const Mat3 pi = pi_matrix(de, a);
    CHECK((pi * a).norm() < 1e-12 * a.norm());
    CHECK(numeric_rank(pi) == 2);
  }
}

TEST_CASE("alignment angle conventions") {
  const Vec3 de(1.0, 0.0, 0.0);
  CHECK(alignment_angle(de, Vec3(0.0, 0.0, 9.81)) ==
        doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(alignment_angle(de, Vec3(3.0, 0.0, 0.0)) == doctest::Approx(0.0));
  CHECK(alignment_angle(de, Vec3(-3.0, 0.0, 0.0)) == doctest::Approx(0.0));  // sign-blind
  CHECK(alignment_angle(de, Vec3::Zero()) == doctest::Approx(std::numbers::pi / 2));
  const double th = alignment_angle(de, Vec3(1.0, 1.0, 0.0));
  CHECK(th == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));
}

TEST_CASE("row-operation reduction is rank-equivalent to the full stack") {
  SensorGeometry geom;
  geom.e1 = Vec3(0.5, 0.0, 0.0);
  geom.e2 = Vec3(-0.3, 0.4, 0.0);  // non-collinear lever arms
  CounterRng rng(46, 0);
  for (int i = 0; i < 20; ++i) {
    const Frozen p = random_point(rng);
    const MroCheck m = mro_reduced_rank_check(p.a, p.w, p.accel, geom);
    CHECK(m.rank_obs == 12);
    CHECK(m.rank_reduced == 12);
    CHECK(m.rank_o_prime <= 10);  // the compressed square form always loses rank
    CHECK(m.equivalent);
  }
  // Degenerate point: specific force along the baseline.
  const Frozen p = random_point(rng);
  const Vec3 accel = 6.0 * geom.baseline().normalized();
  const MroCheck m = mro_reduced_rank_check(p.a, p.w, accel, geom);
  CHECK(m.rank_obs == 11);
  CHECK(m.rank_reduced < 12);
  CHECK(m.equivalent);
}

TEST_CASE("numeric rank edge cases") {
  CHECK(numeric_rank(Eigen::MatrixXd::Zero(6, 12)) == 0);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-3;
  m(2, 2) = 1e-12;  // below the relative tolerance
  CHECK(numeric_rank(m) == 2);
}
