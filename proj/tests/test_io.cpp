#include "doctest.h"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgf/csv.hpp"
#include "dgf/config.hpp"
#include "dgf/rng.hpp"
#include "dgf/sim.hpp"

using namespace dgf;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dgf_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Message must carry "<path>:<line>:" so log errors are locatable.
void check_parse_error(const std::string& path, int line, auto parser) {
  try {
    parser(path);
    FAIL("expected parse error for ", path);
  } catch (const std::runtime_error& e) {
    const std::string want = path + ":" + std::to_string(line) + ":";
    CHECK_MESSAGE(std::string(e.what()).find(want) == 0, e.what());
  }
}

}  // namespace

TEST_CASE("imu log round trip is bit exact") {
  TempDir dir;
  CounterRng rng(61, 0);
  std::vector<ImuSample> samples;
  for (int i = 0; i < 50; ++i) {
    ImuSample u;
    u.t = i * 0.01;
    u.gyro = rng.gaussian3();
    u.accel = 9.81 * rng.gaussian3();
    samples.push_back(u);
  }
  const std::string path = dir.file("imu.csv");
  write_imu_log(path, samples);
  const auto back = parse_imu_log(path);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].t == samples[i].t);
    CHECK((back[i].gyro - samples[i].gyro).norm() == 0.0);
    CHECK((back[i].accel - samples[i].accel).norm() == 0.0);
  }
}

TEST_CASE("gps log round trip preserves validity flags") {
  TempDir dir;
  std::vector<GpsFix> fixes;
  for (int i = 0; i < 20; ++i) {
    GpsFix f;
    f.t = 0.2 * i;
    f.p1 = Vec3(i, -i, 0.5);
    f.p2 = Vec3(-i, i, -0.5);
    f.valid1 = i % 3 != 0;
    f.valid2 = i % 4 != 0;
    fixes.push_back(f);
  }
  const std::string path = dir.file("gps.csv");
  write_gps_log(path, fixes);
  const auto back = parse_gps_log(path);
  REQUIRE(back.size() == fixes.size());
  for (size_t i = 0; i < fixes.size(); ++i) {
    CHECK(back[i].valid1 == fixes[i].valid1);
    CHECK(back[i].valid2 == fixes[i].valid2);
    CHECK((back[i].p1 - fixes[i].p1).norm() == 0.0);
  }
}

TEST_CASE("truth log round trip preserves the full sample") {
  TempDir dir;
  TrajectorySpec spec;
  spec.duration = 1.0;
  const auto truth = generate_truth(spec);
  const std::string path = dir.file("truth.csv");
  write_truth_log(path, truth);
  const auto back = parse_truth_log(path);
  REQUIRE(back.size() == truth.size());
  for (size_t i = 0; i < truth.size(); i += 11) {
    // The parser re-normalizes the quaternion; everything else is bit-exact.
    CHECK((back[i].q.coeffs() - truth[i].q.coeffs()).norm() < 1e-15);
    CHECK((back[i].r - truth[i].r).norm() == 0.0);
    CHECK((back[i].v - truth[i].v).norm() == 0.0);
    CHECK((back[i].omega - truth[i].omega).norm() == 0.0);
    CHECK((back[i].a - truth[i].a).norm() == 0.0);
  }
}

TEST_CASE("log parse errors carry the file and line") {
  TempDir dir;
  const std::string imu = dir.file("bad_imu.csv");

  SUBCASE("wrong header") {
    write_text(imu, "time,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,0\n");
    check_parse_error(imu, 1, parse_imu_log);
  }
  SUBCASE("wrong field count") {
    write_text(imu, "t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0\n");
    check_parse_error(imu, 2, parse_imu_log);
  }
  SUBCASE("non-numeric field") {
    write_text(imu, "t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,zero\n");
    check_parse_error(imu, 2, parse_imu_log);
  }
  SUBCASE("trailing junk in a number") {
    write_text(imu, "t,gx,gy,gz,ax,ay,az\n0,1.5x,0,0,0,0,0\n");
    check_parse_error(imu, 2, parse_imu_log);
  }
  SUBCASE("non-monotonic timestamps") {
    write_text(imu, "t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,0\n0.2,0,0,0,0,0,0\n0.1,0,0,0,0,0,0\n");
    check_parse_error(imu, 4, parse_imu_log);
  }
  SUBCASE("gps validity flag outside 0/1") {
    const std::string gps = dir.file("bad_gps.csv");
    write_text(gps, "t,p1x,p1y,p1z,v1,p2x,p2y,p2z,v2\n0,0,0,0,2,0,0,0,1\n");
    check_parse_error(gps, 2, parse_gps_log);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(parse_imu_log(dir.file("absent.csv")), std::runtime_error);
  }
}

TEST_CASE("config parser covers the full key set") {
  const std::string text = R"(# filter
sigma_g = 0.004
sigma_a = 0.06
sigma_b = 2e-4
e1 = 0.4 0.1 0.0
e2 = -0.4 -0.1 0.0
gravity = 9.80665
window_w = 40
r_floor = 1e-5
adapt = false
imu_rate = 200
gps_rate = 10
r_init = 0.05
p0_att = 0.1
p0_pos = 0.2
p0_vel = 0.3
p0_bias = 0.02
theta_warn = 0.1

# scenario
seed = 9
trajectory = circle
duration = 30
speed = 3
radius = 12
ramp_time = 0.5
yaw0 = 0.2
start = 1 2 0
roll_amp = 0.02
pitch_amp = 0.01
roll_period = 5
pitch_period = 9
gps_sigma = 0.03
bias_true = 0.02 0 -0.01
outage = 10 12 both
outage = 20 21 1
)";
  const Config cfg = parse_config_text(text, "inline");
  CHECK(cfg.filter.noise.sigma_g == 0.004);
  CHECK(cfg.filter.noise.sigma_a == 0.06);
  CHECK(cfg.filter.noise.sigma_b == 2e-4);
  CHECK((cfg.filter.geom.e1 - Vec3(0.4, 0.1, 0.0)).norm() == 0.0);
  CHECK(cfg.filter.geom.gravity == 9.80665);
  CHECK(cfg.filter.window_w == 40);
  CHECK(cfg.filter.r_floor == 1e-5);
  CHECK_FALSE(cfg.filter.adapt_enabled);
  CHECK(cfg.filter.imu_rate == 200);
  CHECK(cfg.traj.imu_rate == 200);  // shared key applies to both
  CHECK(cfg.filter.gps_rate == 10);
  CHECK(cfg.filter.r_init_sigma == 0.05);
  CHECK(cfg.filter.p0_att == 0.1);
  CHECK(cfg.filter.p0_bias == 0.02);
  CHECK(cfg.filter.theta_warn == 0.1);
  CHECK(cfg.seed == 9);
  CHECK(cfg.traj.kind == TrajectoryKind::Circle);
  CHECK(cfg.traj.duration == 30);
  CHECK(cfg.traj.speed == 3);
  CHECK(cfg.traj.radius == 12);
  CHECK(cfg.traj.ramp_time == 0.5);
  CHECK(cfg.traj.yaw0 == 0.2);
  CHECK((cfg.traj.start - Vec3(1, 2, 0)).norm() == 0.0);
  CHECK(cfg.gps_sigma == 0.03);
  CHECK((cfg.bias_true - Vec3(0.02, 0.0, -0.01)).norm() == 0.0);
  REQUIRE(cfg.outages.windows.size() == 2);
  CHECK(cfg.outages.windows[0].antenna == 3);
  CHECK(cfg.outages.windows[1].antenna == 1);
  CHECK(cfg.outages.blocks(10.5, 2));
  CHECK_FALSE(cfg.outages.blocks(20.5, 2));
}

TEST_CASE("config parser parses scripted segments in order") {
  const std::string text =
      "trajectory = scripted\n"
      "segment = 2 0 0 0.1 0 0 0\n"
      "segment = 3 0.1 0 0 1 0 0\n";
  const Config cfg = parse_config_text(text, "inline");
  CHECK(cfg.traj.kind == TrajectoryKind::Scripted);
  REQUIRE(cfg.traj.script.size() == 2);
  CHECK(cfg.traj.script[0].duration == 2);
  CHECK(cfg.traj.script[0].omega_body.z() == 0.1);
  CHECK(cfg.traj.script[1].accel_body.x() == 1);
}

TEST_CASE("config parser rejects malformed input with line numbers") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_config_text(text, "inline");
      FAIL("expected config error for: ", text);
    } catch (const std::runtime_error& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  expect_error("sigma_g = 0.01\nbogus_key = 1\n", "inline:2");
  expect_error("e1 = 0.5 0.0\n", "inline:1");
  expect_error("window_w = -3\n", "inline:1");
  expect_error("window_w = 2.5\n", "inline:1");
  expect_error("adapt = maybe\n", "inline:1");
  expect_error("trajectory = zigzag\n", "inline:1");
  expect_error("outage = 5 3 both\n", "inline:1");  // reversed interval
  expect_error("sigma_g 0.01\n", "inline:1");       // missing '='
  CHECK_THROWS_AS(parse_config_file("/nonexistent/dgf.cfg"), std::runtime_error);
}

TEST_CASE("config file parsing matches inline text") {
  TempDir dir;
  const std::string path = dir.file("run.cfg");
  write_text(path, "seed = 17\ntrajectory = static\n");
  const Config cfg = parse_config_file(path);
  CHECK(cfg.seed == 17);
  CHECK(cfg.traj.kind == TrajectoryKind::Static);
}
