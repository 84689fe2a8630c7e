#pragma once

#include <cstdint>
#include <string>

#include "dgf/ekf.hpp"
#include "dgf/sim.hpp"

namespace dgf {

// Flat key = value configuration covering the filter and the simulator.
// '#' starts a comment; vector values are whitespace-separated; unknown keys
// and wrong arities are errors (reported with the line number).
struct Config {
  FilterConfig filter;
  TrajectorySpec traj;
  std::uint64_t seed = 1;
  double gps_sigma = 0.02;       // per-axis std dev of the simulated receiver
  Vec3 bias_true = Vec3(0.01, 0.01, 0.01);
  OutageScript outages;

  Mat6 gps_covariance() const { return gps_sigma * gps_sigma * Mat6::Identity(); }
};

Config parse_config_text(const std::string& text, const std::string& name);
Config parse_config_file(const std::string& path);

}  // namespace dgf
