#pragma once

#include <string>
#include <vector>

#include "dgf/models.hpp"
#include "dgf/sim.hpp"

namespace dgf {

// Plain CSV logs with fixed headers; numbers are written with %.17g so a
// write/read round trip is bit-exact. Parse errors report file and line.
//
//   IMU:   t,gx,gy,gz,ax,ay,az
//   GPS:   t,p1x,p1y,p1z,v1,p2x,p2y,p2z,v2
//   truth: t,qx,qy,qz,qw,rx,ry,rz,vx,vy,vz,wx,wy,wz,ax,ay,az

std::vector<ImuSample> parse_imu_log(const std::string& path);
std::vector<GpsFix> parse_gps_log(const std::string& path);
std::vector<TruthSample> parse_truth_log(const std::string& path);

void write_imu_log(const std::string& path, const std::vector<ImuSample>& samples);
void write_gps_log(const std::string& path, const std::vector<GpsFix>& fixes);
void write_truth_log(const std::string& path, const std::vector<TruthSample>& truth);

}  // namespace dgf
