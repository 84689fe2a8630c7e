#pragma once

#include <Eigen/Dense>

namespace dgf {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat6x12 = Eigen::Matrix<double, 6, 12>;
using Mat3x12 = Eigen::Matrix<double, 3, 12>;
using Mat12x9 = Eigen::Matrix<double, 12, 9>;

// Error-state block offsets: [dq_v, dr, dv, db].
inline constexpr int kAtt = 0;
inline constexpr int kPos = 3;
inline constexpr int kVel = 6;
inline constexpr int kBias = 9;
inline constexpr int kErrDim = 12;

inline constexpr double kDefaultGravity = 9.81;

}  // namespace dgf
