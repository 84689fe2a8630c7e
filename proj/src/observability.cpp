#include "dgf/observability.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dgf/quat.hpp"

namespace dgf {

namespace {

Eigen::MatrixXd h_rows(const Mat3& A, const SensorGeometry& geom, GpsMode mode, int antenna) {
  if (mode == GpsMode::Dual) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(6, kErrDim);
    H.block<3, 3>(0, kAtt) = -2.0 * A * cross_matrix(geom.e1);
    H.block<3, 3>(0, kPos) = Mat3::Identity();
    H.block<3, 3>(3, kAtt) = -2.0 * A * cross_matrix(geom.e2);
    H.block<3, 3>(3, kPos) = Mat3::Identity();
    return H;
  }
  const Vec3& e = (antenna == 2) ? geom.e2 : geom.e1;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(3, kErrDim);
  H.block<3, 3>(0, kAtt) = -2.0 * A * cross_matrix(e);
  H.block<3, 3>(0, kPos) = Mat3::Identity();
  return H;
}

Mat12 f_mat(const Mat3& A, const Vec3& w, const Vec3& a) {
  Mat12 F = Mat12::Zero();
  F.block<3, 3>(kAtt, kAtt) = -cross_matrix(w);
  F.block<3, 3>(kAtt, kBias) = 0.5 * Mat3::Identity();
  F.block<3, 3>(kPos, kVel) = Mat3::Identity();
  F.block<3, 3>(kVel, kAtt) = -2.0 * A * cross_matrix(a);
  return F;
}

}  // namespace

Eigen::MatrixXd observability_matrix(const Mat3& A, const Vec3& w, const Vec3& a,
                                     const SensorGeometry& geom, GpsMode mode, int order,
                                     int antenna) {
  if (order < 0) {
    throw std::invalid_argument("observability_matrix: order must be >= 0");
  }
  const Eigen::MatrixXd H = h_rows(A, geom, mode, antenna);
  const Mat12 F = f_mat(A, w, a);
  const long rows = H.rows();
  Eigen::MatrixXd O(rows * (order + 1), kErrDim);
  Eigen::MatrixXd block = H;
  O.topRows(rows) = block;
  for (int k = 1; k <= order; ++k) {
    block = block * F;
    O.middleRows(rows * k, rows) = block;
  }
  return O;
}

int numeric_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) >= rel_tol * s(0)) ++rank;
  }
  return rank;
}

Mat3 pi_matrix(const Vec3& de, const Vec3& a) {
  return de * de.transpose() * cross_matrix(a) + cross_matrix(a);
}

double alignment_angle(const Vec3& de, const Vec3& a) {
  const double nd = de.norm();
  const double na = a.norm();
  if (nd < 1e-12 || na < 1e-12) return std::numbers::pi / 2.0;
  double c = std::abs(de.dot(a)) / (nd * na);
  if (c > 1.0) c = 1.0;
  return std::acos(c);
}

Vec12 single_gps_null_vector(const Mat3& A, const Vec3& w, const Vec3& a, const Vec3& e1) {
  Vec12 eta;
  eta.segment<3>(kAtt) = a;
  eta.segment<3>(kPos) = 2.0 * A * e1.cross(a);
  eta.segment<3>(kVel) = Vec3::Zero();
  eta.segment<3>(kBias) = 2.0 * w.cross(a);
  return eta;
}

MroCheck mro_reduced_rank_check(const Mat3& A, const Vec3& w, const Vec3& a,
                                const SensorGeometry& geom, double rel_tol) {
  const Mat3 At = A.transpose();
  const Vec3 de = geom.baseline();
  const Mat12 F = f_mat(A, w, a);
  const Eigen::MatrixXd H = h_rows(A, geom, GpsMode::Dual, 1);
  const Eigen::MatrixXd HF = H * F;
  const Eigen::MatrixXd HF2 = HF * F;
  const Eigen::MatrixXd HF3 = HF2 * F;

  const auto H1 = H.topRows<3>();
  const auto H2 = H.bottomRows<3>();
  const auto HF_1 = HF.topRows<3>();
  const auto HF_2 = HF.bottomRows<3>();
  const auto HF2_1 = HF2.topRows<3>();
  const auto HF2_2 = HF2.bottomRows<3>();
  const auto HF3_1 = HF3.topRows<3>();
  const auto HF3_2 = HF3.bottomRows<3>();

  const Vec3 Ae1 = A * geom.e1;
  const Vec3 Ae2 = A * geom.e2;

  // Printed row operations, in order: difference of the A^T-premultiplied H
  // blocks; 1/2 [A e_i]^T compressions of the HF^2 blocks; retained A^T rows
  // of H and HF; difference of the A^T-premultiplied HF blocks; [A e_i]^T
  // compressions of the HF^3 blocks.
  Eigen::MatrixXd T(16, kErrDim);
  T.middleRows(0, 3) = At * H1 - At * H2;
  T.row(3) = -0.5 * Ae1.transpose() * HF2_1;
  T.row(4) = 0.5 * Ae2.transpose() * HF2_2;
  T.middleRows(5, 3) = At * H1;
  T.middleRows(8, 3) = At * HF_1;
  T.middleRows(11, 3) = At * HF_1 - At * HF_2;
  T.row(14) = Ae1.transpose() * HF3_1;
  T.row(15) = -Ae2.transpose() * HF3_2;

  // de re-expansion of the summed scalar rows, then the final row sums.
  Eigen::MatrixXd o_prime(12, kErrDim);
  o_prime.middleRows(0, 3) = T.middleRows(0, 3) + de * (T.row(3) + T.row(4));
  o_prime.middleRows(3, 3) = T.middleRows(5, 3);
  o_prime.middleRows(6, 3) = T.middleRows(8, 3);
  o_prime.middleRows(9, 3) = T.middleRows(11, 3) + de * (T.row(14) + T.row(15));

  MroCheck out;
  const Eigen::MatrixXd O = observability_matrix(A, w, a, geom, GpsMode::Dual, 3);
  out.rank_obs = numeric_rank(O, rel_tol);
  out.rank_reduced = numeric_rank(T, rel_tol);
  out.rank_o_prime = numeric_rank(o_prime, rel_tol);
  out.equivalent = (out.rank_reduced == kErrDim) == (out.rank_obs == kErrDim);
  return out;
}

}  // namespace dgf
