#include "dgf/discretize.hpp"

#include <cmath>
#include <stdexcept>

#include "dgf/quat.hpp"

namespace dgf {

namespace {

// Coefficients of I, [w x], [w x]^2 for the nested integrals of exp(-[w x] s).
// The closed-form trig coefficients cancel catastrophically for small n*tau,
// so below x = 1e-2 a fourth-order series (relative error O(x^4)) is used.
struct LambdaSet {
  Mat3 L, L1, L2, L3;
};

LambdaSet lambda_integrals(const Vec3& w, double tau) {
  const Mat3 I = Mat3::Identity();
  const Mat3 W = cross_matrix(w);
  const Mat3 W2 = W * W;
  const double n = w.norm();
  const double x = n * tau;
  LambdaSet out;
  if (x < 1e-2) {
    const double x2 = x * x;
    const double t2 = tau * tau, t3 = t2 * tau, t4 = t3 * tau, t5 = t4 * tau;
    out.L = I - tau * (1.0 - x2 / 6.0) * W + (t2 / 2.0) * (1.0 - x2 / 12.0) * W2;
    out.L1 = tau * I - (t2 / 2.0) * (1.0 - x2 / 12.0) * W + (t3 / 6.0) * (1.0 - x2 / 20.0) * W2;
    out.L2 = (t2 / 2.0) * I - (t3 / 6.0) * (1.0 - x2 / 20.0) * W +
             (t4 / 24.0) * (1.0 - x2 / 30.0) * W2;
    out.L3 = (t3 / 6.0) * I - (t4 / 24.0) * (1.0 - x2 / 30.0) * W +
             (t5 / 120.0) * (1.0 - x2 / 42.0) * W2;
    return out;
  }
  const double s = std::sin(x), c = std::cos(x);
  const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n;
  out.L = I - (s / n) * W + ((1.0 - c) / n2) * W2;
  out.L1 = tau * I + ((c - 1.0) / n2) * W + ((x - s) / n3) * W2;
  out.L2 = (tau * tau / 2.0) * I + ((s - x) / n3) * W + ((x * x / 2.0 - 1.0 + c) / n4) * W2;
  out.L3 = (tau * tau * tau / 6.0) * I + ((1.0 - c) / n4 - tau * tau / (2.0 * n2)) * W +
           ((x * x * x / 6.0 - x + s) / n5) * W2;
  return out;
}

void check_tau(double tau, const char* where) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument(std::string(where) + ": tau must be positive and finite");
  }
}

}  // namespace

Mat3 lambda_matrix(const Vec3& w, double tau) {
  check_tau(tau, "lambda_matrix");
  const Mat3 I = Mat3::Identity();
  const Mat3 W = cross_matrix(w);
  const double n = w.norm();
  const double x = n * tau;
  if (x < 1e-4) {
    return I - tau * W + (tau * tau / 2.0) * (W * W);
  }
  return I - (std::sin(x) / n) * W + ((1.0 - std::cos(x)) / (n * n)) * (W * W);
}

Mat3 lambda_prime(const Vec3& w, double tau) {
  check_tau(tau, "lambda_prime");
  const Mat3 I = Mat3::Identity();
  const Mat3 W = cross_matrix(w);
  const double n = w.norm();
  const double x = n * tau;
  if (x < 1e-4) {
    return tau * I - (tau * tau / 2.0) * W + (tau * tau * tau / 6.0) * (W * W);
  }
  return tau * I + ((std::cos(x) - 1.0) / (n * n)) * W +
         ((x - std::sin(x)) / (n * n * n)) * (W * W);
}

TransitionMatrix state_transition(const Mat3& A, const Vec3& w, const Vec3& a, double tau) {
  check_tau(tau, "state_transition");
  const LambdaSet lam = lambda_integrals(w, tau);
  const Mat3 AAx = A * cross_matrix(a);
  TransitionMatrix phi;
  phi.tau = tau;
  Mat12& m = phi.m;
  m = Mat12::Zero();
  m.block<3, 3>(kAtt, kAtt) = lam.L;
  m.block<3, 3>(kAtt, kBias) = 0.5 * lam.L1;
  m.block<3, 3>(kPos, kAtt) = -2.0 * AAx * lam.L2;
  m.block<3, 3>(kPos, kPos) = Mat3::Identity();
  m.block<3, 3>(kPos, kVel) = tau * Mat3::Identity();
  m.block<3, 3>(kPos, kBias) = -AAx * lam.L3;
  m.block<3, 3>(kVel, kAtt) = -2.0 * AAx * lam.L1;
  m.block<3, 3>(kVel, kVel) = Mat3::Identity();
  m.block<3, 3>(kVel, kBias) = -AAx * lam.L2;
  m.block<3, 3>(kBias, kBias) = Mat3::Identity();
  return phi;
}

ProcessNoiseMatrix process_noise_closed(const Mat3& A, const Vec3& w, const Vec3& a, double tau,
                                        const NoiseSpec& noise) {
  check_tau(tau, "process_noise_closed");
  const double sg2 = noise.sigma_g * noise.sigma_g;
  const double sa2 = noise.sigma_a * noise.sigma_a;
  const double sb2 = noise.sigma_b * noise.sigma_b;
  const double t2 = tau * tau, t3 = t2 * tau;
  const Mat3 I = Mat3::Identity();
  const Mat3 W = cross_matrix(w);
  const Mat3 Ax = cross_matrix(a);
  const Mat3 AAx = A * Ax;

  const Mat3 Q11 = (sb2 * t3 / 12.0 + sg2 * tau / 6.0) * I - (sg2 * t3 / 12.0) * (W * W);
  const Mat3 Q31 = (sg2 * tau / 4.0) * I + (sg2 * t2 / 8.0) * (W - 2.0 * AAx) -
                   (sg2 * t3 / 6.0) * (AAx * W);
  const Mat3 Q33 = (sa2 + sg2 / 4.0) * tau * I - (sg2 * t3 / 3.0) * (AAx * A.transpose()) +
                   (sg2 * t2 / 4.0) * (Ax * A.transpose() - AAx);
  const Mat3 Q41 = (sb2 * t2 / 4.0) * I;
  const Mat3 Q44 = sb2 * tau * I;

  ProcessNoiseMatrix q;
  Mat12& m = q.m;
  m.block<3, 3>(kAtt, kAtt) = Q11;
  m.block<3, 3>(kVel, kAtt) = Q31;
  m.block<3, 3>(kAtt, kVel) = Q31.transpose();
  m.block<3, 3>(kVel, kVel) = Q33;
  m.block<3, 3>(kBias, kAtt) = Q41;
  m.block<3, 3>(kAtt, kBias) = Q41.transpose();
  m.block<3, 3>(kBias, kBias) = Q44;
  m = 0.5 * (m + m.transpose()).eval();
  return q;
}

ProcessNoiseMatrix process_noise_quadrature(const Mat3& A, const Vec3& w, const Vec3& a,
                                            double tau, const NoiseSpec& noise, int steps) {
  check_tau(tau, "process_noise_quadrature");
  if (steps < 16) {
    throw std::invalid_argument("process_noise_quadrature: steps must be >= 16");
  }
  if (steps % 2 != 0) ++steps;

  Mat12x9 G = Mat12x9::Zero();
  G.block<3, 3>(kAtt, 0) = 0.5 * Mat3::Identity();
  G.block<3, 3>(kVel, 3) = A;
  G.block<3, 3>(kBias, 6) = Mat3::Identity();
  const Mat12 M = G * noise.imu_covariance() * G.transpose();

  const double h = tau / steps;
  Mat12 total = Mat12::Zero();
  for (int k = 0; k <= steps; ++k) {
    const double s = k * h;
    Mat12 P;
    if (k == 0) {
      P = Mat12::Identity();
    } else {
      P = state_transition(A, w, a, s).m;
    }
    const Mat12 f = P * M * P.transpose();
    const double wgt = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    total += wgt * f;
  }
  ProcessNoiseMatrix q;
  q.m = (h / 3.0) * total;
  q.m = 0.5 * (q.m + q.m.transpose()).eval();
  return q;
}

}  // namespace dgf
