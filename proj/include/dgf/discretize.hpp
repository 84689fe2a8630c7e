#pragma once

#include "dgf/models.hpp"
#include "dgf/types.hpp"

namespace dgf {

// Rodrigues evaluation of Lambda(tau) = exp(-[w x] tau):
//   I - (sin(n tau)/n) [w x] + ((1 - cos(n tau))/n^2) [w x]^2,  n = |w|.
// Below |w| tau = 1e-4 the three-term Taylor limit
//   I - tau [w x] + (tau^2/2) [w x]^2 is used.
Mat3 lambda_matrix(const Vec3& w, double tau);

// Lambda'(tau) = integral of Lambda over [0, tau]:
//   tau I + ((cos(n tau) - 1)/n^2) [w x] + ((n tau - sin(n tau))/n^3) [w x]^2,
// Taylor limit tau I - (tau^2/2) [w x] + (tau^3/6) [w x]^2 below |w| tau = 1e-4.
Mat3 lambda_prime(const Vec3& w, double tau);

// Discrete error-state transition matrix over tau with frozen inputs
// (A, w, a constant): the exact matrix exponential of F in closed form,
//   [ L           0  0      L'/2       ]
//   [ -2 A[a x]L'' I  tau I  -A[a x]L''' ]
//   [ -2 A[a x]L'  0  I      -A[a x]L''  ]
//   [ 0           0  0      I          ]
// where L = Lambda, L' = int L, L'' = int L', L''' = int L''.
struct TransitionMatrix {
  Mat12 m = Mat12::Identity();
  double tau = 0.0;
};
TransitionMatrix state_transition(const Mat3& A, const Vec3& w, const Vec3& a, double tau);

// Closed-form first-order process noise over tau (symmetrized on return):
//   Q11 = (sb^2 tau^3/12 + sg^2 tau/6) I - (sg^2 tau^3/12) [w x]^2
//   Q31 = (sg^2 tau/4) I + (sg^2 tau^2/8)([w x] - 2 A[a x]) - (sg^2 tau^3/6) A[a x][w x]
//   Q33 = (sa^2 + sg^2/4) tau I - (sg^2 tau^3/3) A[a x]A^T + (sg^2 tau^2/4)([a x]A^T - A[a x])
//   Q41 = (sb^2 tau^2/4) I,  Q44 = sb^2 tau I,  position row/col zero.
struct ProcessNoiseMatrix {
  Mat12 m = Mat12::Zero();
};
ProcessNoiseMatrix process_noise_closed(const Mat3& A, const Vec3& w, const Vec3& a, double tau,
                                        const NoiseSpec& noise);

// Reference discretization: Simpson quadrature of
//   int_0^tau Phi(s) G Sigma_imu G^T Phi(s)^T ds
// with the exact Phi above. steps must be >= 16 (rounded up to even).
ProcessNoiseMatrix process_noise_quadrature(const Mat3& A, const Vec3& w, const Vec3& a,
                                            double tau, const NoiseSpec& noise, int steps = 64);

}  // namespace dgf
