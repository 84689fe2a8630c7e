#pragma once

#include <deque>
#include <span>
#include <stdexcept>

#include "dgf/models.hpp"
#include "dgf/types.hpp"

namespace dgf {

struct FilterConfig {
  NoiseSpec noise{};
  SensorGeometry geom{};
  int window_w = 30;            // residual window length for S_hat
  double imu_rate = 100.0;
  double gps_rate = 5.0;
  double r_floor = 1e-6;        // eigenvalue floor for R_hat (m^2)
  bool adapt_enabled = true;
  double r_init_sigma = 0.02;   // seed R_hat = (r_init_sigma)^2 I
  int adapt_min_count = 6;      // residuals required before R_hat is refreshed
  double p0_att = 0.05;         // initial std devs per error-state block
  double p0_pos = 0.05;
  double p0_vel = 0.1;
  double p0_bias = 0.01;
  double theta_warn = 0.05;     // alignment-angle degradation threshold (rad)
  double cond_max = 1e12;       // innovation covariance condition limit
};

struct FilterState {
  StateEstimate x{};
  Mat12 P = Mat12::Zero();
  Mat6 R_hat = Mat6::Zero();
  Mat6 S_hat = Mat6::Zero();
  std::deque<Vec6> residual_window;
  long k = 0;  // dual residuals consumed by the adaptation
  double t = 0.0;
  bool initialized = false;
};

// Thrown when an update produces |dq_v| > 1.
struct FilterDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UpdateResult {
  enum class Outcome { Updated, SkippedIllConditioned, NoValidAntenna };
  Outcome outcome = Outcome::NoValidAntenna;
  Vec6 residual = Vec6::Zero();  // rows of invalid antennas left zero
  int rows = 0;                  // 6 dual, 3 single, 0 none
  double condition = 0.0;
};

// Windowed residual-covariance recursion and R_hat refresh:
//   k <= w:  S_k = ((k-1)/k) S_{k-1} + (1/k) rho rho^T
//   k >  w:  S_k = S_{k-1} + (1/w)(rho rho^T - rho_old rho_old^T)
// which equals the batch mean of the last min(k, w) residuals exactly.
// With adaptation enabled and k >= adapt_min_count,
//   R_hat = floor_psd(S_k - H P_prior H^T, r_floor).
// Returns the (possibly unchanged) R_hat.
Mat6 adapt_noise(FilterState& fs, const Vec6& rho, const Mat6x12& H, const Mat12& P_prior,
                 const FilterConfig& cfg);

class Ekf {
 public:
  explicit Ekf(FilterConfig cfg) : cfg_(std::move(cfg)) {}

  // Static alignment from one dual fix and one IMU sample:
  // M = [dp, g, dp x g], N = [de, u_a, de x u_a], A0 = nearest rotation to
  // M N^{-1} (SVD), r0 = (p1+p2)/2 - A0 (e1+e2)/2, v = b = 0.
  // Throws std::invalid_argument on invalid fixes/geometry and
  // std::runtime_error when dp and g are collinear within 0.05 rad.
  void initialize(const GpsFix& fix, const ImuSample& imu);

  // Advances the state by t_delta using RK4 at the IMU sample boundaries,
  // with the inputs reconstructed linearly between bracketing samples, then
  // propagates P once with the transition matrix and closed-form Q evaluated
  // at the time-averaged inputs.
  void propagate(std::span<const ImuSample> samples, double t_delta);

  // Measurement update with the antennas flagged valid in the fix.
  // Skips (without touching the state) when the innovation covariance
  // condition number exceeds cond_max; throws FilterDivergence on |dq_v| > 1.
  UpdateResult update(const GpsFix& fix);

  // Nonlinear residual rho = z - h(x_hat) over both antenna rows.
  Vec6 residual(const GpsFix& fix) const;

  // Time-weighted mean of the zero-order-hold inputs over [t0, t1];
  // the returned sample carries t = t0. Throws on an empty interval.
  static ImuSample average_inputs(std::span<const ImuSample> samples, double t0, double t1);

  // Truth-referenced error state [dq_v, dr, dv, db] and NEES e^T P^{-1} e.
  Vec12 error_state(const StateEstimate& truth) const;
  double nees(const StateEstimate& truth) const;

  const FilterState& state() const { return fs_; }
  FilterState& mutable_state() { return fs_; }
  const FilterConfig& config() const { return cfg_; }
  FilterConfig& mutable_config() { return cfg_; }

 private:
  FilterConfig cfg_;
  FilterState fs_;
};

}  // namespace dgf
