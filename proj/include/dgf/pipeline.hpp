#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgf/config.hpp"
#include "dgf/ekf.hpp"
#include "dgf/observability.hpp"
#include "dgf/sim.hpp"

namespace dgf {

// Two-sided 95% interval of the chi-square distribution with 12 degrees of
// freedom, used for NEES consistency counting.
inline constexpr double kNees12Lo = 4.4037885069817015;
inline constexpr double kNees12Hi = 23.33666415864534;

// Seconds excluded from summary statistics while the filter converges.
inline constexpr double kWarmupSeconds = 5.0;

struct FuseOptions {
  int single_antenna = 0;  // 0 = both antennas, 1 or 2 = mask the other one
  bool adapt_override_set = false;
  bool adapt_override = true;
};

// No usable dual-antenna fix within the first kWarmupSeconds.
struct InitializationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  double t = 0.0;
  StateEstimate x{};
  Vec6 residual = Vec6::Zero();
  int res_rows = 0;
  int valid_mask = 0;  // bit 0: antenna 1, bit 1: antenna 2
  bool updated = false;
  bool skipped = false;  // ill-conditioned innovation covariance
  double trace_p = 0.0;
  Vec6 rhat_diag = Vec6::Zero();
  Vec12 p_diag = Vec12::Zero();
  double theta = 0.0;
  bool theta_warning = false;
  int obs_rank = 0;
  bool obs_full = false;
  double obs_sigma_min = 0.0;
  // Truth-referenced diagnostics; NaN when no truth is supplied.
  double att_err = 0.0, pos_err = 0.0, vel_err = 0.0, bias_err = 0.0, nees = 0.0;
};

struct RunSummary {
  int epochs = 0;
  int updates = 0;
  int skipped = 0;
  int coasted = 0;   // epochs with no valid antenna
  int warnings = 0;  // epochs with theta below the warning threshold
  double t_init = 0.0;
  double t_final = 0.0;
  bool has_truth = false;
  double rmse_att = 0.0;
  double rmse_pos = 0.0;
  double rmse_vel = 0.0;
  double bias_final_err = 0.0;
  double mean_nees = 0.0;
  int nees_count = 0;
  int nees_in_bounds = 0;
  double nees_fraction = 0.0;
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  RunSummary summary;
};

// Runs the full filter over parsed logs. Initializes from the first usable
// dual-antenna fix within kWarmupSeconds of the first epoch (error
// otherwise), propagates through IMU samples between fixes, updates with
// whatever antennas are valid, and coasts through outages.
// Truth may be null; when present, per-epoch errors and NEES are filled and
// summary statistics are computed over the post-warmup epochs.
RunReport run_fuse(const std::vector<ImuSample>& imu, const std::vector<GpsFix>& gps,
                   const Config& cfg, const std::vector<TruthSample>* truth,
                   const FuseOptions& options = {});

// Observability sweep along a run: one report per GPS epoch evaluated at the
// predicted state and the interval-averaged inputs.
std::vector<ObservabilityReport> run_observability(const std::vector<ImuSample>& imu,
                                                   const std::vector<GpsFix>& gps,
                                                   const Config& cfg,
                                                   const FuseOptions& options = {});

struct McRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunSummary summary;
};

struct McReport {
  std::vector<McRun> runs;
  int failed = 0;
  double mean_rmse_att = 0.0;
  double max_rmse_att = 0.0;
  double mean_rmse_pos = 0.0;
  double max_rmse_pos = 0.0;
  double mean_rmse_vel = 0.0;
  double mean_bias_final_err = 0.0;
  double pooled_nees_fraction = 0.0;  // in-bounds epochs over all runs
};

// Simulates and fuses `runs` independent noise realizations of the scenario
// in cfg (seeds cfg.seed, cfg.seed + 1, ...) sharing one truth trajectory.
// Runs execute in parallel; results are aggregated in seed order, so the
// report is deterministic.
McReport run_monte_carlo(const Config& cfg, int runs, const FuseOptions& options = {},
                         bool parallel = true);

}  // namespace dgf
