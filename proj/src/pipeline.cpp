#include "dgf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>

#include "dgf/quat.hpp"

namespace dgf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

GpsFix masked(const GpsFix& fix, int single_antenna) {
  GpsFix out = fix;
  if (single_antenna == 1) out.valid2 = false;
  if (single_antenna == 2) out.valid1 = false;
  return out;
}

// Latest sample at or before t, falling back to the first sample.
const ImuSample& imu_at(const std::vector<ImuSample>& imu, double t) {
  auto it = std::upper_bound(imu.begin(), imu.end(), t,
                             [](double tq, const ImuSample& s) { return tq < s.t; });
  if (it != imu.begin()) --it;
  return *it;
}

// Samples whose zero-order hold overlaps (t0, t1]: from the last sample at or
// before t0 through the last sample at or before t1.
std::span<const ImuSample> hold_span(const std::vector<ImuSample>& imu, double t0, double t1) {
  auto lo = std::upper_bound(imu.begin(), imu.end(), t0,
                             [](double tq, const ImuSample& s) { return tq < s.t; });
  if (lo != imu.begin()) --lo;
  auto hi = std::upper_bound(imu.begin(), imu.end(), t1,
                             [](double tq, const ImuSample& s) { return tq < s.t; });
  if (hi == imu.begin()) hi = imu.begin() + 1;
  return {&*lo, static_cast<size_t>(hi - lo)};
}

}  // namespace

RunReport run_fuse(const std::vector<ImuSample>& imu, const std::vector<GpsFix>& gps,
                   const Config& cfg, const std::vector<TruthSample>* truth,
                   const FuseOptions& options) {
  if (imu.empty()) throw std::runtime_error("fuse: IMU log is empty");
  if (gps.empty()) throw std::runtime_error("fuse: GPS log is empty");

  FilterConfig fc = cfg.filter;
  if (options.adapt_override_set) fc.adapt_enabled = options.adapt_override;
  Ekf ekf(fc);

  // Static alignment from the first usable dual fix; antenna masking applies
  // only after the filter is running.
  size_t init_idx = gps.size();
  std::string init_error = "no dual-antenna fix available";
  for (size_t i = 0; i < gps.size(); ++i) {
    if (gps[i].t - gps.front().t > kWarmupSeconds + 1e-9) break;
    if (!gps[i].valid1 || !gps[i].valid2) continue;
    try {
      ekf.initialize(gps[i], imu_at(imu, gps[i].t));
      init_idx = i;
      break;
    } catch (const std::runtime_error& e) {
      init_error = e.what();
    }
  }
  if (init_idx == gps.size()) {
    throw InitializationFailure("fuse: initialization failed within the first " +
                                std::to_string(kWarmupSeconds) + " s: " + init_error);
  }

  RunReport report;
  report.summary.t_init = gps[init_idx].t;
  report.summary.has_truth = truth != nullptr;
  const SensorGeometry& geom = fc.geom;

  for (size_t i = init_idx + 1; i < gps.size(); ++i) {
    const GpsFix fix = masked(gps[i], options.single_antenna);
    const double t_prev = ekf.state().t;
    if (fix.t <= t_prev + 1e-12) continue;

    const auto span = hold_span(imu, t_prev, fix.t);
    ekf.propagate(span, fix.t - t_prev);

    EpochRecord rec;
    rec.t = fix.t;
    rec.valid_mask = (fix.valid1 ? 1 : 0) | (fix.valid2 ? 2 : 0);

    // Observability and alignment at the predicted state.
    const ImuSample avg = Ekf::average_inputs(span, t_prev, fix.t);
    const Mat3 a_hat = ekf.state().x.rotation();
    const Vec3 w_hat = avg.gyro + ekf.state().x.b;
    rec.theta = alignment_angle(geom.baseline(), avg.accel);
    rec.theta_warning = rec.theta < fc.theta_warn;
    const GpsMode mode = (rec.valid_mask == 1 || rec.valid_mask == 2) ? GpsMode::Single : GpsMode::Dual;
    const int antenna = (rec.valid_mask == 2) ? 2 : 1;
    const Eigen::MatrixXd obs = observability_matrix(a_hat, w_hat, avg.accel, geom, mode, 3, antenna);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(obs);
    rec.obs_sigma_min = svd.singularValues().minCoeff();
    rec.obs_rank = numeric_rank(obs);
    rec.obs_full = rec.obs_rank == kErrDim;

    UpdateResult ur;
    try {
      ur = ekf.update(fix);
    } catch (const FilterDivergence& e) {
      throw FilterDivergence(std::string(e.what()) + " at t=" + std::to_string(fix.t));
    }
    rec.updated = ur.outcome == UpdateResult::Outcome::Updated;
    rec.skipped = ur.outcome == UpdateResult::Outcome::SkippedIllConditioned;
    rec.residual = ur.residual;
    rec.res_rows = ur.rows;

    const FilterState& fs = ekf.state();
    rec.x = fs.x;
    rec.trace_p = fs.P.trace();
    rec.rhat_diag = fs.R_hat.diagonal();
    rec.p_diag = fs.P.diagonal();

    if (truth) {
      const TruthSample ts = truth_at(*truth, fix.t);
      StateEstimate xt;
      xt.q = ts.q;
      xt.r = ts.r;
      xt.v = ts.v;
      xt.b = cfg.bias_true;
      rec.att_err = rotation_angle(quat_multiply(ts.q, fs.x.q.conjugate()));
      rec.pos_err = (ts.r - fs.x.r).norm();
      rec.vel_err = (ts.v - fs.x.v).norm();
      rec.bias_err = (cfg.bias_true - fs.x.b).norm();
      rec.nees = ekf.nees(xt);
    } else {
      rec.att_err = rec.pos_err = rec.vel_err = rec.bias_err = rec.nees = kNaN;
    }

    report.summary.epochs += 1;
    report.summary.updates += rec.updated ? 1 : 0;
    report.summary.skipped += rec.skipped ? 1 : 0;
    report.summary.coasted += (rec.valid_mask == 0) ? 1 : 0;
    report.summary.warnings += rec.theta_warning ? 1 : 0;
    report.epochs.push_back(std::move(rec));
  }

  RunSummary& s = report.summary;
  s.t_final = ekf.state().t;
  if (truth) {
    double sa = 0.0, sp = 0.0, sv = 0.0, sn = 0.0;
    int n = 0;
    for (const auto& rec : report.epochs) {
      if (rec.t - s.t_init < kWarmupSeconds) continue;
      sa += rec.att_err * rec.att_err;
      sp += rec.pos_err * rec.pos_err;
      sv += rec.vel_err * rec.vel_err;
      sn += rec.nees;
      n += 1;
      s.nees_in_bounds += (rec.nees >= kNees12Lo && rec.nees <= kNees12Hi) ? 1 : 0;
    }
    s.nees_count = n;
    if (n > 0) {
      s.rmse_att = std::sqrt(sa / n);
      s.rmse_pos = std::sqrt(sp / n);
      s.rmse_vel = std::sqrt(sv / n);
      s.mean_nees = sn / n;
      s.nees_fraction = static_cast<double>(s.nees_in_bounds) / n;
    } else {
      s.rmse_att = s.rmse_pos = s.rmse_vel = s.mean_nees = s.nees_fraction = kNaN;
    }
    s.bias_final_err = report.epochs.empty() ? kNaN : report.epochs.back().bias_err;
  } else {
    s.rmse_att = s.rmse_pos = s.rmse_vel = kNaN;
    s.mean_nees = s.nees_fraction = s.bias_final_err = kNaN;
  }
  return report;
}

std::vector<ObservabilityReport> run_observability(const std::vector<ImuSample>& imu,
                                                   const std::vector<GpsFix>& gps,
                                                   const Config& cfg,
                                                   const FuseOptions& options) {
  const RunReport report = run_fuse(imu, gps, cfg, nullptr, options);
  std::vector<ObservabilityReport> out;
  out.reserve(report.epochs.size());
  for (const auto& rec : report.epochs) {
    ObservabilityReport r;
    r.t = rec.t;
    r.rank = rec.obs_rank;
    r.full_rank = rec.obs_full;
    r.theta = rec.theta;
    r.sigma_min = rec.obs_sigma_min;
    r.mode = (rec.valid_mask == 1 || rec.valid_mask == 2) ? GpsMode::Single : GpsMode::Dual;
    out.push_back(r);
  }
  return out;
}

McReport run_monte_carlo(const Config& cfg, int runs, const FuseOptions& options, bool parallel) {
  if (runs < 1) throw std::invalid_argument("run_monte_carlo: runs must be >= 1");
  const std::vector<TruthSample> truth = generate_truth(cfg.traj);

  auto one = [&](std::uint64_t seed) {
    McRun r;
    r.seed = seed;
    try {
      const auto imu = synthesize_imu(truth, cfg.filter.noise, cfg.bias_true, cfg.filter.geom,
                                      cfg.traj.imu_rate, seed);
      const auto gps = synthesize_gps(truth, cfg.filter.geom, cfg.gps_covariance(),
                                      cfg.filter.gps_rate, cfg.outages, seed);
      r.summary = run_fuse(imu, gps, cfg, &truth, options).summary;
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  };

  McReport mc;
  mc.runs.resize(static_cast<size_t>(runs));
  if (parallel) {
    std::vector<std::future<McRun>> futures;
    futures.reserve(static_cast<size_t>(runs));
    for (int i = 0; i < runs; ++i) {
      futures.push_back(std::async(std::launch::async, one, cfg.seed + static_cast<std::uint64_t>(i)));
    }
    for (int i = 0; i < runs; ++i) mc.runs[static_cast<size_t>(i)] = futures[static_cast<size_t>(i)].get();
  } else {
    for (int i = 0; i < runs; ++i) {
      mc.runs[static_cast<size_t>(i)] = one(cfg.seed + static_cast<std::uint64_t>(i));
    }
  }

  int ok = 0;
  long in_bounds = 0, total = 0;
  for (const auto& r : mc.runs) {
    if (!r.ok) {
      mc.failed += 1;
      continue;
    }
    ok += 1;
    mc.mean_rmse_att += r.summary.rmse_att;
    mc.mean_rmse_pos += r.summary.rmse_pos;
    mc.mean_rmse_vel += r.summary.rmse_vel;
    mc.mean_bias_final_err += r.summary.bias_final_err;
    mc.max_rmse_att = std::max(mc.max_rmse_att, r.summary.rmse_att);
    mc.max_rmse_pos = std::max(mc.max_rmse_pos, r.summary.rmse_pos);
    in_bounds += r.summary.nees_in_bounds;
    total += r.summary.nees_count;
  }
  if (ok > 0) {
    mc.mean_rmse_att /= ok;
    mc.mean_rmse_pos /= ok;
    mc.mean_rmse_vel /= ok;
    mc.mean_bias_final_err /= ok;
  }
  mc.pooled_nees_fraction = (total > 0) ? static_cast<double>(in_bounds) / total : kNaN;
  return mc;
}

}  // namespace dgf
