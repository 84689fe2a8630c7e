// dgfuse: simulate, fuse, and analyze dual-GPS/IMU runs from the command line.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "dgf/csv.hpp"
#include "dgf/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace dgf;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_out(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "w"));
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  return f;
}

std::string out_path(const std::string& dir, const char* file) {
  fs::create_directories(dir);
  return (fs::path(dir) / file).string();
}

int cmd_simulate(const std::string& config, const std::string& out, bool seed_set,
                 std::uint64_t seed) {
  Config cfg = parse_config_file(config);
  if (seed_set) cfg.seed = seed;
  const auto truth = generate_truth(cfg.traj);
  const auto imu = synthesize_imu(truth, cfg.filter.noise, cfg.bias_true, cfg.filter.geom,
                                  cfg.traj.imu_rate, cfg.seed);
  const auto gps = synthesize_gps(truth, cfg.filter.geom, cfg.gps_covariance(),
                                  cfg.filter.gps_rate, cfg.outages, cfg.seed);
  write_truth_log(out_path(out, "truth.csv"), truth);
  write_imu_log(out_path(out, "imu.csv"), imu);
  write_gps_log(out_path(out, "gps.csv"), gps);
  std::printf("simulate: %zu imu samples, %zu gps epochs, %.3f s -> %s\n", imu.size(), gps.size(),
              truth.back().t, out.c_str());
  return 0;
}

void write_estimates(const std::string& path, const RunReport& report) {
  auto f = open_out(path);
  std::fprintf(f.get(),
               "t,qx,qy,qz,qw,rx,ry,rz,vx,vy,vz,bx,by,bz,updated,skipped,valid_mask,res_rows,"
               "rho1,rho2,rho3,rho4,rho5,rho6,trace_p,rhat1,rhat2,rhat3,rhat4,rhat5,rhat6,"
               "p1,p2,p3,p4,p5,p6,p7,p8,p9,p10,p11,p12,"
               "theta,theta_warning,obs_rank,obs_full,sigma_min,"
               "att_err,pos_err,vel_err,bias_err,nees\n");
  for (const auto& e : report.epochs) {
    std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                 e.t, e.x.q.v.x(), e.x.q.v.y(), e.x.q.v.z(), e.x.q.s, e.x.r.x(), e.x.r.y(),
                 e.x.r.z(), e.x.v.x(), e.x.v.y(), e.x.v.z());
    std::fprintf(f.get(), ",%.17g,%.17g,%.17g,%d,%d,%d,%d", e.x.b.x(), e.x.b.y(), e.x.b.z(),
                 e.updated ? 1 : 0, e.skipped ? 1 : 0, e.valid_mask, e.res_rows);
    for (int i = 0; i < 6; ++i) std::fprintf(f.get(), ",%.17g", e.residual(i));
    std::fprintf(f.get(), ",%.17g", e.trace_p);
    for (int i = 0; i < 6; ++i) std::fprintf(f.get(), ",%.17g", e.rhat_diag(i));
    for (int i = 0; i < 12; ++i) std::fprintf(f.get(), ",%.17g", e.p_diag(i));
    std::fprintf(f.get(), ",%.17g,%d,%d,%d,%.17g", e.theta, e.theta_warning ? 1 : 0, e.obs_rank,
                 e.obs_full ? 1 : 0, e.obs_sigma_min);
    std::fprintf(f.get(), ",%.17g,%.17g,%.17g,%.17g,%.17g\n", e.att_err, e.pos_err, e.vel_err,
                 e.bias_err, e.nees);
  }
}

void write_summary(const std::string& path, const RunSummary& s) {
  auto f = open_out(path);
  std::fprintf(f.get(), "key,value\n");
  std::fprintf(f.get(), "epochs,%d\n", s.epochs);
  std::fprintf(f.get(), "updates,%d\n", s.updates);
  std::fprintf(f.get(), "skipped,%d\n", s.skipped);
  std::fprintf(f.get(), "coasted,%d\n", s.coasted);
  std::fprintf(f.get(), "warnings,%d\n", s.warnings);
  std::fprintf(f.get(), "t_init,%.17g\n", s.t_init);
  std::fprintf(f.get(), "t_final,%.17g\n", s.t_final);
  std::fprintf(f.get(), "rmse_att,%.17g\n", s.rmse_att);
  std::fprintf(f.get(), "rmse_pos,%.17g\n", s.rmse_pos);
  std::fprintf(f.get(), "rmse_vel,%.17g\n", s.rmse_vel);
  std::fprintf(f.get(), "bias_final_err,%.17g\n", s.bias_final_err);
  std::fprintf(f.get(), "mean_nees,%.17g\n", s.mean_nees);
  std::fprintf(f.get(), "nees_fraction,%.17g\n", s.nees_fraction);
}

int cmd_fuse(const std::string& config, const std::string& imu_path, const std::string& gps_path,
             const std::string& truth_path, const std::string& out, const FuseOptions& options) {
  const Config cfg = parse_config_file(config);
  const auto imu = parse_imu_log(imu_path);
  const auto gps = parse_gps_log(gps_path);
  std::vector<TruthSample> truth;
  if (!truth_path.empty()) truth = parse_truth_log(truth_path);

  const RunReport report = run_fuse(imu, gps, cfg, truth.empty() ? nullptr : &truth, options);
  write_estimates(out_path(out, "estimates.csv"), report);
  write_summary(out_path(out, "summary.csv"), report.summary);

  const RunSummary& s = report.summary;
  std::printf("fuse: %d epochs (%d updates, %d skipped, %d coasted) over %.3f s\n", s.epochs,
              s.updates, s.skipped, s.coasted, s.t_final - s.t_init);
  if (s.warnings > 0) {
    std::fprintf(stderr, "fuse: warning: %d epoch(s) with baseline/accel alignment below %.3g rad\n",
                 s.warnings, cfg.filter.theta_warn);
  }
  if (s.has_truth) {
    std::printf("fuse: rmse att %.6g rad, pos %.6g m, vel %.6g m/s; final bias err %.6g rad/s\n",
                s.rmse_att, s.rmse_pos, s.rmse_vel, s.bias_final_err);
    std::printf("fuse: mean nees %.4g, consistency %.1f%%\n", s.mean_nees,
                100.0 * s.nees_fraction);
  }
  return 0;
}

int cmd_observability(const std::string& config, const std::string& imu_path,
                      const std::string& gps_path, const std::string& out,
                      const FuseOptions& options) {
  const Config cfg = parse_config_file(config);
  const auto imu = parse_imu_log(imu_path);
  const auto gps = parse_gps_log(gps_path);
  const auto reports = run_observability(imu, gps, cfg, options);

  auto f = open_out(out);
  std::fprintf(f.get(), "t,mode,rank,full_rank,theta,sigma_min\n");
  int full = 0;
  for (const auto& r : reports) {
    std::fprintf(f.get(), "%.17g,%s,%d,%d,%.17g,%.17g\n", r.t,
                 r.mode == GpsMode::Dual ? "dual" : "single", r.rank, r.full_rank ? 1 : 0,
                 r.theta, r.sigma_min);
    full += r.full_rank ? 1 : 0;
  }
  std::printf("analyze-observability: %zu epochs, %d full rank, %zu degraded -> %s\n",
              reports.size(), full, reports.size() - static_cast<size_t>(full), out.c_str());
  return 0;
}

int cmd_report(const std::string& config, const std::string& out, int runs, bool seed_set,
               std::uint64_t seed, bool serial, const FuseOptions& options) {
  Config cfg = parse_config_file(config);
  if (seed_set) cfg.seed = seed;
  const McReport mc = run_monte_carlo(cfg, runs, options, !serial);

  auto f = open_out(out);
  std::fprintf(f.get(),
               "run,seed,ok,epochs,updates,skipped,coasted,rmse_att,rmse_pos,rmse_vel,"
               "bias_final_err,mean_nees,nees_fraction,error\n");
  for (size_t i = 0; i < mc.runs.size(); ++i) {
    const McRun& r = mc.runs[i];
    const RunSummary& s = r.summary;
    std::fprintf(f.get(), "%zu,%llu,%d,%d,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", i,
                 static_cast<unsigned long long>(r.seed), r.ok ? 1 : 0, s.epochs, s.updates,
                 s.skipped, s.coasted, s.rmse_att, s.rmse_pos, s.rmse_vel, s.bias_final_err,
                 s.mean_nees, s.nees_fraction, r.error.c_str());
  }
  std::printf("report: %zu runs (%d failed)\n", mc.runs.size(), mc.failed);
  std::printf("report: rmse att mean %.6g max %.6g rad; pos mean %.6g max %.6g m; vel mean %.6g m/s\n",
              mc.mean_rmse_att, mc.max_rmse_att, mc.mean_rmse_pos, mc.max_rmse_pos,
              mc.mean_rmse_vel);
  std::printf("report: mean final bias err %.6g rad/s; pooled nees consistency %.1f%%\n",
              mc.mean_bias_final_err, 100.0 * mc.pooled_nees_fraction);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-GPS/IMU attitude and position fusion"};
  app.require_subcommand(1);

  std::string config, imu_path, gps_path, truth_path, out;
  std::uint64_t seed = 0;
  int runs = 20;
  int single_antenna = 0;
  bool no_adapt = false;
  bool serial = false;

  auto add_single = [&](CLI::App* cmd) {
    cmd->add_option("--single-antenna", single_antenna, "use only antenna 1 or 2")
        ->check(CLI::IsMember({1, 2}));
  };

  auto* sim = app.add_subcommand("simulate", "generate truth, IMU, and GPS logs");
  sim->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "output directory")->required();
  auto* sim_seed = sim->add_option("--seed", seed, "override the config seed");

  auto* fuse = app.add_subcommand("fuse", "run the filter over recorded logs");
  fuse->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  fuse->add_option("--imu", imu_path, "IMU log")->required()->check(CLI::ExistingFile);
  fuse->add_option("--gps", gps_path, "GPS log")->required()->check(CLI::ExistingFile);
  fuse->add_option("--truth", truth_path, "truth log for error reporting")->check(CLI::ExistingFile);
  fuse->add_option("--out", out, "output directory")->required();
  fuse->add_flag("--no-adapt", no_adapt, "freeze the measurement noise at its seed value");
  add_single(fuse);

  auto* obs = app.add_subcommand("analyze-observability", "per-epoch observability sweep");
  obs->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  obs->add_option("--imu", imu_path, "IMU log")->required()->check(CLI::ExistingFile);
  obs->add_option("--gps", gps_path, "GPS log")->required()->check(CLI::ExistingFile);
  obs->add_option("--out", out, "output CSV")->required();
  add_single(obs);

  auto* rep = app.add_subcommand("report", "Monte-Carlo aggregate over simulated runs");
  rep->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", out, "output CSV")->required();
  rep->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber);
  auto* rep_seed = rep->add_option("--seed", seed, "override the config seed");
  rep->add_flag("--no-adapt", no_adapt, "freeze the measurement noise at its seed value");
  rep->add_flag("--serial", serial, "disable parallel execution");
  add_single(rep);

  CLI11_PARSE(app, argc, argv);

  FuseOptions options;
  options.single_antenna = single_antenna;
  if (no_adapt) {
    options.adapt_override_set = true;
    options.adapt_override = false;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config, out, sim_seed->count() > 0, seed);
    if (fuse->parsed()) return cmd_fuse(config, imu_path, gps_path, truth_path, out, options);
    if (obs->parsed()) return cmd_observability(config, imu_path, gps_path, out, options);
    if (rep->parsed()) return cmd_report(config, out, runs, rep_seed->count() > 0, seed, serial, options);
  } catch (const InitializationFailure& e) {
    std::fprintf(stderr, "dgfuse: %s\n", e.what());
    return 2;
  } catch (const FilterDivergence& e) {
    std::fprintf(stderr, "dgfuse: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dgfuse: %s\n", e.what());
    return 1;
  }
  return 0;
}
