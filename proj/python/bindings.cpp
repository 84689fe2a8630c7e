#include <optional>
#include <sstream>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dgf/config.hpp"
#include "dgf/csv.hpp"
#include "dgf/discretize.hpp"
#include "dgf/ekf.hpp"
#include "dgf/models.hpp"
#include "dgf/observability.hpp"
#include "dgf/pipeline.hpp"
#include "dgf/quat.hpp"
#include "dgf/sim.hpp"

namespace py = pybind11;
using namespace dgf;

PYBIND11_MODULE(_dgfusion, m) {
  m.doc() = "Dual-antenna GPS/IMU error-state fusion";
  m.attr("__version__") = "0.1.0";
  m.attr("ERR_DIM") = kErrDim;
  m.attr("DEFAULT_GRAVITY") = kDefaultGravity;
  m.attr("NEES12_LO") = kNees12Lo;
  m.attr("NEES12_HI") = kNees12Hi;
  m.attr("WARMUP_SECONDS") = kWarmupSeconds;

  py::register_exception<FilterDivergence>(m, "FilterDivergence", PyExc_RuntimeError);
  py::register_exception<InitializationFailure>(m, "InitializationFailure", PyExc_RuntimeError);

  // --- quaternion ------------------------------------------------------
  py::class_<Quaternion>(m, "Quaternion", "Unit quaternion stored vector-first: q = [v; s]")
      .def(py::init<>())
      .def(py::init<const Vec3&, double>(), py::arg("v"), py::arg("s"))
      .def_readonly("v", &Quaternion::v)
      .def_readonly("s", &Quaternion::s)
      .def("norm", &Quaternion::norm)
      .def("conjugate", &Quaternion::conjugate)
      .def("normalized", &Quaternion::normalized)
      .def("canonicalized", &Quaternion::canonicalized)
      .def("coeffs", &Quaternion::coeffs, "Coefficients as [vx, vy, vz, s]")
      .def("__repr__", [](const Quaternion& q) {
        std::ostringstream os;
        os << "Quaternion([" << q.v.x() << ", " << q.v.y() << ", " << q.v.z() << "], " << q.s
           << ")";
        return os.str();
      });
  m.def("cross_matrix", &cross_matrix, py::arg("v"), "Skew-symmetric cross-product matrix");
  m.def("omega_matrix", &omega_matrix, py::arg("v"), "4x4 quaternion product kernel");
  m.def("rotation_from_quat", &rotation_from_quat, py::arg("q"),
        "Body-to-inertial rotation matrix");
  m.def("quat_multiply", &quat_multiply, py::arg("q1"), py::arg("q2"),
        "Product with A(q1*q2) = A(q2) A(q1)");
  m.def("quat_from_error", &quat_from_error, py::arg("dqv"),
        "Error quaternion [dqv; sqrt(1 - |dqv|^2)]");
  m.def("quat_from_rotation", &quat_from_rotation, py::arg("A"), py::arg("tol") = 1e-6,
        "Inverse of rotation_from_quat");
  m.def("rotation_angle", &rotation_angle, py::arg("q"), "Rotation angle in [0, pi]");

  // --- sensor models -----------------------------------------------------
  py::class_<ImuSample>(m, "ImuSample", "Body rates (rad/s) and specific force (m/s^2)")
      .def(py::init<>())
      .def_readwrite("t", &ImuSample::t)
      .def_readwrite("gyro", &ImuSample::gyro)
      .def_readwrite("accel", &ImuSample::accel);
  py::class_<GpsFix>(m, "GpsFix", "Dual-antenna position fix with validity flags")
      .def(py::init<>())
      .def_readwrite("t", &GpsFix::t)
      .def_readwrite("p1", &GpsFix::p1)
      .def_readwrite("p2", &GpsFix::p2)
      .def_readwrite("valid1", &GpsFix::valid1)
      .def_readwrite("valid2", &GpsFix::valid2);
  py::class_<SensorGeometry>(m, "SensorGeometry", "Antenna lever arms and gravity (z-up)")
      .def(py::init<>())
      .def_readwrite("e1", &SensorGeometry::e1)
      .def_readwrite("e2", &SensorGeometry::e2)
      .def_readwrite("gravity", &SensorGeometry::gravity)
      .def("gravity_vec", &SensorGeometry::gravity_vec)
      .def("baseline", &SensorGeometry::baseline);
  py::class_<NoiseSpec>(m, "NoiseSpec", "Continuous-time IMU noise densities")
      .def(py::init<>())
      .def_readwrite("sigma_g", &NoiseSpec::sigma_g)
      .def_readwrite("sigma_a", &NoiseSpec::sigma_a)
      .def_readwrite("sigma_b", &NoiseSpec::sigma_b)
      .def("imu_covariance", &NoiseSpec::imu_covariance);
  py::class_<StateEstimate>(m, "StateEstimate", "Attitude, position, velocity, gyro bias")
      .def(py::init<>())
      .def_readwrite("q", &StateEstimate::q)
      .def_readwrite("r", &StateEstimate::r)
      .def_readwrite("v", &StateEstimate::v)
      .def_readwrite("b", &StateEstimate::b)
      .def("rotation", &StateEstimate::rotation);
  py::class_<StateDerivative>(m, "StateDerivative")
      .def_readonly("q_dot", &StateDerivative::q_dot)
      .def_readonly("r_dot", &StateDerivative::r_dot)
      .def_readonly("v_dot", &StateDerivative::v_dot)
      .def_readonly("b_dot", &StateDerivative::b_dot);
  m.def("predict_measurement", &predict_measurement, py::arg("x"), py::arg("geom"),
        "h(x) = [r + A e1; r + A e2]");
  m.def("predict_measurement_single", &predict_measurement_single, py::arg("x"), py::arg("geom"),
        py::arg("antenna"));
  m.def("measurement_jacobian", &measurement_jacobian, py::arg("x"), py::arg("geom"),
        "6x12 H over the error state");
  m.def("measurement_jacobian_single", &measurement_jacobian_single, py::arg("x"),
        py::arg("geom"), py::arg("antenna"));
  m.def("continuous_dynamics", &continuous_dynamics, py::arg("x"), py::arg("u"), py::arg("geom"),
        "Full-state time derivative under one IMU sample");
  m.def("linearized_F", &linearized_F, py::arg("x"), py::arg("u"),
        "12x12 error-state dynamics Jacobian");
  m.def("noise_jacobian_G", &noise_jacobian_G, py::arg("x"), "12x9 noise input Jacobian");
  m.def("integrate_rk4",
        py::overload_cast<const StateEstimate&, const ImuSample&, double, const SensorGeometry&>(
            &integrate_rk4),
        py::arg("x"), py::arg("u"), py::arg("dt"), py::arg("geom"),
        "One RK4 step with the inputs held constant");
  m.def("integrate_rk4",
        py::overload_cast<const StateEstimate&, const ImuSample&, const ImuSample&, double,
                          const SensorGeometry&>(&integrate_rk4),
        py::arg("x"), py::arg("u_lo"), py::arg("u_hi"), py::arg("dt"), py::arg("geom"),
        "One RK4 step with the inputs varying linearly from u_lo to u_hi");

  // --- discretization ----------------------------------------------------
  py::class_<TransitionMatrix>(m, "TransitionMatrix")
      .def_readonly("m", &TransitionMatrix::m)
      .def_readonly("tau", &TransitionMatrix::tau);
  py::class_<ProcessNoiseMatrix>(m, "ProcessNoiseMatrix")
      .def_readonly("m", &ProcessNoiseMatrix::m);
  m.def("lambda_matrix", &lambda_matrix, py::arg("w"), py::arg("tau"),
        "exp(-[w x] tau) via Rodrigues");
  m.def("lambda_prime", &lambda_prime, py::arg("w"), py::arg("tau"),
        "Integral of lambda_matrix over [0, tau]");
  m.def("state_transition", &state_transition, py::arg("A"), py::arg("w"), py::arg("a"),
        py::arg("tau"), "Closed-form discrete error-state transition");
  m.def("process_noise_closed", &process_noise_closed, py::arg("A"), py::arg("w"), py::arg("a"),
        py::arg("tau"), py::arg("noise"), "Closed-form first-order process noise");
  m.def("process_noise_quadrature", &process_noise_quadrature, py::arg("A"), py::arg("w"),
        py::arg("a"), py::arg("tau"), py::arg("noise"), py::arg("steps") = 64,
        "Simpson-quadrature reference process noise");

  // --- observability -------------------------------------------------------
  py::enum_<GpsMode>(m, "GpsMode").value("Dual", GpsMode::Dual).value("Single", GpsMode::Single);
  py::class_<ObservabilityReport>(m, "ObservabilityReport")
      .def_readonly("t", &ObservabilityReport::t)
      .def_readonly("rank", &ObservabilityReport::rank)
      .def_readonly("full_rank", &ObservabilityReport::full_rank)
      .def_readonly("theta", &ObservabilityReport::theta)
      .def_readonly("sigma_min", &ObservabilityReport::sigma_min)
      .def_readonly("mode", &ObservabilityReport::mode);
  py::class_<MroCheck>(m, "MroCheck")
      .def_readonly("rank_obs", &MroCheck::rank_obs)
      .def_readonly("rank_reduced", &MroCheck::rank_reduced)
      .def_readonly("rank_o_prime", &MroCheck::rank_o_prime)
      .def_readonly("equivalent", &MroCheck::equivalent);
  m.def("observability_matrix", &observability_matrix, py::arg("A"), py::arg("w"), py::arg("a"),
        py::arg("geom"), py::arg("mode"), py::arg("order") = 3, py::arg("antenna") = 1,
        "Stacked [H; HF; ...; HF^order] at frozen inputs");
  m.def("numeric_rank", &numeric_rank, py::arg("m"), py::arg("rel_tol") = 1e-8);
  m.def("pi_matrix", &pi_matrix, py::arg("de"), py::arg("a"));
  m.def("alignment_angle", &alignment_angle, py::arg("de"), py::arg("a"),
        "Baseline/specific-force alignment angle in [0, pi/2]");
  m.def("single_gps_null_vector", &single_gps_null_vector, py::arg("A"), py::arg("w"),
        py::arg("a"), py::arg("e1"), "Analytic single-antenna unobservable direction");
  m.def("mro_reduced_rank_check", &mro_reduced_rank_check, py::arg("A"), py::arg("w"),
        py::arg("a"), py::arg("geom"), py::arg("rel_tol") = 1e-8);

  // --- filter -------------------------------------------------------------
  py::class_<FilterConfig>(m, "FilterConfig")
      .def(py::init<>())
      .def_readwrite("noise", &FilterConfig::noise)
      .def_readwrite("geom", &FilterConfig::geom)
      .def_readwrite("window_w", &FilterConfig::window_w)
      .def_readwrite("imu_rate", &FilterConfig::imu_rate)
      .def_readwrite("gps_rate", &FilterConfig::gps_rate)
      .def_readwrite("r_floor", &FilterConfig::r_floor)
      .def_readwrite("adapt_enabled", &FilterConfig::adapt_enabled)
      .def_readwrite("r_init_sigma", &FilterConfig::r_init_sigma)
      .def_readwrite("adapt_min_count", &FilterConfig::adapt_min_count)
      .def_readwrite("p0_att", &FilterConfig::p0_att)
      .def_readwrite("p0_pos", &FilterConfig::p0_pos)
      .def_readwrite("p0_vel", &FilterConfig::p0_vel)
      .def_readwrite("p0_bias", &FilterConfig::p0_bias)
      .def_readwrite("theta_warn", &FilterConfig::theta_warn)
      .def_readwrite("cond_max", &FilterConfig::cond_max);
  py::class_<FilterState>(m, "FilterState")
      .def(py::init<>())
      .def_readwrite("x", &FilterState::x)
      .def_readwrite("P", &FilterState::P)
      .def_readwrite("R_hat", &FilterState::R_hat)
      .def_readwrite("S_hat", &FilterState::S_hat)
      .def_readwrite("residual_window", &FilterState::residual_window)
      .def_readwrite("k", &FilterState::k)
      .def_readwrite("t", &FilterState::t)
      .def_readwrite("initialized", &FilterState::initialized);
  m.def("adapt_noise", &adapt_noise, py::arg("fs"), py::arg("rho"), py::arg("H"),
        py::arg("P_prior"), py::arg("cfg"),
        "Windowed residual-covariance recursion and R_hat refresh");
  py::class_<UpdateResult> update_result(m, "UpdateResult");
  py::enum_<UpdateResult::Outcome>(update_result, "Outcome")
      .value("Updated", UpdateResult::Outcome::Updated)
      .value("SkippedIllConditioned", UpdateResult::Outcome::SkippedIllConditioned)
      .value("NoValidAntenna", UpdateResult::Outcome::NoValidAntenna);
  update_result.def_readonly("outcome", &UpdateResult::outcome)
      .def_readonly("residual", &UpdateResult::residual)
      .def_readonly("rows", &UpdateResult::rows)
      .def_readonly("condition", &UpdateResult::condition);
  py::class_<Ekf>(m, "Ekf")
      .def(py::init<FilterConfig>(), py::arg("config"))
      .def("initialize", &Ekf::initialize, py::arg("fix"), py::arg("imu"),
           "Static alignment from one dual fix and one IMU sample")
      .def(
          "propagate",
          [](Ekf& e, const std::vector<ImuSample>& samples, double t_delta) {
            e.propagate(std::span<const ImuSample>(samples.data(), samples.size()), t_delta);
          },
          py::arg("samples"), py::arg("t_delta"))
      .def("update", &Ekf::update, py::arg("fix"))
      .def("residual", &Ekf::residual, py::arg("fix"))
      .def_static(
          "average_inputs",
          [](const std::vector<ImuSample>& samples, double t0, double t1) {
            return Ekf::average_inputs(std::span<const ImuSample>(samples.data(), samples.size()),
                                       t0, t1);
          },
          py::arg("samples"), py::arg("t0"), py::arg("t1"))
      .def("error_state", &Ekf::error_state, py::arg("truth"))
      .def("nees", &Ekf::nees, py::arg("truth"))
      .def_property_readonly("state", [](const Ekf& e) { return e.state(); })
      .def_property_readonly("config", [](const Ekf& e) { return e.config(); });

  // --- simulator -----------------------------------------------------------
  py::enum_<TrajectoryKind>(m, "TrajectoryKind")
      .value("Static", TrajectoryKind::Static)
      .value("Straight", TrajectoryKind::Straight)
      .value("Circle", TrajectoryKind::Circle)
      .value("Figure8", TrajectoryKind::Figure8)
      .value("Scripted", TrajectoryKind::Scripted);
  py::class_<ScriptedSegment>(m, "ScriptedSegment")
      .def(py::init<>())
      .def_readwrite("duration", &ScriptedSegment::duration)
      .def_readwrite("omega_body", &ScriptedSegment::omega_body)
      .def_readwrite("accel_body", &ScriptedSegment::accel_body);
  py::class_<TrajectorySpec>(m, "TrajectorySpec")
      .def(py::init<>())
      .def_readwrite("kind", &TrajectorySpec::kind)
      .def_readwrite("duration", &TrajectorySpec::duration)
      .def_readwrite("imu_rate", &TrajectorySpec::imu_rate)
      .def_readwrite("speed", &TrajectorySpec::speed)
      .def_readwrite("radius", &TrajectorySpec::radius)
      .def_readwrite("ramp_time", &TrajectorySpec::ramp_time)
      .def_readwrite("yaw0", &TrajectorySpec::yaw0)
      .def_readwrite("start", &TrajectorySpec::start)
      .def_readwrite("roll_amp", &TrajectorySpec::roll_amp)
      .def_readwrite("pitch_amp", &TrajectorySpec::pitch_amp)
      .def_readwrite("roll_period", &TrajectorySpec::roll_period)
      .def_readwrite("pitch_period", &TrajectorySpec::pitch_period)
      .def_readwrite("script", &TrajectorySpec::script);
  py::class_<TruthSample>(m, "TruthSample")
      .def(py::init<>())
      .def_readwrite("t", &TruthSample::t)
      .def_readwrite("q", &TruthSample::q)
      .def_readwrite("r", &TruthSample::r)
      .def_readwrite("v", &TruthSample::v)
      .def_readwrite("a", &TruthSample::a)
      .def_readwrite("omega", &TruthSample::omega);
  py::class_<OutageWindow>(m, "OutageWindow")
      .def(py::init<>())
      .def_readwrite("t_begin", &OutageWindow::t_begin)
      .def_readwrite("t_end", &OutageWindow::t_end)
      .def_readwrite("antenna", &OutageWindow::antenna);
  py::class_<OutageScript>(m, "OutageScript")
      .def(py::init<>())
      .def_readwrite("windows", &OutageScript::windows)
      .def("blocks", &OutageScript::blocks, py::arg("t"), py::arg("antenna"));
  m.def("generate_truth", &generate_truth, py::arg("spec"),
        "Sample the trajectory on the IMU grid");
  m.def("truth_at", &truth_at, py::arg("truth"), py::arg("t"), "Interpolated truth sample");
  m.def("synthesize_imu", &synthesize_imu, py::arg("truth"), py::arg("noise"),
        py::arg("bias_true"), py::arg("geom"), py::arg("rate"), py::arg("seed"));
  m.def("synthesize_gps", &synthesize_gps, py::arg("truth"), py::arg("geom"), py::arg("r_true"),
        py::arg("gps_rate"), py::arg("outages"), py::arg("seed"));

  // --- logs and config -------------------------------------------------------
  m.def("parse_imu_log", &parse_imu_log, py::arg("path"));
  m.def("parse_gps_log", &parse_gps_log, py::arg("path"));
  m.def("parse_truth_log", &parse_truth_log, py::arg("path"));
  m.def("write_imu_log", &write_imu_log, py::arg("path"), py::arg("samples"));
  m.def("write_gps_log", &write_gps_log, py::arg("path"), py::arg("fixes"));
  m.def("write_truth_log", &write_truth_log, py::arg("path"), py::arg("truth"));
  py::class_<Config>(m, "Config")
      .def(py::init<>())
      .def_readwrite("filter", &Config::filter)
      .def_readwrite("traj", &Config::traj)
      .def_readwrite("seed", &Config::seed)
      .def_readwrite("gps_sigma", &Config::gps_sigma)
      .def_readwrite("bias_true", &Config::bias_true)
      .def_readwrite("outages", &Config::outages)
      .def("gps_covariance", &Config::gps_covariance);
  m.def("parse_config_text", &parse_config_text, py::arg("text"), py::arg("name"));
  m.def("parse_config_file", &parse_config_file, py::arg("path"));

  // --- pipeline ----------------------------------------------------------------
  py::class_<FuseOptions>(m, "FuseOptions")
      .def(py::init<>())
      .def_readwrite("single_antenna", &FuseOptions::single_antenna)
      .def_readwrite("adapt_override_set", &FuseOptions::adapt_override_set)
      .def_readwrite("adapt_override", &FuseOptions::adapt_override);
  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("t", &EpochRecord::t)
      .def_readonly("x", &EpochRecord::x)
      .def_readonly("residual", &EpochRecord::residual)
      .def_readonly("res_rows", &EpochRecord::res_rows)
      .def_readonly("valid_mask", &EpochRecord::valid_mask)
      .def_readonly("updated", &EpochRecord::updated)
      .def_readonly("skipped", &EpochRecord::skipped)
      .def_readonly("trace_p", &EpochRecord::trace_p)
      .def_readonly("rhat_diag", &EpochRecord::rhat_diag)
      .def_readonly("p_diag", &EpochRecord::p_diag)
      .def_readonly("theta", &EpochRecord::theta)
      .def_readonly("theta_warning", &EpochRecord::theta_warning)
      .def_readonly("obs_rank", &EpochRecord::obs_rank)
      .def_readonly("obs_full", &EpochRecord::obs_full)
      .def_readonly("obs_sigma_min", &EpochRecord::obs_sigma_min)
      .def_readonly("att_err", &EpochRecord::att_err)
      .def_readonly("pos_err", &EpochRecord::pos_err)
      .def_readonly("vel_err", &EpochRecord::vel_err)
      .def_readonly("bias_err", &EpochRecord::bias_err)
      .def_readonly("nees", &EpochRecord::nees);
  py::class_<RunSummary>(m, "RunSummary")
      .def_readonly("epochs", &RunSummary::epochs)
      .def_readonly("updates", &RunSummary::updates)
      .def_readonly("skipped", &RunSummary::skipped)
      .def_readonly("coasted", &RunSummary::coasted)
      .def_readonly("warnings", &RunSummary::warnings)
      .def_readonly("t_init", &RunSummary::t_init)
      .def_readonly("t_final", &RunSummary::t_final)
      .def_readonly("has_truth", &RunSummary::has_truth)
      .def_readonly("rmse_att", &RunSummary::rmse_att)
      .def_readonly("rmse_pos", &RunSummary::rmse_pos)
      .def_readonly("rmse_vel", &RunSummary::rmse_vel)
      .def_readonly("bias_final_err", &RunSummary::bias_final_err)
      .def_readonly("mean_nees", &RunSummary::mean_nees)
      .def_readonly("nees_count", &RunSummary::nees_count)
      .def_readonly("nees_in_bounds", &RunSummary::nees_in_bounds)
      .def_readonly("nees_fraction", &RunSummary::nees_fraction);
  py::class_<RunReport>(m, "RunReport")
      .def_readonly("epochs", &RunReport::epochs)
      .def_readonly("summary", &RunReport::summary);
  py::class_<McRun>(m, "McRun")
      .def_readonly("seed", &McRun::seed)
      .def_readonly("ok", &McRun::ok)
      .def_readonly("error", &McRun::error)
      .def_readonly("summary", &McRun::summary);
  py::class_<McReport>(m, "McReport")
      .def_readonly("runs", &McReport::runs)
      .def_readonly("failed", &McReport::failed)
      .def_readonly("mean_rmse_att", &McReport::mean_rmse_att)
      .def_readonly("max_rmse_att", &McReport::max_rmse_att)
      .def_readonly("mean_rmse_pos", &McReport::mean_rmse_pos)
      .def_readonly("max_rmse_pos", &McReport::max_rmse_pos)
      .def_readonly("mean_rmse_vel", &McReport::mean_rmse_vel)
      .def_readonly("mean_bias_final_err", &McReport::mean_bias_final_err)
      .def_readonly("pooled_nees_fraction", &McReport::pooled_nees_fraction);
  m.def(
      "run_fuse",
      [](const std::vector<ImuSample>& imu, const std::vector<GpsFix>& gps, const Config& cfg,
         const std::optional<std::vector<TruthSample>>& truth, const FuseOptions& options) {
        return run_fuse(imu, gps, cfg, truth ? &*truth : nullptr, options);
      },
      py::arg("imu"), py::arg("gps"), py::arg("cfg"), py::arg("truth") = std::nullopt,
      py::arg("options") = FuseOptions{}, py::call_guard<py::gil_scoped_release>(),
      "Run the full filter over the logs");
  m.def("run_observability", &run_observability, py::arg("imu"), py::arg("gps"), py::arg("cfg"),
        py::arg("options") = FuseOptions{}, py::call_guard<py::gil_scoped_release>(),
        "Per-epoch observability sweep");
  m.def("run_monte_carlo", &run_monte_carlo, py::arg("cfg"), py::arg("runs"),
        py::arg("options") = FuseOptions{}, py::arg("parallel") = true,
        py::call_guard<py::gil_scoped_release>(),
        "Simulate and fuse independent noise realizations");
}
