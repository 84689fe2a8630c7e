#include "dgf/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dgf {
namespace {

[[noreturn]] void fail(const std::string& name, size_t line, const std::string& msg) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double to_number(const std::string& tok, const std::string& name, size_t line) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + tok.size()) fail(name, line, "not a number: '" + tok + "'");
  return v;
}

struct Value {
  std::vector<std::string> toks;
  const std::string& name;
  size_t line;

  void expect(size_t n, const std::string& key) const {
    if (toks.size() != n) {
      fail(name, line, key + " expects " + std::to_string(n) + " value(s), got " +
                           std::to_string(toks.size()));
    }
  }
  double num(size_t i = 0) const { return to_number(toks[i], name, line); }
  Vec3 vec3() const { return Vec3(num(0), num(1), num(2)); }
  bool flag(const std::string& key) const {
    const std::string& t = toks[0];
    if (t == "1" || t == "true" || t == "on") return true;
    if (t == "0" || t == "false" || t == "off") return false;
    fail(name, line, key + " expects a boolean, got '" + t + "'");
  }
};

TrajectoryKind to_kind(const std::string& t, const std::string& name, size_t line) {
  if (t == "static") return TrajectoryKind::Static;
  if (t == "straight") return TrajectoryKind::Straight;
  if (t == "circle") return TrajectoryKind::Circle;
  if (t == "figure8") return TrajectoryKind::Figure8;
  if (t == "scripted") return TrajectoryKind::Scripted;
  fail(name, line, "unknown trajectory '" + t + "'");
}

void apply(Config& c, const std::string& key, const Value& v) {
  auto& f = c.filter;
  auto& tr = c.traj;
  if (key == "sigma_g") {
    v.expect(1, key);
    f.noise.sigma_g = v.num();
  } else if (key == "sigma_a") {
    v.expect(1, key);
    f.noise.sigma_a = v.num();
  } else if (key == "sigma_b") {
    v.expect(1, key);
    f.noise.sigma_b = v.num();
  } else if (key == "e1") {
    v.expect(3, key);
    f.geom.e1 = v.vec3();
  } else if (key == "e2") {
    v.expect(3, key);
    f.geom.e2 = v.vec3();
  } else if (key == "gravity") {
    v.expect(1, key);
    f.geom.gravity = v.num();
  } else if (key == "window_w") {
    v.expect(1, key);
    const double w = v.num();
    if (w < 1.0 || w != static_cast<long>(w)) fail(v.name, v.line, "window_w must be a positive integer");
    f.window_w = static_cast<int>(w);
  } else if (key == "r_floor") {
    v.expect(1, key);
    f.r_floor = v.num();
  } else if (key == "adapt") {
    v.expect(1, key);
    f.adapt_enabled = v.flag(key);
  } else if (key == "imu_rate") {
    v.expect(1, key);
    f.imu_rate = v.num();
    tr.imu_rate = f.imu_rate;
  } else if (key == "gps_rate") {
    v.expect(1, key);
    f.gps_rate = v.num();
  } else if (key == "r_init") {
    v.expect(1, key);
    f.r_init_sigma = v.num();
  } else if (key == "p0_att") {
    v.expect(1, key);
    f.p0_att = v.num();
  } else if (key == "p0_pos") {
    v.expect(1, key);
    f.p0_pos = v.num();
  } else if (key == "p0_vel") {
    v.expect(1, key);
    f.p0_vel = v.num();
  } else if (key == "p0_bias") {
    v.expect(1, key);
    f.p0_bias = v.num();
  } else if (key == "theta_warn") {
    v.expect(1, key);
    f.theta_warn = v.num();
  } else if (key == "seed") {
    v.expect(1, key);
    c.seed = static_cast<std::uint64_t>(v.num());
  } else if (key == "trajectory") {
    v.expect(1, key);
    tr.kind = to_kind(v.toks[0], v.name, v.line);
  } else if (key == "duration") {
    v.expect(1, key);
    tr.duration = v.num();
  } else if (key == "speed") {
    v.expect(1, key);
    tr.speed = v.num();
  } else if (key == "radius") {
    v.expect(1, key);
    tr.radius = v.num();
  } else if (key == "ramp_time") {
    v.expect(1, key);
    tr.ramp_time = v.num();
  } else if (key == "yaw0") {
    v.expect(1, key);
    tr.yaw0 = v.num();
  } else if (key == "start") {
    v.expect(3, key);
    tr.start = v.vec3();
  } else if (key == "roll_amp") {
    v.expect(1, key);
    tr.roll_amp = v.num();
  } else if (key == "pitch_amp") {
    v.expect(1, key);
    tr.pitch_amp = v.num();
  } else if (key == "roll_period") {
    v.expect(1, key);
    tr.roll_period = v.num();
  } else if (key == "pitch_period") {
    v.expect(1, key);
    tr.pitch_period = v.num();
  } else if (key == "gps_sigma") {
    v.expect(1, key);
    c.gps_sigma = v.num();
  } else if (key == "bias_true") {
    v.expect(3, key);
    c.bias_true = v.vec3();
  } else if (key == "outage") {
    v.expect(3, key);
    OutageWindow w;
    w.t_begin = v.num(0);
    w.t_end = v.num(1);
    const std::string& who = v.toks[2];
    if (who == "both")
      w.antenna = 3;
    else if (who == "1")
      w.antenna = 1;
    else if (who == "2")
      w.antenna = 2;
    else
      fail(v.name, v.line, "outage antenna must be 1, 2, or both");
    if (!(w.t_end > w.t_begin)) fail(v.name, v.line, "outage window must have t_end > t_begin");
    c.outages.windows.push_back(w);
  } else if (key == "segment") {
    v.expect(7, key);
    ScriptedSegment s;
    s.duration = v.num(0);
    s.omega_body = Vec3(v.num(1), v.num(2), v.num(3));
    s.accel_body = Vec3(v.num(4), v.num(5), v.num(6));
    tr.script.push_back(s);
  } else {
    fail(v.name, v.line, "unknown key '" + key + "'");
  }
}

}  // namespace

Config parse_config_text(const std::string& text, const std::string& name) {
  Config c;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(name, line_no, "expected key = value");
    const auto key_toks = tokenize(line.substr(0, eq));
    if (key_toks.size() != 1) fail(name, line_no, "expected a single key before '='");
    Value v{tokenize(line.substr(eq + 1)), name, line_no};
    if (v.toks.empty()) fail(name, line_no, "missing value for key '" + key_toks[0] + "'");
    apply(c, key_toks[0], v);
  }
  return c;
}

Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace dgf
