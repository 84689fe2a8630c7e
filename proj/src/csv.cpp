#include "dgf/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace dgf {
namespace {

constexpr const char* kImuHeader = "t,gx,gy,gz,ax,ay,az";
constexpr const char* kGpsHeader = "t,p1x,p1y,p1z,v1,p2x,p2y,p2z,v2";
constexpr const char* kTruthHeader = "t,qx,qy,qz,qw,rx,ry,rz,vx,vy,vz,wx,wy,wz,ax,ay,az";

[[noreturn]] void fail(const std::string& path, size_t line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, const std::string& path, size_t line) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + field.size()) {
    fail(path, line, "not a number: '" + field + "'");
  }
  return v;
}

bool parse_flag(const std::string& field, const std::string& path, size_t line) {
  if (field == "0") return false;
  if (field == "1") return true;
  fail(path, line, "validity flag must be 0 or 1, got '" + field + "'");
}

// Reads a CSV with the given header and calls row(fields, line_no) per line.
template <typename RowFn>
void read_csv(const std::string& path, const char* header, size_t ncols, RowFn row) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::string line;
  size_t line_no = 0;
  if (!std::getline(in, line)) fail(path, 1, "empty file, expected header");
  ++line_no;
  if (rstrip(line) != header) {
    fail(path, 1, "bad header, expected '" + std::string(header) + "'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    line = rstrip(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != ncols) {
      fail(path, line_no,
           "expected " + std::to_string(ncols) + " fields, got " + std::to_string(fields.size()));
    }
    row(fields, line_no);
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "w"));
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  return f;
}

}  // namespace

std::vector<ImuSample> parse_imu_log(const std::string& path) {
  std::vector<ImuSample> out;
  read_csv(path, kImuHeader, 7, [&](const std::vector<std::string>& f, size_t ln) {
    ImuSample s;
    s.t = parse_number(f[0], path, ln);
    for (int i = 0; i < 3; ++i) s.gyro(i) = parse_number(f[1 + i], path, ln);
    for (int i = 0; i < 3; ++i) s.accel(i) = parse_number(f[4 + i], path, ln);
    if (!out.empty() && !(s.t > out.back().t)) fail(path, ln, "non-monotonic timestamp");
    out.push_back(s);
  });
  return out;
}

std::vector<GpsFix> parse_gps_log(const std::string& path) {
  std::vector<GpsFix> out;
  read_csv(path, kGpsHeader, 9, [&](const std::vector<std::string>& f, size_t ln) {
    GpsFix g;
    g.t = parse_number(f[0], path, ln);
    for (int i = 0; i < 3; ++i) g.p1(i) = parse_number(f[1 + i], path, ln);
    g.valid1 = parse_flag(f[4], path, ln);
    for (int i = 0; i < 3; ++i) g.p2(i) = parse_number(f[5 + i], path, ln);
    g.valid2 = parse_flag(f[8], path, ln);
    if (!out.empty() && !(g.t > out.back().t)) fail(path, ln, "non-monotonic timestamp");
    out.push_back(g);
  });
  return out;
}

std::vector<TruthSample> parse_truth_log(const std::string& path) {
  std::vector<TruthSample> out;
  read_csv(path, kTruthHeader, 17, [&](const std::vector<std::string>& f, size_t ln) {
    TruthSample s;
    s.t = parse_number(f[0], path, ln);
    Vec3 qv;
    for (int i = 0; i < 3; ++i) qv(i) = parse_number(f[1 + i], path, ln);
    const double qs = parse_number(f[4], path, ln);
    try {
      s.q = Quaternion(qv, qs);
    } catch (const std::exception& e) {
      fail(path, ln, e.what());
    }
    for (int i = 0; i < 3; ++i) s.r(i) = parse_number(f[5 + i], path, ln);
    for (int i = 0; i < 3; ++i) s.v(i) = parse_number(f[8 + i], path, ln);
    for (int i = 0; i < 3; ++i) s.omega(i) = parse_number(f[11 + i], path, ln);
    for (int i = 0; i < 3; ++i) s.a(i) = parse_number(f[14 + i], path, ln);
    if (!out.empty() && !(s.t > out.back().t)) fail(path, ln, "non-monotonic timestamp");
    out.push_back(s);
  });
  return out;
}

void write_imu_log(const std::string& path, const std::vector<ImuSample>& samples) {
  auto f = open_for_write(path);
  std::fprintf(f.get(), "%s\n", kImuHeader);
  for (const auto& s : samples) {
    std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.gyro.x(),
                 s.gyro.y(), s.gyro.z(), s.accel.x(), s.accel.y(), s.accel.z());
  }
}

void write_gps_log(const std::string& path, const std::vector<GpsFix>& fixes) {
  auto f = open_for_write(path);
  std::fprintf(f.get(), "%s\n", kGpsHeader);
  for (const auto& g : fixes) {
    std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%d\n", g.t, g.p1.x(),
                 g.p1.y(), g.p1.z(), g.valid1 ? 1 : 0, g.p2.x(), g.p2.y(), g.p2.z(),
                 g.valid2 ? 1 : 0);
  }
}

void write_truth_log(const std::string& path, const std::vector<TruthSample>& truth) {
  auto f = open_for_write(path);
  std::fprintf(f.get(), "%s\n", kTruthHeader);
  for (const auto& s : truth) {
    std::fprintf(f.get(),
                 "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g,%.17g\n",
                 s.t, s.q.v.x(), s.q.v.y(), s.q.v.z(), s.q.s, s.r.x(), s.r.y(), s.r.z(), s.v.x(),
                 s.v.y(), s.v.z(), s.omega.x(), s.omega.y(), s.omega.z(), s.a.x(), s.a.y(),
                 s.a.z());
  }
}

}  // namespace dgf
