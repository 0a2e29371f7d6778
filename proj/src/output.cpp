#include "stdpavg/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stdpavg/errors.hpp"

namespace stdpavg {

std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string header_line(const std::string& config_hash) {
  return std::string("# ") + kArtifactVersion + " config=" + config_hash + "\n";
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

namespace {

std::string state_header(std::size_t ell) {
  std::string h = "t,x";
  for (std::size_t i = 1; i <= ell; ++i) h += ",z_" + std::to_string(i);
  return h + ",omega_p,omega_d,w\n";
}

}  // namespace

std::string trajectory_csv(const Trajectory& tr, std::size_t ell, const std::string& hash) {
  std::string out = header_line(hash) + state_header(ell);
  for (const auto& s : tr.samples) {
    out += fmt_num(s.t) + "," + fmt_num(s.x);
    for (double z : s.z) out += "," + fmt_num(z);
    out += "," + fmt_num(s.omega_p) + "," + fmt_num(s.omega_d) + "," + fmt_num(s.w) + "\n";
  }
  return out;
}

std::string discrete_trajectory_csv(const DiscreteTrajectory& tr, const std::string& hash) {
  // z_1 carries the calcium count.
  std::string out = header_line(hash) + state_header(1);
  for (const auto& s : tr.samples)
    out += fmt_num(s.t) + "," + std::to_string(s.x) + "," + std::to_string(s.c) + "," +
           fmt_num(s.omega_p) + "," + fmt_num(s.omega_d) + "," + std::to_string(s.w) + "\n";
  return out;
}

std::string limit_csv(const LimitSolution& s, std::size_t ell, const std::string& hash) {
  std::string out = header_line(hash) + state_header(ell);
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    out += fmt_num(s.t[i]) + ",nan";
    for (std::size_t k = 0; k < ell; ++k) out += ",nan";
    out += "," + fmt_num(s.omega_p[i]) + "," + fmt_num(s.omega_d[i]) + "," + fmt_num(s.w[i]) + "\n";
  }
  return out;
}

std::string ensemble_csv(const std::vector<double>& grid, const EnsembleStats& e, std::size_t ell,
                         const std::string& hash) {
  std::string out = header_line(hash) + state_header(ell);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += fmt_num(grid[i]) + ",nan";
    for (std::size_t k = 0; k < ell; ++k) out += ",nan";
    out += ",nan,nan," + fmt_num(e.mean[i]) + "\n";
  }
  return out;
}

std::string sweep_csv(const SweepReport& r, const std::string& hash) {
  std::string out = header_line(hash) + "eps,t,mean_w,sd_w,sup_err,blowup_frac\n";
  for (const auto& e : r.per_eps)
    for (std::size_t i = 0; i < r.grid.size(); ++i)
      out += fmt_num(e.eps) + "," + fmt_num(r.grid[i]) + "," + fmt_num(e.stats.mean[i]) + "," +
             fmt_num(e.stats.sd[i]) + "," + fmt_num(e.sup_err) + "," + fmt_num(e.blowup_frac()) + "\n";
  return out;
}

std::string drive_table_csv(const DriveTable& t, const std::string& hash) {
  std::ostringstream os;
  os << header_line(hash);
  write_drive_table_csv(t, os);
  return os.str();
}

std::string events_csv(const std::vector<Event>& events, const std::string& hash) {
  std::string out = header_line(hash) + "t,kind\n";
  for (const auto& e : events) out += fmt_num(e.t) + "," + to_string(e.kind) + "\n";
  return out;
}

}  // namespace stdpavg
