#include "stdpavg/drive_table.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "stdpavg/errors.hpp"

namespace stdpavg {

void DriveTable::check() const {
  const std::size_t n = w.size();
  if (n == 0) throw SpecError("drive table is empty");
  if (drive_p.size() != n || drive_d.size() != n || se_p.size() != n || se_d.size() != n)
    throw SpecError("drive table columns differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(w[i]) || (i > 0 && !(w[i] > w[i - 1])))
      throw SpecError("drive table grid must be finite and strictly increasing");
    if (!std::isfinite(drive_p[i]) || !std::isfinite(drive_d[i]) || drive_p[i] < 0.0 ||
        drive_d[i] < 0.0)
      throw SpecError("drive table values must be finite and nonnegative");
  }
}

std::array<double, 2> DriveTable::eval(double x, double time) const {
  if (!covers(x)) {
    std::ostringstream os;
    os << "w = " << x << " outside drive table [" << (w.empty() ? NAN : w.front()) << ", "
       << (w.empty() ? NAN : w.back()) << "] at t = " << time;
    throw RangeError(os.str(), time);
  }
  if (w.size() == 1) return {drive_p[0], drive_d[0]};
  auto it = std::upper_bound(w.begin(), w.end(), x);
  std::size_t i = it == w.end() ? w.size() - 2 : static_cast<std::size_t>(it - w.begin()) - 1;
  double s = (x - w[i]) / (w[i + 1] - w[i]);
  return {drive_p[i] + s * (drive_p[i + 1] - drive_p[i]),
          drive_d[i] + s * (drive_d[i + 1] - drive_d[i])};
}

void write_drive_table_csv(const DriveTable& t, std::ostream& os) {
  t.check();
  os << "w,drive_p,drive_d,se_p,se_d\n";
  char buf[128];
  for (std::size_t i = 0; i < t.w.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", t.w[i], t.drive_p[i],
                  t.drive_d[i], t.se_p[i], t.se_d[i]);
    os << buf;
  }
}

DriveTable read_drive_table_csv(std::istream& is) {
  DriveTable t;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "w,drive_p,drive_d,se_p,se_d") throw SpecError("drive table: bad header " + line);
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    double v[5];
    for (int k = 0; k < 5; ++k) {
      if (!std::getline(ls, cell, ',')) throw SpecError("drive table: short row " + line);
      try {
        v[k] = std::stod(cell);
      } catch (const std::exception&) {
        throw SpecError("drive table: bad number " + cell);
      }
    }
    t.w.push_back(v[0]);
    t.drive_p.push_back(v[1]);
    t.drive_d.push_back(v[2]);
    t.se_p.push_back(v[3]);
    t.se_d.push_back(v[4]);
  }
  t.check();
  return t;
}

DriveTable pool_tables(const std::vector<DriveTable>& pieces) {
  if (pieces.size() < 2) throw SpecError("pool_tables: need at least two tables");
  DriveTable out = pieces.front();
  const double K = static_cast<double>(pieces.size());
  for (std::size_t i = 0; i < out.w.size(); ++i) {
    double sp = 0.0, sd = 0.0;
    for (const auto& t : pieces) {
      if (t.w != out.w) throw SpecError("pool_tables: grids differ");
      sp += t.drive_p[i];
      sd += t.drive_d[i];
    }
    out.drive_p[i] = sp / K;
    out.drive_d[i] = sd / K;
    double vp = 0.0, vd = 0.0;
    for (const auto& t : pieces) {
      vp += (t.drive_p[i] - out.drive_p[i]) * (t.drive_p[i] - out.drive_p[i]);
      vd += (t.drive_d[i] - out.drive_d[i]) * (t.drive_d[i] - out.drive_d[i]);
    }
    out.se_p[i] = std::sqrt(vp / (K - 1.0) / K);
    out.se_d[i] = std::sqrt(vd / (K - 1.0) / K);
  }
  return out;
}

}  // namespace stdpavg
