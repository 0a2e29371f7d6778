#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace stdpavg {

// Averaged drives per weight, linearly interpolated between knots.
struct DriveTable {
  std::vector<double> w;
  std::vector<double> drive_p;
  std::vector<double> drive_d;
  std::vector<double> se_p;
  std::vector<double> se_d;

  bool covers(double x) const { return !w.empty() && x >= w.front() && x <= w.back(); }
  // Throws RangeError(time) outside the grid; time is reported to the caller.
  std::array<double, 2> eval(double x, double time = 0.0) const;
  void check() const;
};

void write_drive_table_csv(const DriveTable& t, std::ostream& os);
DriveTable read_drive_table_csv(std::istream& is);

// Knotwise mean of equal-weight independent tables on one grid; se is the
// between-table sd over sqrt(K).
DriveTable pool_tables(const std::vector<DriveTable>& pieces);

}  // namespace stdpavg
