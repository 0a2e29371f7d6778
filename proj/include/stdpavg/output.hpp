#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stdpavg/drive_table.hpp"
#include "stdpavg/engine.hpp"
#include "stdpavg/harness.hpp"
#include "stdpavg/limit.hpp"

namespace stdpavg {

inline constexpr const char* kArtifactVersion = "stdpavg-1.0";

// Fixed 17-significant-digit rendering; nan and inf print as such.
std::string fmt_num(double x);

// "# stdpavg-1.0 config=<hash>" header line.
std::string header_line(const std::string& config_hash);

// Writes content to path through a temporary file and rename.
void write_atomic(const std::string& path, const std::string& content);

// Schemas. Every text starts with the header line.
std::string trajectory_csv(const Trajectory& tr, std::size_t ell, const std::string& hash);
std::string discrete_trajectory_csv(const DiscreteTrajectory& tr, const std::string& hash);
// Limit solutions use the trajectory schema with x and z set to nan.
std::string limit_csv(const LimitSolution& s, std::size_t ell, const std::string& hash);
// Ensemble mean of a limit process in the trajectory schema (omega columns nan).
std::string ensemble_csv(const std::vector<double>& grid, const EnsembleStats& e, std::size_t ell,
                         const std::string& hash);
std::string sweep_csv(const SweepReport& r, const std::string& hash);
std::string drive_table_csv(const DriveTable& t, const std::string& hash);
std::string events_csv(const std::vector<Event>& events, const std::string& hash);

}  // namespace stdpavg
