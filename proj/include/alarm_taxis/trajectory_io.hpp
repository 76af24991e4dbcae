#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "alarm_taxis/grid.hpp"
#include "alarm_taxis/monitor.hpp"
#include "alarm_taxis/trajectory.hpp"

namespace alarm_taxis {

/// Header `# alarm-taxis field nx=.. ny=.. lx=.. ly=.. t=..`, then one grid row per line.
std::string format_field(const Field& f, double t);
/// Returns the field and the header time; throws std::runtime_error on malformed input.
std::pair<Field, double> parse_field(const std::string& text, const std::string& source = "<field>");

void write_field(const std::filesystem::path& path, const Field& f, double t);
std::pair<Field, double> read_field(const std::filesystem::path& path);

/// The fixed leading columns of the time-series CSV.
const std::vector<std::string>& timeseries_base_columns();

/// Fixed columns, margin_* columns, then the remaining record fields. %.17g throughout.
std::string format_timeseries(const std::vector<MonitorRecord>& monitors);
std::vector<MonitorRecord> parse_timeseries(const std::string& csv);

/**
 * Directory layout: timeseries.csv, snapshots/snap_<k>_{u,v,w}.txt and
 * trajectory.meta (rejected step count). dt_history is rebuilt from the
 * monitor dt column on read.
 */
void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& dir);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace alarm_taxis
