#pragma once

// Run artifacts: PCF1 field snapshots and the diagnostics CSV.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcf/functionals.hpp"

namespace pcf {

/// Version tag of the diagnostics CSV column layout.
inline constexpr const char* kDiagnosticsSchema = "pcf-diagnostics/1";

/// A stored potential: grid identification, time and nodal values.
struct Snapshot {
  Backend backend = Backend::TorusPeriodic;
  int complex_dim = 1;
  int resolution = 0;
  double t = 0.0;
  std::vector<double> values;
};

/// PCF1 layout, little endian: 64-byte header
///   [0,4) magic "PCF1"  [4,8) backend code (0 torus, 1 sphere)  [8,12) n  [12,16) N
///   [16,24) value count (u64)  [24,32) time (f64)  [32,64) zero
/// followed by `count` f64 values in the grid's row-major node order.
void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
/// Throws IoError on a missing file, a bad magic or a truncated payload.
Snapshot read_snapshot(const std::filesystem::path& path);

/// Snapshot of phi at time t.
Snapshot make_snapshot(const ScalarField& phi, double t);
/// Rebuilds the metric state of a snapshot over `bg`; the grid must match.
MetricState load_state(const Snapshot& snap, const BackgroundPtr& bg);

/// 17 significant digits, which reads back to the same double ("nan", "inf", "-inf" otherwise).
std::string format_double(double x);

/// Record fields in kDiagnosticsColumns order.
std::array<double, kDiagnosticsColumns.size()> diagnostics_values(const DiagnosticsRecord& r);

/// Header line of the diagnostics CSV.
std::string diagnostics_header();
/// One CSV row, floats printed with 17 significant digits.
std::string diagnostics_row(const DiagnosticsRecord& r);
void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRecord>& rows);

}  // namespace pcf
