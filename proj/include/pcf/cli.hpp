#pragma once

// Scenario configs, the bundled scenario catalog and the scenario runner that
// writes diagnostics.csv, summary.json and PCF1 snapshots.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pcf/flow.hpp"

namespace pcf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitIo = 4;

/// Version tag of summary.json.
inline constexpr const char* kSummarySchema = "pcf-summary/1";

struct Analyses {
  bool lichnerowicz = false;  // lambda_min and a finite-difference Jacobian probe at the final state
  bool decay_fit = false;     // exponential fits of mu0, mu1 and the Laplacian gap at the final state
  bool krf_compare = false;   // parallel Kähler-Ricci run and metric distance per sample
  bool futaki = false;        // Futaki invariant of the axial field (sphere only)
  bool operator==(const Analyses&) const = default;
};

struct Scenario {
  std::string name;
  std::string description;
  FlowConfig config;
  Analyses analyses;
  int snapshot_every = 0;  // samples between snapshots; 0 keeps the first and last only

  /// Throws ConfigError with the key path of the offending entry.
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

/// INI text: top-level `name` and `description`, then the sections
///   [grid]       backend, n, resolution, period, dealias
///   [background] kind, seed, max_mode, margin, terms, legendre
///   [initial]    same keys as [background]
///   [flow]       kind, scheme, dt_policy, dt, safety, t_end, normalization, eps_pos,
///                solver_tol, calabi_threshold, stop_on_convergence
///   [analyses]   lichnerowicz, decay_fit, krf_compare, futaki
///   [output]     sample_every, snapshot_every
/// Required: name, grid.backend, grid.resolution, flow.t_end.  Unknown sections or keys
/// raise ConfigError naming them.  Fourier terms are written as 2n integer mode indices
/// followed by the cosine and sine amplitudes, terms separated by ';'.
Scenario parse_config(const std::string& text);
Scenario load_config(const std::filesystem::path& path);
/// Complete INI text; parse_config(serialize_config(s)) == s.
std::string serialize_config(const Scenario& s);

/// Overrides the seed of a random initial potential.
void apply_seed(Scenario& s, std::uint64_t seed);

struct BundledScenario {
  std::string name;
  std::string exercises;  // the behaviour the scenario checks
  std::string text;       // INI config
};

const std::vector<BundledScenario>& bundled_scenarios();
/// Throws UnknownScenario.
Scenario bundled_scenario(const std::string& name);
std::string list_scenarios();
/// Name, purpose and config echo.  Throws UnknownScenario.
std::string describe(const std::string& name);

struct ScenarioResult {
  Trajectory trajectory;
  std::vector<std::pair<double, double>> krf_distance;  // (t, metric distance)
  nlohmann::ordered_json summary;
};

/// Runs the flow and the requested analyses without touching the file system.
ScenarioResult execute_scenario(const Scenario& s);
/// Writes diagnostics.csv, summary.json, snapshots/*.pcf1 and, when present, krf_compare.csv.
void write_artifacts(const Scenario& s, const ScenarioResult& r, const std::filesystem::path& out);
/// Executes and writes a scenario; returns an exit code and reports failures on `err`
/// as one JSON object per line.
int run_scenario(const Scenario& s, const std::filesystem::path& out, std::ostream& err);

/// One entry per line: a config path (relative to the batch file) or a bundled scenario
/// name; blank lines and lines starting with '#' are skipped.
std::vector<Scenario> load_batch(const std::filesystem::path& path);
/// Runs every scenario into out/<name> with up to `threads` concurrent workers and
/// returns the largest exit code.
int run_batch(const std::vector<Scenario>& scenarios, const std::filesystem::path& out, int threads,
              std::ostream& err);

/// Machine-readable error line: {"error": kind, "message": ..., "key": ...}.
std::string error_json(const std::exception& e);

}  // namespace pcf
