#pragma once

// Time integration of the pseudo-Calabi flow, its mean-normalized variant and
// the Kähler-Ricci flow.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcf/functionals.hpp"

namespace pcf {

enum class Scheme { Euler, RK4 };
enum class Normalization { CZero, MeanModified };
enum class FlowKind { PseudoCalabi, KahlerRicci };
enum class RhsKind { Pseudo, MeanModified, KahlerRicci };

const char* to_string(Scheme s);
const char* to_string(Normalization n);
const char* to_string(FlowKind k);
Scheme scheme_from_string(const std::string& s);
Normalization normalization_from_string(const std::string& s);
FlowKind flow_kind_from_string(const std::string& s);

struct DtPolicy {
  enum class Kind { Fixed, Adaptive };
  Kind kind = Kind::Adaptive;
  double value = 0.4;  // dt for Fixed, safety factor for Adaptive
  bool operator==(const DtPolicy&) const = default;
};

struct FlowConfig {
  BackgroundDescriptor background;
  PotentialSpec initial;
  FlowKind flow = FlowKind::PseudoCalabi;
  Scheme scheme = Scheme::RK4;
  DtPolicy dt;
  double t_end = 1.0;
  Normalization normalization = Normalization::CZero;
  double eps_pos = kDefaultPositivityEps;
  double solver_tol = kDefaultSolverTol;
  int sample_every = 1;           // record a sample every this many steps (and at the end)
  double calabi_threshold = 0.0;  // <= 0: default rule
  bool stop_on_convergence = true;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const FlowConfig&) const = default;
};

enum class Termination { ReachedTEnd, PositivityLoss, SolverFailure, ConvergedToCscK };
const char* to_string(Termination t);

struct Trajectory {
  BackgroundPtr bg;
  std::vector<double> times;
  std::vector<ScalarField> phis;
  std::vector<DiagnosticsRecord> diagnostics;
  Termination termination = Termination::ReachedTEnd;
  std::string message;  // error text for abnormal terminations
  long steps = 0;
  double calabi_threshold = 0.0;
};

/// h - P (c(t) = 0 normalization).
ScalarField pcf_rhs(const MetricState& state, double tol = kDefaultSolverTol);
/// (h - P) minus its omega_phi average.
ScalarField mpcf_rhs(const MetricState& state, double tol = kDefaultSolverTol);
/// h + lambda phi - h_omega.  Throws ClassError if the background is not canonical.
ScalarField krf_rhs(const MetricState& state, double tol = kDefaultSolverTol);
ScalarField flow_rhs(const MetricState& state, RhsKind kind, double tol = kDefaultSolverTol);

/// One explicit step; the result is re-assembled and positivity checked.
MetricState step(const MetricState& state, double dt, Scheme scheme, RhsKind kind,
                 double tol = kDefaultSolverTol, double eps_pos = kDefaultPositivityEps);

/// sup over nodes and components of |g_a - g_b|, divided by the same norm of the background metric.
double metric_distance(const MetricState& a, const MetricState& b);

/// Adaptive step size safety * dx^2 * m / (2n), m the smaller of the margins
/// relative to the background and reference metrics.
double adaptive_dt(const MetricState& state, double safety);

/// Default convergence threshold for the Calabi energy.
double default_calabi_threshold(const BackgroundGeometry& bg);

RhsKind rhs_kind(const FlowConfig& config);

/// Initial state of a configuration (random potentials are realized against the background).
MetricState initial_state(const FlowConfig& config, const BackgroundPtr& bg);

/// Integrates the configured flow.  Step errors end the run and are recorded
/// in the termination; configuration errors are thrown.
/// `on_sample`, if set, is called for every recorded sample.
Trajectory run(const FlowConfig& config,
               const std::function<void(const Trajectory&)>& on_sample = {});

}  // namespace pcf
