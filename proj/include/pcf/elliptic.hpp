#pragma once

// Elliptic solves on the background and evolved metrics, exponential
// normalization, and the three potentials of the flow: the pseudo-term P,
// the Futaki potential f and the background Ricci potential h_omega.

#include "pcf/geometry.hpp"

namespace pcf {

inline constexpr double kDefaultSolverTol = 1e-11;
inline constexpr int kMaxSolverIterations = 500;
inline constexpr double kSolvabilityTol = 1e-8;

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;            // ||Delta u - rhs||_2 / ||rhs||_2
  double solvability_defect = 0.0;  // |int rhs dmu| / (V max(||rhs||_inf, scale))
};

struct PoissonResult {
  ScalarField u;
  SolveReport report;
};

/// Mean-zero (w.r.t. omega^[n]) solution of Delta_omega u = rhs.
/// `scale` is the magnitude of the terms rhs was computed from; it keeps the
/// solvability defect meaningful when they cancel to roundoff.
PoissonResult poisson(const BackgroundGeometry& bg, const ScalarField& rhs,
                      double tol = kDefaultSolverTol, double scale = 0.0);
/// Mean-zero (w.r.t. omega_phi^[n]) solution of Delta_phi u = rhs.
/// n = 1 reduces to the background solve of Delta_omega u = e^h rhs; n = 2 uses
/// BiCGSTAB preconditioned by the FFT inverse of the flat Laplacian.
PoissonResult poisson(const MetricState& state, const ScalarField& rhs,
                      double tol = kDefaultSolverTol, double scale = 0.0);

enum class Measure { Background, Evolved };

/// u + c with c = log(V / int e^u dmu).  Throws NumericalOverflow if the
/// integral is not a positive finite number.
ScalarField exp_normalize(const BackgroundGeometry& bg, const ScalarField& u, double target);
ScalarField exp_normalize(const MetricState& state, const ScalarField& u, Measure measure,
                          double target);

struct PotentialSolution {
  ScalarField value;
  SolveReport report;
};

/// Delta_phi P = tr_phi Ric(omega) - S-bar,  int e^P omega^n = V.
PotentialSolution solve_P_with_report(const MetricState& state, double tol = kDefaultSolverTol);
ScalarField solve_P(const MetricState& state, double tol = kDefaultSolverTol);

/// Delta_phi f = S_phi - S-bar,  int e^f omega_phi^n = V.
PotentialSolution solve_futaki_potential_with_report(const MetricState& state,
                                                     double tol = kDefaultSolverTol);
ScalarField solve_futaki_potential(const MetricState& state, double tol = kDefaultSolverTol);

/// Ric(omega) - lambda omega = ddbar h_omega,  int e^{h_omega} omega^n = V.
/// Only reads the metric and curvature fields of bg.
ScalarField ricci_potential_bg(const BackgroundGeometry& bg, double tol = kDefaultSolverTol);

/// Returns the state with P and the Futaki potential cached.
MetricState with_potentials(MetricState state, double tol = kDefaultSolverTol);

}  // namespace pcf
