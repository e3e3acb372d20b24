#pragma once

// Energy functionals and monitored diagnostics of a metric state.

#include <array>
#include <string_view>

#include "pcf/elliptic.hpp"

namespace pcf {

/// One time sample of every monitored quantity.  Column order of the CSV
/// output follows kDiagnosticsColumns.
struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  double volume = 0.0;
  double sbar_check = 0.0;
  double k_energy = 0.0;
  double dissipation = 0.0;
  double calabi_energy = 0.0;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double i_value = 0.0;
  double sup_h = 0.0;
  double inf_h = 0.0;
  double osc_phi = 0.0;
  double max_n_plus_lap_phi = 0.0;
  double ricci_min = 0.0;
  double ricci_max = 0.0;
  double margin = 0.0;
  double futaki = 0.0;
  int p_iterations = 0;
  int f_iterations = 0;

  bool all_finite() const;
};

inline constexpr std::array<std::string_view, 21> kDiagnosticsColumns = {
    "t",           "dt",        "volume",        "sbar_check", "k_energy",  "dissipation",
    "calabi_energy", "mu0",     "mu1",           "mu2",        "i_value",   "sup_h",
    "inf_h",       "osc_phi",   "max_n_plus_lap_phi", "ricci_min", "ricci_max", "margin",
    "futaki",      "p_iterations", "f_iterations"};

/// I(phi) = sum_p 1/((p+1)!(n-p)!) int phi omega^{n-p} ^ (ddbar phi)^p.
double i_functional(const MetricState& state);
double i_functional(const BackgroundPtr& bg, const ScalarField& phi);

/// Closed-form K-energy nu_omega(phi).
double k_energy(const MetricState& state);
double k_energy(const BackgroundPtr& bg, const ScalarField& phi);

/// Path-integral K-energy -(1/V) int_0^1 int phidot (S - S-bar) omega_phi(tau)^[n] dtau along
/// tau -> tau phi (Gauss-Legendre in tau).  Cross-check for the closed form.
double k_energy_path(const BackgroundPtr& bg, const ScalarField& phi, int nodes = 64);

/// -(1/V) int |grad f|^2_{g_phi} omega_phi^[n] with f the Futaki potential.
double k_energy_dissipation(const MetricState& state);

/// (1/V) int (S_phi - S-bar)^2 omega_phi^[n].
double calabi_energy(const MetricState& state);

/// mu_l = (1/V) int |nabla^l v|^2 omega_phi^[n], l in {0,1,2}.  For l = 2 the
/// squared norms of the (2,0) and (1,1) Hessians are added.
double mu(const MetricState& state, const ScalarField& v, int l);

enum class FutakiForm { Pairing, Curvature };

/// Futaki invariant of the axial field on the sphere.
///   Pairing:   int g_phi^{i jbar} (theta_X)_i f_jbar omega_phi^[n]
///   Curvature: -int theta_X (S - S-bar) omega_phi^[n]
/// Throws UnsupportedBackend on the torus.
double futaki_invariant(const MetricState& state, FutakiForm form = FutakiForm::Pairing);

/// f-tensor P_{i jbar} + R_{i jbar}(g_phi) - R_{i jbar}(omega).
HermitianTensorField f_tensor(const MetricState& state);

/// Smallest and largest eigenvalue of Ric(g_phi) relative to g_phi over all nodes.
std::array<double, 2> ricci_bounds(const MetricState& state);

/// All diagnostics of a state; `velocity` is the flow right-hand side used for mu_l.
DiagnosticsRecord diagnostics(const MetricState& state, const ScalarField& velocity, double t,
                              double dt, double tol = kDefaultSolverTol);

}  // namespace pcf
