#pragma once

// Background Kähler geometry, evolved metric states and the differential and
// integral operators built on them.

#include <memory>
#include <optional>

#include "pcf/fields.hpp"
#include "pcf/potential.hpp"

namespace pcf {

inline constexpr double kDefaultPositivityEps = 1e-8;

/// Grid plus background potential rho: omega = omega_ref + ddbar rho.
struct BackgroundDescriptor {
  GridSpec grid;
  PotentialSpec rho;
  double eps_pos = kDefaultPositivityEps;
  bool operator==(const BackgroundDescriptor&) const = default;
};

struct BackgroundGeometry {
  GridPtr grid;
  BackgroundDescriptor descriptor;  // with rho realized (never Random)
  ScalarField rho;
  HermitianTensorField g;       // g_{i jbar}, reference frame
  HermitianTensorField g_inv;
  ScalarField log_det;          // log det g relative to the reference metric
  HermitianTensorField ricci;   // R_{i jbar}(omega)
  ScalarField scalar;           // S_omega
  double sbar = 0.0;
  double volume = 0.0;
  double lambda_class = 0.0;    // sign of c_1 in units of the class
  bool canonical = false;       // lambda [omega] proportional to c_1
  ScalarField ricci_potential;  // h_omega
};

using BackgroundPtr = std::shared_ptr<const BackgroundGeometry>;

/// Builds the background geometry (curvature, S-bar, volume, Ricci potential).
/// Throws PositivityLoss when g is not positive definite at every node.
BackgroundPtr build_background(const BackgroundDescriptor& desc);

/// A Kähler potential phi with the fields derived from it.
struct MetricState {
  BackgroundPtr bg;
  ScalarField phi;
  HermitianTensorField phi_hessian;  // phi_{i jbar}
  HermitianTensorField g_phi;        // g + phi_{i jbar}
  HermitianTensorField g_phi_inv;
  ScalarField log_det;               // log det g_phi relative to the reference metric
  ScalarField h;                     // log(omega_phi^n / omega^n)
  double margin = 0.0;               // min smallest eigenvalue of g^{-1} g_phi
  double ref_margin = 0.0;           // same, relative to the reference metric
  std::optional<ScalarField> P;
  std::optional<ScalarField> futaki_pot;

  int dim() const { return bg->grid->dim(); }
  const GridPtr& grid() const { return bg->grid; }
};

/// Assembles g_phi, h and the margin.  Throws PositivityLoss if margin <= eps_pos.
MetricState assemble_state(const BackgroundPtr& bg, const ScalarField& phi,
                           double eps_pos = kDefaultPositivityEps);

/// Background Laplacian Delta_omega f.
ScalarField laplacian(const BackgroundGeometry& bg, const ScalarField& f);
/// Evolved Laplacian Delta_phi f.
ScalarField laplacian(const MetricState& state, const ScalarField& f);

/// tr_phi T = g_phi^{i jbar} T_{i jbar}.
ScalarField trace(const MetricState& state, const HermitianTensorField& t);

enum class CurvaturePath { Decomposition, Direct };

/// Scalar curvature of g_phi.  Decomposition: -Delta_phi h + tr_phi Ric(omega);
/// Direct: contraction of R(g_phi) = -ddbar log det g_phi.
ScalarField scalar_curvature(const MetricState& state,
                             CurvaturePath path = CurvaturePath::Decomposition);
/// Ricci form R_{i jbar}(g_phi) = -ddbar log det g_phi.
HermitianTensorField ricci_form(const MetricState& state);

/// Integral against omega^[n].
double integrate(const BackgroundGeometry& bg, const ScalarField& f);
/// Integral against omega_phi^[n].
double integrate(const MetricState& state, const ScalarField& f);
/// Volume averages.
double mean(const BackgroundGeometry& bg, const ScalarField& f);
double mean(const MetricState& state, const ScalarField& f);
/// Volume of omega_phi computed from its own density, e^h omega^[n].
double evolved_volume(const MetricState& state);

/// (1,0) derivatives f_i (reference frame).
std::vector<Covector> gradient(const GridPtr& grid, const ScalarField& f);
/// Pointwise g_phi^{i jbar} (f1)_i (f2)_jbar (real part).
ScalarField gradient_pairing(const MetricState& state, const ScalarField& f1, const ScalarField& f2);

/// Covariant (2,0) Hessian u_{;ij} = d_i d_j u - Gamma^k_{ij} d_k u of g_phi.
SymTensorField covariant_hessian20(const MetricState& state, const ScalarField& u);
/// Complex Hessian u_{i jbar} (metric independent).
HermitianTensorField complex_hessian(const GridPtr& grid, const ScalarField& u);

/// Axial holomorphy potential theta_X of omega_phi on the sphere:
/// u + X(rho + phi) with X the gradient field of u = cos(theta) for the round metric.
ScalarField axial_holomorphy_potential(const MetricState& state);

}  // namespace pcf
