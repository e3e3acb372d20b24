#include "pcf/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcf/errors.hpp"

namespace pcf {

bool DiagnosticsRecord::all_finite() const {
  for (double v : {t, dt, volume, sbar_check, k_energy, dissipation, calabi_energy, mu0, mu1, mu2,
                   i_value, sup_h, inf_h, osc_phi, max_n_plus_lap_phi, ricci_min, ricci_max, margin,
                   futaki})
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {

// Sum over nodes of w_ref * f, where f is a density with respect to the reference volume form.
template <class F>
double ref_sum(const GridPtr& grid, F&& f) {
  const auto w = grid->weights();
  double acc = 0.0;
  for (std::size_t p = 0; p < grid->size(); ++p) acc += w[p] * f(p);
  return acc;
}

// Gauss-Legendre nodes and weights on (0, 1).
std::pair<std::vector<double>, std::vector<double>> unit_gauss_legendre(int nodes) {
  GridSpec spec;
  spec.backend = Backend::SphereAxisymmetric;
  spec.resolution = nodes;
  const Grid grid(spec);
  std::vector<double> x(nodes), w(nodes);
  const auto gw = grid.weights();
  const double pi = std::acos(-1.0);
  for (int k = 0; k < nodes; ++k) {
    x[k] = 0.5 * (grid.coordinate(k) + 1.0);
    // Sphere weights carry the azimuthal factor 2 pi; the interval (0, 1) halves the rest.
    w[k] = gw[k] / (2.0 * pi) * 0.5;
  }
  return {x, w};
}

}  // namespace

double i_functional(const MetricState& state) {
  const auto& grid = state.grid();
  const int n = state.dim();
  const auto& g = state.bg->g;
  const auto& phi = state.phi;
  const auto& Phi = state.phi_hessian;
  if (n == 1)
    return ref_sum(grid, [&](std::size_t p) { return phi[p] * (g[p].a11 + 0.5 * Phi[p].a11); });
  return ref_sum(grid, [&](std::size_t p) {
    return phi[p] * (det(g[p], 2) + 0.5 * mixed(g[p], Phi[p], 2) + det(Phi[p], 2) / 3.0);
  });
}

double i_functional(const BackgroundPtr& bg, const ScalarField& phi) {
  return i_functional(assemble_state(bg, phi));
}

double k_energy(const MetricState& state) {
  const auto& bg = *state.bg;
  const auto& grid = state.grid();
  const int n = state.dim();
  const auto& phi = state.phi;
  const auto& Phi = state.phi_hessian;
  const double entropy = integrate(state, state.h);
  double ricci_term = 0.0;
  if (n == 1) {
    ricci_term = ref_sum(grid, [&](std::size_t p) { return phi[p] * bg.ricci[p].a11; });
  } else {
    ricci_term = ref_sum(grid, [&](std::size_t p) {
      return phi[p] * (mixed(bg.ricci[p], bg.g[p], 2) + 0.5 * mixed(bg.ricci[p], Phi[p], 2));
    });
  }
  return (entropy + bg.sbar * i_functional(state) - ricci_term) / bg.volume;
}

double k_energy(const BackgroundPtr& bg, const ScalarField& phi) { return k_energy(assemble_state(bg, phi)); }

double k_energy_path(const BackgroundPtr& bg, const ScalarField& phi, int nodes) {
  const auto [tau, w] = unit_gauss_legendre(nodes);
  double acc = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const auto s = assemble_state(bg, tau[k] * phi);
    const auto defect = scalar_curvature(s) + (-bg->sbar);
    acc += w[k] * integrate(s, hadamard(phi, defect));
  }
  return -acc / bg->volume;
}

double k_energy_dissipation(const MetricState& state) {
  const auto f = state.futaki_pot ? *state.futaki_pot : solve_futaki_potential(state);
  return -integrate(state, gradient_pairing(state, f, f)) / state.bg->volume;
}

double calabi_energy(const MetricState& state) {
  const auto d = scalar_curvature(state) + (-state.bg->sbar);
  return integrate(state, hadamard(d, d)) / state.bg->volume;
}

double mu(const MetricState& state, const ScalarField& v, int l) {
  const double V = state.bg->volume;
  switch (l) {
    case 0:
      return integrate(state, hadamard(v, v)) / V;
    case 1:
      return integrate(state, gradient_pairing(state, v, v)) / V;
    case 2: {
      const int n = state.dim();
      const auto h20 = covariant_hessian20(state, v);
      const auto h11 = complex_hessian(state.grid(), v);
      std::vector<double> dens(v.size());
      for (std::size_t p = 0; p < v.size(); ++p)
        dens[p] = norm2_20(state.g_phi_inv[p], h20.components[p], n) +
                  norm2_11(state.g_phi_inv[p], h11[p], n);
      return integrate(state, ScalarField(state.grid(), std::move(dens))) / V;
    }
    default:
      throw SpecError("mu is defined for l in {0, 1, 2}");
  }
}

double futaki_invariant(const MetricState& state, FutakiForm form) {
  const auto theta = axial_holomorphy_potential(state);
  if (form == FutakiForm::Curvature) {
    const auto d = scalar_curvature(state) + (-state.bg->sbar);
    return -integrate(state, hadamard(theta, d));
  }
  const auto f = state.futaki_pot ? *state.futaki_pot : solve_futaki_potential(state);
  return integrate(state, gradient_pairing(state, theta, f));
}

HermitianTensorField f_tensor(const MetricState& state) {
  const auto P = state.P ? *state.P : solve_P(state);
  return complex_hessian(state.grid(), P) + ricci_form(state) - state.bg->ricci;
}

std::array<double, 2> ricci_bounds(const MetricState& state) {
  const auto ric = ricci_form(state);
  const int n = state.dim();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t p = 0; p < ric.size(); ++p) {
    const auto ev = relative_eigenvalues(state.g_phi[p], ric[p], n);
    lo = std::min(lo, ev[0]);
    hi = std::max(hi, ev[1]);
  }
  return {lo, hi};
}

DiagnosticsRecord diagnostics(const MetricState& state, const ScalarField& velocity, double t, double dt,
                              double tol) {
  MetricState s = state;
  DiagnosticsRecord r;
  if (!s.P) {
    auto sol = solve_P_with_report(s, tol);
    s.P = sol.value;
    r.p_iterations = sol.report.iterations;
  }
  if (!s.futaki_pot) {
    auto sol = solve_futaki_potential_with_report(s, tol);
    s.futaki_pot = sol.value;
    r.f_iterations = sol.report.iterations;
  }
  const auto& bg = *s.bg;
  const int n = s.dim();
  const auto S = scalar_curvature(s);
  const auto d = S + (-bg.sbar);

  r.t = t;
  r.dt = dt;
  r.volume = evolved_volume(s);
  r.sbar_check = mean(s, S);
  r.k_energy = k_energy(s);
  r.dissipation = k_energy_dissipation(s);
  r.calabi_energy = integrate(s, hadamard(d, d)) / bg.volume;
  r.mu0 = mu(s, velocity, 0);
  r.mu1 = mu(s, velocity, 1);
  r.mu2 = mu(s, velocity, 2);
  r.i_value = i_functional(s);
  r.sup_h = s.h.max();
  r.inf_h = s.h.min();
  r.osc_phi = s.phi.max() - s.phi.min();
  double trace_max = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < s.phi.size(); ++p)
    trace_max = std::max(trace_max, trace_product(bg.g_inv[p], s.g_phi[p], n));
  r.max_n_plus_lap_phi = trace_max;
  const auto rb = ricci_bounds(s);
  r.ricci_min = rb[0];
  r.ricci_max = rb[1];
  r.margin = s.margin;
  r.futaki = s.grid()->is_torus() ? 0.0 : futaki_invariant(s, FutakiForm::Pairing);
  return r;
}

}  // namespace pcf
