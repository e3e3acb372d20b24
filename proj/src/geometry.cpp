#include "pcf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcf/elliptic.hpp"
#include "pcf/errors.hpp"

namespace pcf {

namespace {

std::vector<Herm> identity_frame(std::size_t n) { return std::vector<Herm>(n, Herm::scalar(1.0)); }

HermitianTensorField inverse_field(const HermitianTensorField& g) {
  const int n = g.dim();
  std::vector<Herm> out(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) out[p] = inverse(g[p], n);
  return HermitianTensorField(g.grid(), std::move(out));
}

// R = Ric(reference) - ddbar log det, reference frame.
HermitianTensorField ricci_from_log_det(const GridPtr& grid, const ScalarField& log_det) {
  auto hess = grid->complex_hessian(log_det.values());
  const double r0 = grid->reference_ricci();
  for (auto& hp : hess) {
    hp = Herm{r0, grid->dim() == 2 ? r0 : 0.0, cd{}} - hp;
  }
  return HermitianTensorField(grid, std::move(hess));
}

ScalarField contract(const HermitianTensorField& ginv, const HermitianTensorField& t) {
  const int n = ginv.dim();
  std::vector<double> out(t.size());
  for (std::size_t p = 0; p < t.size(); ++p) out[p] = trace_product(ginv[p], t[p], n);
  return ScalarField(t.grid(), std::move(out));
}

}  // namespace

BackgroundPtr build_background(const BackgroundDescriptor& desc) {
  auto grid = Grid::make(desc.grid);
  auto bg = std::make_shared<BackgroundGeometry>();
  bg->grid = grid;
  bg->descriptor = desc;
  const int n = grid->dim();
  const auto ref = identity_frame(grid->size());
  bg->descriptor.rho = realize_potential(desc.rho, grid, ref);
  bg->rho = evaluate_potential(bg->descriptor.rho, grid);

  auto hess = grid->complex_hessian(bg->rho.values());
  std::vector<Herm> g(grid->size());
  std::vector<double> logdet(grid->size());
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid->size(); ++p) {
    g[p] = ref[p] + hess[p];
    if (n == 1) g[p].a22 = 0.0;
    lowest = std::min(lowest, relative_eigenvalues(ref[p], g[p], n)[0]);
    logdet[p] = std::log(det(g[p], n));
  }
  if (!(lowest > desc.eps_pos))
    throw PositivityLoss("background metric is not positive (smallest eigenvalue " +
                         std::to_string(lowest) + ")");

  bg->g = HermitianTensorField(grid, std::move(g));
  bg->g_inv = inverse_field(bg->g);
  bg->log_det = ScalarField(grid, std::move(logdet));
  bg->ricci = ricci_from_log_det(grid, bg->log_det);
  bg->scalar = contract(bg->g_inv, bg->ricci);

  const auto density = bg->log_det.map([](double v) { return std::exp(v); });
  bg->volume = grid->integrate_ref(density.values());
  bg->sbar = grid->integrate_ref(hadamard(bg->scalar, density).values()) / bg->volume;
  if (grid->is_torus()) {
    bg->lambda_class = 0.0;
    bg->canonical = true;
  } else {
    const double lam = grid->reference_ricci();
    if (std::abs(lam - std::round(lam)) > 1e-10)
      throw ClassError("reference Ricci curvature is not an integer multiple of the metric");
    bg->lambda_class = std::round(lam);
    // Any potential keeps the round class, which is proportional to c_1.
    bg->canonical = true;
  }
  bg->ricci_potential = ricci_potential_bg(*bg);
  return bg;
}

MetricState assemble_state(const BackgroundPtr& bg, const ScalarField& phi, double eps_pos) {
  const auto& grid = bg->grid;
  if (phi.grid() != grid && !(phi.grid() && phi.grid()->spec() == grid->spec()))
    throw SpecError("potential does not live on the background grid");
  if (!phi.all_finite()) throw SpecError("potential has non-finite values");
  const int n = grid->dim();
  MetricState s;
  s.bg = bg;
  s.phi = ScalarField(grid, std::vector<double>(phi.values().begin(), phi.values().end()));
  auto hess = grid->complex_hessian(phi.values());
  if (n == 1)
    for (auto& hp : hess) hp.a22 = 0.0;
  std::vector<Herm> gphi(grid->size());
  std::vector<double> h(grid->size()), logdet(grid->size());
  double margin = std::numeric_limits<double>::infinity();
  double ref_margin = margin;
  const Herm ref = Herm::scalar(1.0);
  for (std::size_t p = 0; p < grid->size(); ++p) {
    const Herm& g = bg->g[p];
    gphi[p] = g + hess[p];
    if (n == 1) {
      // g_phi = g (1 + Delta_omega phi), h = log(1 + Delta_omega phi)
      const double ratio = 1.0 + hess[p].a11 / g.a11;
      margin = std::min(margin, ratio);
      h[p] = ratio > 0.0 ? std::log(ratio) : std::numeric_limits<double>::quiet_NaN();
      ref_margin = std::min(ref_margin, gphi[p].a11);
    } else {
      margin = std::min(margin, relative_eigenvalues(g, gphi[p], 2)[0]);
      ref_margin = std::min(ref_margin, relative_eigenvalues(ref, gphi[p], 2)[0]);
      const double d = det(gphi[p], 2);
      h[p] = d > 0.0 ? std::log(d / det(g, 2)) : std::numeric_limits<double>::quiet_NaN();
    }
    logdet[p] = bg->log_det[p] + h[p];
  }
  if (!(margin > eps_pos))
    throw PositivityLoss("metric left the Kähler cone (margin " + std::to_string(margin) + ")");
  s.phi_hessian = HermitianTensorField(grid, std::move(hess));
  s.g_phi = HermitianTensorField(grid, std::move(gphi));
  s.g_phi_inv = inverse_field(s.g_phi);
  s.h = ScalarField(grid, std::move(h));
  s.log_det = ScalarField(grid, std::move(logdet));
  s.margin = margin;
  s.ref_margin = ref_margin;
  return s;
}

ScalarField laplacian(const BackgroundGeometry& bg, const ScalarField& f) {
  const auto hess = bg.grid->complex_hessian(f.values());
  const int n = bg.grid->dim();
  std::vector<double> out(hess.size());
  for (std::size_t p = 0; p < hess.size(); ++p) out[p] = trace_product(bg.g_inv[p], hess[p], n);
  return ScalarField(bg.grid, std::move(out));
}

ScalarField laplacian(const MetricState& state, const ScalarField& f) {
  const auto& grid = state.grid();
  const auto hess = grid->complex_hessian(f.values());
  const int n = grid->dim();
  std::vector<double> out(hess.size());
  for (std::size_t p = 0; p < hess.size(); ++p)
    out[p] = trace_product(state.g_phi_inv[p], hess[p], n);
  return ScalarField(grid, std::move(out));
}

ScalarField trace(const MetricState& state, const HermitianTensorField& t) {
  return contract(state.g_phi_inv, t);
}

HermitianTensorField ricci_form(const MetricState& state) {
  return ricci_from_log_det(state.grid(), state.log_det);
}

ScalarField scalar_curvature(const MetricState& state, CurvaturePath path) {
  if (path == CurvaturePath::Direct) return contract(state.g_phi_inv, ricci_form(state));
  auto s = trace(state, state.bg->ricci);
  s -= laplacian(state, state.h);
  return s;
}

double integrate(const BackgroundGeometry& bg, const ScalarField& f) {
  const auto w = bg.grid->weights();
  double acc = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) acc += w[p] * std::exp(bg.log_det[p]) * f[p];
  return acc;
}

double integrate(const MetricState& state, const ScalarField& f) {
  const auto w = state.grid()->weights();
  double acc = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) acc += w[p] * std::exp(state.log_det[p]) * f[p];
  return acc;
}

double mean(const BackgroundGeometry& bg, const ScalarField& f) { return integrate(bg, f) / bg.volume; }

double mean(const MetricState& state, const ScalarField& f) {
  return integrate(state, f) / state.bg->volume;
}

double evolved_volume(const MetricState& state) {
  return integrate(*state.bg, state.h.map([](double v) { return std::exp(v); }));
}

std::vector<Covector> gradient(const GridPtr& grid, const ScalarField& f) {
  return grid->gradient(f.values());
}

ScalarField gradient_pairing(const MetricState& state, const ScalarField& f1, const ScalarField& f2) {
  const auto& grid = state.grid();
  const auto a = grid->gradient(f1.values());
  const auto b = &f1 == &f2 ? a : grid->gradient(f2.values());
  const int n = grid->dim();
  std::vector<double> out(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) out[p] = pair(state.g_phi_inv[p], a[p], b[p], n);
  return ScalarField(grid, std::move(out));
}

HermitianTensorField complex_hessian(const GridPtr& grid, const ScalarField& u) {
  auto hess = grid->complex_hessian(u.values());
  if (grid->dim() == 1)
    for (auto& hp : hess) hp.a22 = 0.0;
  return HermitianTensorField(grid, std::move(hess));
}

SymTensorField covariant_hessian20(const MetricState& state, const ScalarField& u) {
  const auto& grid = state.grid();
  const std::size_t N = grid->size();
  SymTensorField out{grid, std::vector<Sym>(N)};
  if (!grid->is_torus()) {
    // In the round frame: u_{;11} = 1/2 (1 - x^2) (u_xx - (log det g_phi)_x u_x).
    const auto ux = grid->du(u.values());
    const auto uxx = grid->duu(u.values());
    const auto sx = grid->du(state.log_det.values());
    for (std::size_t p = 0; p < N; ++p) {
      const double x = grid->coordinate(p);
      out.components[p].s11 = 0.5 * (1.0 - x * x) * (uxx[p] - sx[p] * ux[p]);
    }
    return out;
  }
  const int n = grid->dim();
  // u_{;ij} = 2 [dz_i dz_j u - g^{k lbar} (dz_i g_{j lbar}) dz_k u]
  std::vector<cd> ucomplex(u.values().begin(), u.values().end());
  std::vector<std::vector<cd>> du(n);
  for (int k = 0; k < n; ++k) du[k] = grid->dz(ucomplex, k);
  // g components as complex arrays: G[j][l] = g_{j lbar}
  std::vector<cd> gc[2][2];
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) gc[j][l].resize(N);
  for (std::size_t p = 0; p < N; ++p) {
    const Herm& g = state.g_phi[p];
    gc[0][0][p] = g.a11;
    if (n == 2) {
      gc[0][1][p] = g.a12;
      gc[1][0][p] = std::conj(g.a12);
      gc[1][1][p] = g.a22;
    }
  }
  // dg[i][j][l] = dz_i g_{j lbar}
  std::vector<cd> dg[2][2][2];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) dg[i][j][l] = grid->dz(gc[j][l], i);
  auto entry = [&](int i, int j) {
    auto second = grid->dzdz(u.values(), i, j);
    for (std::size_t p = 0; p < N; ++p) {
      const Herm& w = state.g_phi_inv[p];
      const cd W[2][2] = {{w.a11, w.a12}, {std::conj(w.a12), w.a22}};
      cd gamma{};
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) gamma += W[l][k] * dg[i][j][l][p] * du[k][p];
      second[p] = 2.0 * (second[p] - gamma);
    }
    return second;
  };
  const auto u11 = entry(0, 0);
  for (std::size_t p = 0; p < N; ++p) out.components[p].s11 = u11[p];
  if (n == 2) {
    const auto u12 = entry(0, 1);
    const auto u22 = entry(1, 1);
    for (std::size_t p = 0; p < N; ++p) {
      out.components[p].s12 = u12[p];
      out.components[p].s22 = u22[p];
    }
  }
  return out;
}

ScalarField axial_holomorphy_potential(const MetricState& state) {
  const auto& grid = state.grid();
  if (grid->is_torus())
    throw UnsupportedBackend("the torus carries no holomorphy potentials (translations are not gradients)");
  // theta_X(psi) = x + X(psi), X(psi) = <d x, d psi>_round = 1/2 (1 - x^2) psi_x
  const auto psi = state.bg->rho + state.phi;
  const auto dpsi = grid->du(psi.values());
  std::vector<double> out(grid->size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double x = grid->coordinate(p);
    out[p] = x + 0.5 * (1.0 - x * x) * dpsi[p];
  }
  return ScalarField(grid, std::move(out));
}

}  // namespace pcf
