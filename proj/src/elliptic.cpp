#include "pcf/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcf/errors.hpp"

namespace pcf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Metric data a Poisson solve needs: g, g^{-1} and the measure weights
// w_ref * det g (relative to the reference).
struct MetricView {
  GridPtr grid;
  std::span<const Herm> g;
  std::span<const Herm> ginv;
  std::vector<double> mweights;
  double volume = 0.0;
};

MetricView view_of(const GridPtr& grid, const HermitianTensorField& g, const HermitianTensorField& ginv,
                   const ScalarField& log_det) {
  MetricView v{grid, g.components(), ginv.components(), {}, 0.0};
  const auto w = grid->weights();
  v.mweights.resize(grid->size());
  for (std::size_t p = 0; p < grid->size(); ++p) v.mweights[p] = w[p] * std::exp(log_det[p]);
  v.volume = std::accumulate(v.mweights.begin(), v.mweights.end(), 0.0);
  return v;
}

std::vector<double> apply_laplacian(const MetricView& m, std::span<const double> u) {
  const auto hess = m.grid->complex_hessian(u);
  const int n = m.grid->dim();
  std::vector<double> out(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) out[p] = trace_product(m.ginv[p], hess[p], n);
  return out;
}

void remove_mean(const MetricView& m, std::vector<double>& f) {
  const double c = dot(m.mweights, f) / m.volume;
  for (double& v : f) v -= c;
}

// BiCGSTAB with right preconditioning on the mean-projected operator.
int bicgstab(const MetricView& m, const std::vector<double>& b, std::vector<double>& x, double tol) {
  const std::size_t N = b.size();
  const int n = m.grid->dim();
  double gscale = 0.0;
  for (std::size_t p = 0; p < N; ++p) gscale += trace(m.g[p], n) / n;
  gscale /= static_cast<double>(N);

  auto A = [&](const std::vector<double>& v) {
    auto r = apply_laplacian(m, v);
    remove_mean(m, r);
    return r;
  };
  auto Minv = [&](const std::vector<double>& v) {
    auto r = m.grid->ref_laplacian_solve(v);
    for (double& e : r) e *= gscale;
    return r;
  };

  x.assign(N, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return 0;
  std::vector<double> r = b, rhat = b, p(N, 0.0), v(N, 0.0), s(N), t(N);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 1; it <= kMaxSolverIterations; ++it) {
    const double rho_new = dot(rhat, r);
    if (rho_new == 0.0) break;
    const double beta = (rho_new / rho) * (alpha / omega);
    for (std::size_t i = 0; i < N; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    const auto phat = Minv(p);
    v = A(phat);
    alpha = rho_new / dot(rhat, v);
    for (std::size_t i = 0; i < N; ++i) s[i] = r[i] - alpha * v[i];
    if (norm2(s) <= tol * bnorm) {
      for (std::size_t i = 0; i < N; ++i) x[i] += alpha * phat[i];
      return it;
    }
    const auto shat = Minv(s);
    t = A(shat);
    omega = dot(t, s) / dot(t, t);
    for (std::size_t i = 0; i < N; ++i) {
      x[i] += alpha * phat[i] + omega * shat[i];
      r[i] = s[i] - omega * t[i];
    }
    rho = rho_new;
    if (norm2(r) <= tol * bnorm) return it;
  }
  throw SolverDivergence("BiCGSTAB did not reach the relative residual " + std::to_string(tol) +
                         " within " + std::to_string(kMaxSolverIterations) + " iterations");
}

PoissonResult solve(const MetricView& m, const ScalarField& rhs, double tol, double scale) {
  PoissonResult res{ScalarField(m.grid), {}};
  const double rmax = rhs.max_abs();
  if (rmax == 0.0) return res;
  if (!rhs.all_finite()) throw SolvabilityError("Poisson right-hand side is not finite");
  const double total = dot(m.mweights, rhs.values());
  res.report.solvability_defect = std::abs(total) / (m.volume * std::max(rmax, scale));
  if (res.report.solvability_defect > kSolvabilityTol)
    throw SolvabilityError("Poisson right-hand side does not integrate to zero (defect " +
                           std::to_string(res.report.solvability_defect) + ")");
  std::vector<double> b(rhs.values().begin(), rhs.values().end());
  remove_mean(m, b);

  std::vector<double> u;
  if (m.grid->dim() == 1) {
    // Delta u = ref_laplacian(u) / g, so ref_laplacian(u) = g rhs.
    std::vector<double> gb(b.size());
    for (std::size_t p = 0; p < b.size(); ++p) gb[p] = m.g[p].a11 * b[p];
    u = m.grid->ref_laplacian_solve(gb);
    res.report.iterations = 1;
  } else {
    res.report.iterations = bicgstab(m, b, u, tol);
  }
  remove_mean(m, u);
  auto lu = apply_laplacian(m, u);
  for (std::size_t p = 0; p < lu.size(); ++p) lu[p] -= b[p];
  res.report.residual = norm2(lu) / norm2(b);
  res.u = ScalarField(m.grid, std::move(u));
  return res;
}

ScalarField shift_to_target(const ScalarField& u, std::span<const double> mweights, double target) {
  const double top = u.max();
  double acc = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) acc += mweights[p] * std::exp(u[p] - top);
  if (!std::isfinite(acc) || !(acc > 0.0) || !std::isfinite(top))
    throw NumericalOverflow("exponential normalization integral is not a positive finite number");
  const double c = std::log(target) - top - std::log(acc);
  return u + c;
}

}  // namespace

PoissonResult poisson(const BackgroundGeometry& bg, const ScalarField& rhs, double tol, double scale) {
  return solve(view_of(bg.grid, bg.g, bg.g_inv, bg.log_det), rhs, tol, scale);
}

PoissonResult poisson(const MetricState& state, const ScalarField& rhs, double tol, double scale) {
  return solve(view_of(state.grid(), state.g_phi, state.g_phi_inv, state.log_det), rhs, tol, scale);
}

ScalarField exp_normalize(const BackgroundGeometry& bg, const ScalarField& u, double target) {
  const auto m = view_of(bg.grid, bg.g, bg.g_inv, bg.log_det);
  return shift_to_target(u, m.mweights, target);
}

ScalarField exp_normalize(const MetricState& state, const ScalarField& u, Measure measure, double target) {
  if (measure == Measure::Background) return exp_normalize(*state.bg, u, target);
  const auto m = view_of(state.grid(), state.g_phi, state.g_phi_inv, state.log_det);
  return shift_to_target(u, m.mweights, target);
}

PotentialSolution solve_P_with_report(const MetricState& state, double tol) {
  if (state.P) return {*state.P, {}};
  const auto tr = trace(state, state.bg->ricci);
  auto rhs = tr + (-state.bg->sbar);
  auto res = poisson(state, rhs, tol, tr.max_abs() + std::abs(state.bg->sbar));
  return {exp_normalize(*state.bg, res.u, state.bg->volume), res.report};
}

ScalarField solve_P(const MetricState& state, double tol) { return solve_P_with_report(state, tol).value; }

PotentialSolution solve_futaki_potential_with_report(const MetricState& state, double tol) {
  if (state.futaki_pot) return {*state.futaki_pot, {}};
  const auto S = scalar_curvature(state);
  auto rhs = S + (-state.bg->sbar);
  // S = -Delta_phi h + tr_phi Ric(omega) nearly cancels close to a cscK metric.
  const double scale = laplacian(state, state.h).max_abs() + trace(state, state.bg->ricci).max_abs() +
                       std::abs(state.bg->sbar);
  auto res = poisson(state, rhs, tol, scale);
  return {exp_normalize(state, res.u, Measure::Evolved, state.bg->volume), res.report};
}

ScalarField solve_futaki_potential(const MetricState& state, double tol) {
  return solve_futaki_potential_with_report(state, tol).value;
}

ScalarField ricci_potential_bg(const BackgroundGeometry& bg, double tol) {
  const double n = bg.grid->dim();
  auto rhs = bg.scalar + (-bg.lambda_class * n);
  auto res = poisson(bg, rhs, tol, bg.scalar.max_abs() + std::abs(bg.lambda_class * n));
  return exp_normalize(bg, res.u, bg.volume);
}

MetricState with_potentials(MetricState state, double tol) {
  if (!state.P) state.P = solve_P(state, tol);
  if (!state.futaki_pot) state.futaki_pot = solve_futaki_potential(state, tol);
  return state;
}

}  // namespace pcf
