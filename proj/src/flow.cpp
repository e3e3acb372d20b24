#include "pcf/flow.hpp"

#include <algorithm>
#include <cmath>

#include "pcf/errors.hpp"

namespace pcf {

const char* to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "rk4"; }

const char* to_string(Normalization n) { return n == Normalization::CZero ? "czero" : "mean-modified"; }

const char* to_string(FlowKind k) { return k == FlowKind::PseudoCalabi ? "pseudo-calabi" : "kahler-ricci"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "euler") return Scheme::Euler;
  if (s == "rk4") return Scheme::RK4;
  throw SpecError("unknown scheme '" + s + "' (expected euler or rk4)");
}

Normalization normalization_from_string(const std::string& s) {
  if (s == "czero") return Normalization::CZero;
  if (s == "mean-modified") return Normalization::MeanModified;
  throw SpecError("unknown normalization '" + s + "' (expected czero or mean-modified)");
}

FlowKind flow_kind_from_string(const std::string& s) {
  if (s == "pseudo-calabi") return FlowKind::PseudoCalabi;
  if (s == "kahler-ricci") return FlowKind::KahlerRicci;
  throw SpecError("unknown flow '" + s + "' (expected pseudo-calabi or kahler-ricci)");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::ReachedTEnd: return "ReachedTEnd";
    case Termination::PositivityLoss: return "PositivityLoss";
    case Termination::SolverFailure: return "SolverFailure";
    case Termination::ConvergedToCscK: return "ConvergedToCscK";
  }
  return "ReachedTEnd";
}

void FlowConfig::validate() const {
  try {
    background.grid.validate();
  } catch (const SpecError& e) {
    throw ConfigError("grid", e.what());
  }
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("flow.t_end", "must be positive");
  if (!(dt.value > 0.0) || !std::isfinite(dt.value))
    throw ConfigError(dt.kind == DtPolicy::Kind::Fixed ? "flow.dt" : "flow.safety", "must be positive");
  if (dt.kind == DtPolicy::Kind::Adaptive && dt.value > 1.0)
    throw ConfigError("flow.safety", "must lie in (0, 1]");
  if (!(eps_pos > 0.0)) throw ConfigError("flow.eps_pos", "must be positive");
  if (!(solver_tol > 0.0) || solver_tol >= 1.0) throw ConfigError("flow.solver_tol", "must lie in (0, 1)");
  if (sample_every < 1) throw ConfigError("output.sample_every", "must be at least 1");
  if (flow == FlowKind::KahlerRicci && normalization != Normalization::CZero)
    throw ConfigError("flow.normalization", "the Kähler-Ricci flow uses the czero normalization");
}

ScalarField pcf_rhs(const MetricState& state, double tol) {
  const auto P = state.P ? *state.P : solve_P(state, tol);
  return state.h - P;
}

ScalarField mpcf_rhs(const MetricState& state, double tol) {
  auto v = pcf_rhs(state, tol);
  return v + (-mean(state, v));
}

ScalarField krf_rhs(const MetricState& state, double tol) {
  (void)tol;
  const auto& bg = *state.bg;
  if (!bg.canonical) throw ClassError("the Kähler-Ricci flow needs a canonical class");
  return state.h + bg.lambda_class * state.phi - bg.ricci_potential;
}

ScalarField flow_rhs(const MetricState& state, RhsKind kind, double tol) {
  switch (kind) {
    case RhsKind::Pseudo: return pcf_rhs(state, tol);
    case RhsKind::MeanModified: return mpcf_rhs(state, tol);
    case RhsKind::KahlerRicci: return krf_rhs(state, tol);
  }
  return pcf_rhs(state, tol);
}

namespace {

MetricState advance(const MetricState& state, const ScalarField& k1, double dt, Scheme scheme, RhsKind kind,
                    double tol, double eps_pos) {
  const auto& bg = state.bg;
  if (scheme == Scheme::Euler) return assemble_state(bg, axpy(state.phi, dt, k1), eps_pos);
  const auto s2 = assemble_state(bg, axpy(state.phi, 0.5 * dt, k1), eps_pos);
  const auto k2 = flow_rhs(s2, kind, tol);
  const auto s3 = assemble_state(bg, axpy(state.phi, 0.5 * dt, k2), eps_pos);
  const auto k3 = flow_rhs(s3, kind, tol);
  const auto s4 = assemble_state(bg, axpy(state.phi, dt, k3), eps_pos);
  const auto k4 = flow_rhs(s4, kind, tol);
  std::vector<double> next(state.phi.size());
  for (std::size_t p = 0; p < next.size(); ++p)
    next[p] = state.phi[p] + dt / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
  return assemble_state(bg, ScalarField(state.grid(), std::move(next)), eps_pos);
}

}  // namespace

MetricState step(const MetricState& state, double dt, Scheme scheme, RhsKind kind, double tol, double eps_pos) {
  if (!(dt > 0.0)) throw SpecError("time step must be positive");
  return advance(state, flow_rhs(state, kind, tol), dt, scheme, kind, tol, eps_pos);
}

double metric_distance(const MetricState& a, const MetricState& b) {
  if (!(a.grid()->spec() == b.grid()->spec())) throw SpecError("metric distance needs states on the same grid");
  auto sup = [](const Herm& x) { return std::max({std::abs(x.a11), std::abs(x.a22), std::abs(x.a12)}); };
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < a.g_phi.size(); ++p) {
    const Herm d{a.g_phi[p].a11 - b.g_phi[p].a11, a.g_phi[p].a22 - b.g_phi[p].a22, a.g_phi[p].a12 - b.g_phi[p].a12};
    num = std::max(num, sup(d));
    den = std::max(den, sup(a.bg->g[p]));
  }
  return num / den;
}

double adaptive_dt(const MetricState& state, double safety) {
  const double dx = state.grid()->spacing();
  const double m = std::min(state.margin, state.ref_margin);
  return safety * dx * dx * m / (2.0 * state.dim());
}

double default_calabi_threshold(const BackgroundGeometry& bg) {
  if (bg.grid->is_torus()) return 1e-12;
  return 1e-10 * bg.sbar * bg.sbar * bg.volume;
}

RhsKind rhs_kind(const FlowConfig& config) {
  if (config.flow == FlowKind::KahlerRicci) return RhsKind::KahlerRicci;
  return config.normalization == Normalization::CZero ? RhsKind::Pseudo : RhsKind::MeanModified;
}

MetricState initial_state(const FlowConfig& config, const BackgroundPtr& bg) {
  const auto spec = realize_potential(config.initial, bg->grid, bg->g.components());
  return assemble_state(bg, evaluate_potential(spec, bg->grid), config.eps_pos);
}

Trajectory run(const FlowConfig& config, const std::function<void(const Trajectory&)>& on_sample) {
  config.validate();
  Trajectory traj;
  traj.bg = build_background(config.background);
  const auto& bg = *traj.bg;
  const auto kind = rhs_kind(config);
  if (kind == RhsKind::KahlerRicci && !bg.canonical)
    throw ClassError("the Kähler-Ricci flow needs a canonical class");
  traj.calabi_threshold = config.calabi_threshold > 0.0 ? config.calabi_threshold : default_calabi_threshold(bg);

  MetricState state;
  double t = 0.0, last_dt = 0.0;
  const double t_tiny = 1e-12 * config.t_end;
  try {
    state = initial_state(config, traj.bg);
    while (true) {
      // The P solve is shared by the flow velocity and the diagnostics.
      auto sol = solve_P_with_report(state, config.solver_tol);
      state.P = sol.value;
      const auto k1 = flow_rhs(state, kind, config.solver_tol);
      const bool at_end = config.t_end - t <= t_tiny;
      if (at_end || traj.steps % config.sample_every == 0) {
        auto rec = diagnostics(state, k1, t, last_dt, config.solver_tol);
        rec.p_iterations = sol.report.iterations;
        if (!rec.all_finite()) throw NumericalOverflow("non-finite diagnostics at t = " + std::to_string(t));
        traj.times.push_back(t);
        traj.phis.push_back(state.phi);
        traj.diagnostics.push_back(rec);
        if (on_sample) on_sample(traj);
        if (config.stop_on_convergence && rec.calabi_energy < traj.calabi_threshold) {
          traj.termination = Termination::ConvergedToCscK;
          break;
        }
      }
      if (at_end) {
        traj.termination = Termination::ReachedTEnd;
        break;
      }
      double dt = config.dt.kind == DtPolicy::Kind::Fixed ? config.dt.value : adaptive_dt(state, config.dt.value);
      if (t + dt > config.t_end - t_tiny) dt = config.t_end - t;
      state = advance(state, k1, dt, config.scheme, kind, config.solver_tol, config.eps_pos);
      t = (config.t_end - (t + dt) <= t_tiny) ? config.t_end : t + dt;
      last_dt = dt;
      ++traj.steps;
    }
  } catch (const PositivityLoss& e) {
    traj.termination = Termination::PositivityLoss;
    traj.message = e.what();
  } catch (const SolverDivergence& e) {
    traj.termination = Termination::SolverFailure;
    traj.message = e.what();
  } catch (const SolvabilityError& e) {
    traj.termination = Termination::SolverFailure;
    traj.message = e.what();
  } catch (const NumericalOverflow& e) {
    traj.termination = Termination::SolverFailure;
    traj.message = e.what();
  }
  return traj;
}

}  // namespace pcf
