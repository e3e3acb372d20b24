#include "doctest.h"

#include <algorithm>

#include "pcf/errors.hpp"
#include "pcf/flow.hpp"
#include "support.hpp"

using namespace pcf;
using namespace pcf::test;

namespace {

FlowConfig torus_config(int N, std::uint64_t bg_seed, std::uint64_t phi_seed, double t_end) {
  FlowConfig c;
  c.background.grid = torus_spec(N);
  c.background.rho = random_potential(bg_seed, 0.5);
  c.initial = random_potential(phi_seed, 0.5);
  c.t_end = t_end;
  return c;
}

}  // namespace

TEST_CASE("right-hand sides at fixed points") {
  auto flat = background(torus_spec(16));
  auto s = assemble_state(flat, ScalarField(flat->grid));
  CHECK(pcf_rhs(s).max_abs() == 0.0);
  CHECK(mpcf_rhs(s).max_abs() == 0.0);
  CHECK(krf_rhs(s).max_abs() == 0.0);
  auto round = background(sphere_spec(32));
  auto r = assemble_state(round, ScalarField(round->grid));
  CHECK(krf_rhs(r).max_abs() < 1e-12);
  CHECK(pcf_rhs(r).max_abs() < 1e-12);
}

TEST_CASE("right-hand side identities on the torus") {
  auto bg = background(torus_spec(64), random_potential(1, 0.5));
  auto s = assemble_state(bg, random_phi(bg, 2, 0.5));
  auto v = pcf_rhs(s);
  CHECK(sup_diff(v, s.h - bg->ricci_potential) <= 1e-8);
  auto P = solve_P(s);
  auto e = (v + P).map([](double x) { return std::exp(x); });
  CHECK(integrate(*bg, e) == doctest::Approx(bg->volume).epsilon(1e-12));

  auto m = mpcf_rhs(s);
  CHECK(std::abs(integrate(s, m)) <= 1e-12 * bg->volume);
  CHECK(oscillation_from_mean(m - v) <= 1e-12);

  auto flat = background(torus_spec(32));
  auto fs = assemble_state(flat, random_phi(flat, 3, 0.5));
  CHECK(sup_diff(krf_rhs(fs), fs.h) < 1e-14);
}

TEST_CASE("Kähler-Ricci and pseudo-Calabi velocities differ by a constant") {
  auto sb = background(sphere_spec(64), random_potential(4, 0.6, 4));
  auto ss = assemble_state(sb, random_phi(sb, 5, 0.5, 4));
  CHECK(oscillation_from_mean(krf_rhs(ss) - pcf_rhs(ss)) <= 1e-8);
  auto tb = background(torus_spec(64), random_potential(6, 0.6));
  auto ts = assemble_state(tb, random_phi(tb, 7, 0.5));
  CHECK(oscillation_from_mean(krf_rhs(ts) - pcf_rhs(ts)) <= 1e-8);
}

TEST_CASE("non-canonical background is rejected by the Kähler-Ricci flow") {
  auto bg = background(torus_spec(16));
  auto copy = std::make_shared<BackgroundGeometry>(*bg);
  copy->canonical = false;
  auto s = assemble_state(copy, ScalarField(copy->grid));
  CHECK_THROWS_AS(krf_rhs(s), ClassError);
}

TEST_CASE("step keeps a fixed point bitwise") {
  auto flat = background(torus_spec(16));
  auto s = assemble_state(flat, ScalarField(flat->grid));
  auto next = step(s, 1e-3, Scheme::Euler, RhsKind::Pseudo);
  CHECK(std::equal(next.phi.values().begin(), next.phi.values().end(), s.phi.values().begin()));
  CHECK_THROWS_AS(step(s, 0.0, Scheme::Euler, RhsKind::Pseudo), SpecError);
}

TEST_CASE("integrator self-convergence order") {
  auto bg = background(torus_spec(16), random_potential(8, 0.6));
  auto s0 = assemble_state(bg, random_phi(bg, 9, 0.6));
  const double T = 0.01;
  auto integrate_to = [&](Scheme scheme, int steps) {
    auto s = s0;
    for (int k = 0; k < steps; ++k) s = step(s, T / steps, scheme, RhsKind::Pseudo);
    return s.phi;
  };
  for (auto [scheme, expect] : {std::pair{Scheme::RK4, 3.8}, std::pair{Scheme::Euler, 0.9}}) {
    const int base = scheme == Scheme::RK4 ? 16 : 32;
    auto ref = integrate_to(scheme, base * 16);
    const double e1 = sup_diff(integrate_to(scheme, base), ref);
    const double e2 = sup_diff(integrate_to(scheme, 2 * base), ref);
    const double order = std::log2(e1 / e2);
    CHECK(order >= expect);
  }
}

TEST_CASE("flat fixed point run is constant") {
  FlowConfig c;
  c.background.grid = torus_spec(16);
  c.t_end = 0.01;
  c.sample_every = 5;
  auto tr = run(c);
  CHECK(tr.termination == Termination::ConvergedToCscK);
  CHECK(tr.diagnostics.size() == 1);
  c.stop_on_convergence = false;
  tr = run(c);
  CHECK(tr.termination == Termination::ReachedTEnd);
  CHECK(tr.times.back() == 0.01);
  for (const auto& d : tr.diagnostics) {
    CHECK(d.k_energy == 0.0);
    CHECK(d.calabi_energy <= 1e-20);
  }
  for (const auto& phi : tr.phis) CHECK(phi.max_abs() == 0.0);
  for (std::size_t k = 1; k < tr.times.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);
}

TEST_CASE("run reports positivity loss for large initial data") {
  FlowConfig c;
  c.background.grid = torus_spec(16);
  c.initial.kind = PotentialSpec::Kind::Fourier;
  c.initial.terms = {{{1, 0, 0, 0}, 0.2, 0.0}};
  c.t_end = 0.01;
  auto tr = run(c);
  CHECK(tr.termination == Termination::PositivityLoss);
  CHECK(!tr.message.empty());
}

TEST_CASE("K-energy decreases along a short torus run") {
  auto c = torus_config(32, 11, 12, 0.02);
  c.sample_every = 10;
  auto tr = run(c);
  REQUIRE(tr.termination == Termination::ReachedTEnd);
  REQUIRE(tr.diagnostics.size() > 3);
  for (std::size_t k = 1; k < tr.diagnostics.size(); ++k) {
    CHECK(tr.diagnostics[k].k_energy <= tr.diagnostics[k - 1].k_energy + 1e-10);
    CHECK(tr.diagnostics[k].volume == doctest::Approx(tr.bg->volume).epsilon(1e-12));
  }
}

TEST_CASE("mean-modified run conserves I and differs from the c = 0 run by a constant") {
  auto c = torus_config(16, 13, 14, 0.05);
  c.sample_every = 20;
  c.dt = {DtPolicy::Kind::Fixed, 2e-4};
  auto a = run(c);
  c.normalization = Normalization::MeanModified;
  auto b = run(c);
  REQUIRE(a.times.size() == b.times.size());
  const double i0 = b.diagnostics.front().i_value;
  for (std::size_t k = 0; k < b.times.size(); ++k) {
    CHECK(std::abs(b.diagnostics[k].i_value - i0) <= 1e-8 * std::max(1.0, std::abs(i0)));
    CHECK(oscillation_from_mean(b.phis[k] - a.phis[k]) <= 1e-8);
  }
}

TEST_CASE("config validation") {
  FlowConfig c;
  c.t_end = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = FlowConfig{};
  c.dt = {DtPolicy::Kind::Adaptive, 1.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = FlowConfig{};
  c.background.grid.resolution = 15;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "grid");
  }
}
