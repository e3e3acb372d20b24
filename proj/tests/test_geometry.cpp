#include "doctest.h"

#include "pcf/errors.hpp"
#include "support.hpp"

using namespace pcf;
using namespace pcf::test;

TEST_CASE("grid spec validation") {
  CHECK_THROWS_AS(torus_spec(15).validate(), SpecError);
  CHECK_THROWS_AS(torus_spec(6).validate(), SpecError);
  auto s = sphere_spec(16);
  s.complex_dim = 2;
  CHECK_THROWS_AS(s.validate(), SpecError);
  CHECK_NOTHROW(torus_spec(16, 2).validate());
}

TEST_CASE("flat torus background is trivial") {
  auto bg = background(torus_spec(16));
  CHECK(bg->sbar == 0.0);
  CHECK(bg->volume == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bg->scalar.max_abs() == 0.0);
  CHECK(bg->ricci_potential.max_abs() < 1e-14);
  CHECK(bg->lambda_class == 0.0);
}

TEST_CASE("curved torus background has zero average scalar curvature") {
  auto bg = background(torus_spec(64), fourier({{{1, 0, 0, 0}, 0.05, 0.0}}));
  CHECK(std::abs(bg->sbar) <= 1e-10);
  CHECK(std::abs(integrate(*bg, bg->scalar)) <= 1e-10);
}

TEST_CASE("round sphere is Einstein with lambda = 1") {
  auto bg = background(sphere_spec(32));
  CHECK(bg->lambda_class == 1.0);
  CHECK(bg->volume == doctest::Approx(4.0 * kPi).epsilon(1e-13));
  CHECK(bg->sbar == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t p = 0; p < bg->grid->size(); ++p) {
    CHECK(bg->scalar[p] == doctest::Approx(bg->sbar).epsilon(1e-10));
    CHECK(bg->ricci[p].a11 == doctest::Approx(bg->lambda_class * bg->g[p].a11).epsilon(1e-10));
  }
  CHECK(bg->ricci_potential.max_abs() < 1e-10);
}

TEST_CASE("non-positive background throws") {
  // ddbar of a cos(2 pi x) is -2 pi^2 a cos: a = 0.1 gives 1 - 1.97 < 0.
  CHECK_THROWS_AS(background(torus_spec(16), fourier({{{1, 0, 0, 0}, 0.1, 0.0}})), PositivityLoss);
}

TEST_CASE("laplacian of a Fourier mode on the flat torus") {
  auto bg = background(torus_spec(32));
  const auto& grid = bg->grid;
  auto f = sample(grid, [&](std::size_t p) { return std::cos(2 * kPi * grid->coordinate(p, 0)); });
  auto lf = laplacian(*bg, f);
  CHECK(sup_diff(lf, -2 * kPi * kPi * f) < 1e-11);

  auto c = ScalarField::constant(grid, 3.0);
  CHECK(laplacian(*bg, c).max_abs() < 1e-12);

  // Mixed mode (m, k) = (2, 3): eigenvalue -2 pi^2 (m^2 + k^2).
  auto g2 = sample(grid, [&](std::size_t p) {
    return std::sin(2 * kPi * (2 * grid->coordinate(p, 0) + 3 * grid->coordinate(p, 1)));
  });
  CHECK(sup_diff(laplacian(*bg, g2), -2 * kPi * kPi * 13.0 * g2) < 1e-9);
}

TEST_CASE("laplacian agrees with a five-point finite-difference oracle") {
  // Complex Laplacian = (1/2)(d_xx + d_yy); 5-point stencil at N = 256.
  const int N = 256;
  auto bg = background(torus_spec(N));
  const auto& grid = bg->grid;
  auto f = sample(grid, [&](std::size_t p) {
    const double x = grid->coordinate(p, 0), y = grid->coordinate(p, 1);
    return std::cos(2 * kPi * x) + 0.3 * std::sin(2 * kPi * (x + 2 * y));
  });
  auto lf = laplacian(*bg, f);
  const double h = 1.0 / N;
  double err = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      auto at = [&](int a, int b) { return f[((a + N) % N) * N + (b + N) % N]; };
      const double fd = 0.5 * (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4 * at(i, j)) / (h * h);
      err = std::max(err, std::abs(fd - lf[i * N + j]));
    }
  // Second-order truncation: (h^2/24) max|f_xxxx + f_yyyy| is about 6e-3 here.
  CHECK(err < 1e-2);
}

TEST_CASE("assemble_state identities") {
  auto bg = background(torus_spec(32));
  auto s0 = assemble_state(bg, ScalarField(bg->grid));
  CHECK(s0.h.max_abs() == 0.0);
  CHECK(s0.margin == 1.0);

  const auto& grid = bg->grid;
  const double a = 0.3 / (2 * kPi * kPi);
  auto phi = sample(grid, [&](std::size_t p) { return a * std::cos(2 * kPi * grid->coordinate(p, 0)); });
  auto s = assemble_state(bg, phi);
  // Direct path: log of the determinant ratio, with the Hessian computed analytically.
  auto direct = sample(grid, [&](std::size_t p) {
    return std::log(1.0 - 2 * kPi * kPi * a * std::cos(2 * kPi * grid->coordinate(p, 0)));
  });
  CHECK(sup_diff(s.h, direct) < 1e-12);
  CHECK(s.margin == doctest::Approx(0.7).epsilon(1e-12));

  auto bad = 2.0 / (0.3) * phi;  // amplitude 2/(2 pi^2) pushes 1 + Delta phi below zero
  CHECK_THROWS_AS(assemble_state(bg, bad), PositivityLoss);
}

TEST_CASE("exp(h) det g = det g_phi and volume is class invariant") {
  for (int n : {1, 2}) {
    auto bg = background(torus_spec(n == 1 ? 64 : 16, n), random_potential(7, 0.6));
    auto s = assemble_state(bg, random_phi(bg, 11, 0.4));
    for (std::size_t p = 0; p < bg->grid->size(); ++p) {
      const double lhs = std::exp(s.h[p]) * det(bg->g[p], n);
      CHECK(lhs == doctest::Approx(det(s.g_phi[p], n)).epsilon(1e-12));
    }
    CHECK(std::abs(evolved_volume(s) - bg->volume) / bg->volume <= 1e-10);
    CHECK(std::abs(integrate(s, ScalarField::constant(bg->grid, 1.0)) - bg->volume) / bg->volume <= 1e-10);
  }
  auto sph = background(sphere_spec(64), random_potential(3, 0.5, 4));
  auto s = assemble_state(sph, random_phi(sph, 5, 0.4, 4));
  CHECK(std::abs(evolved_volume(s) - sph->volume) / sph->volume <= 1e-10);
}

TEST_CASE("evolved laplacian integrates to zero") {
  auto bg = background(torus_spec(64), random_potential(1, 0.5));
  auto s = assemble_state(bg, random_phi(bg, 2, 0.5));
  const auto& grid = bg->grid;
  auto f = sample(grid, [&](std::size_t p) {
    return std::exp(std::sin(2 * kPi * grid->coordinate(p, 0)) * std::cos(2 * kPi * grid->coordinate(p, 1)));
  });
  CHECK(std::abs(integrate(s, laplacian(s, f))) <= 1e-10 * f.max_abs());
  // n = 1 reduction: Delta_phi f = e^{-h} Delta_omega f.
  auto red = hadamard(s.h.map([](double v) { return std::exp(-v); }), laplacian(*bg, f));
  CHECK(sup_diff(red, laplacian(s, f)) < 1e-10 * laplacian(s, f).max_abs());
}

TEST_CASE("scalar curvature decomposition matches the direct path") {
  SUBCASE("torus n = 1") {
    auto bg = background(torus_spec(64), random_potential(21, 0.6));
    auto s = assemble_state(bg, random_phi(bg, 22, 0.5));
    CHECK(sup_diff(scalar_curvature(s), scalar_curvature(s, CurvaturePath::Direct)) <= 1e-8);
  }
  SUBCASE("torus n = 2") {
    auto bg = background(torus_spec(16, 2), random_potential(23, 0.6, 1));
    auto s = assemble_state(bg, random_phi(bg, 24, 0.5, 1));
    CHECK(sup_diff(scalar_curvature(s), scalar_curvature(s, CurvaturePath::Direct)) <= 1e-8);
  }
  SUBCASE("sphere") {
    auto bg = background(sphere_spec(64), random_potential(25, 0.6, 4));
    auto s = assemble_state(bg, random_phi(bg, 26, 0.5, 4));
    CHECK(sup_diff(scalar_curvature(s), scalar_curvature(s, CurvaturePath::Direct)) <= 1e-8);
  }
  SUBCASE("cscK base points") {
    auto flat = background(torus_spec(16));
    CHECK(scalar_curvature(assemble_state(flat, ScalarField(flat->grid))).max_abs() == 0.0);
    auto round = background(sphere_spec(16));
    auto s = scalar_curvature(assemble_state(round, ScalarField(round->grid)));
    CHECK(sup_diff(s, ScalarField::constant(round->grid, round->sbar)) < 1e-10);
  }
}

TEST_CASE("average scalar curvature is a class invariant") {
  auto bg = background(sphere_spec(64), random_potential(31, 0.5, 3));
  auto s = assemble_state(bg, random_phi(bg, 32, 0.5, 3));
  const double sbar_phi = mean(s, scalar_curvature(s));
  CHECK(std::abs(sbar_phi - bg->sbar) <= 1e-8 * std::abs(bg->sbar));
  auto tb = background(torus_spec(64), random_potential(33, 0.5));
  auto ts = assemble_state(tb, random_phi(tb, 34, 0.5));
  CHECK(std::abs(mean(ts, scalar_curvature(ts))) <= 1e-8);
}

TEST_CASE("covariant (2,0) Hessian") {
  auto bg = background(torus_spec(32));
  const auto& grid = bg->grid;
  auto s = assemble_state(bg, ScalarField(grid));
  auto c = covariant_hessian20(s, ScalarField::constant(grid, 2.0));
  for (const auto& e : c.components) CHECK(std::abs(e.s11) < 1e-12);
  // u = cos(2 pi x): d_z = (d_x - i d_y)/2, so 2 dz dz u = (1/2) u_xx = -2 pi^2 u.
  auto u = sample(grid, [&](std::size_t p) { return std::cos(2 * kPi * grid->coordinate(p, 0)); });
  auto hu = covariant_hessian20(s, u);
  for (std::size_t p = 0; p < grid->size(); ++p)
    CHECK(std::abs(hu.components[p] .s11 - cd(-2 * kPi * kPi * u[p], 0.0)) < 1e-10);

  // The axial holomorphy potential lies in the kernel on the sphere, for any metric in the class.
  auto sph = background(sphere_spec(64));
  auto st = assemble_state(sph, random_phi(sph, 41, 0.5, 4));
  auto theta = axial_holomorphy_potential(st);
  auto ht = covariant_hessian20(st, theta);
  double worst = 0.0;
  for (const auto& e : ht.components) worst = std::max(worst, std::abs(e.s11));
  CHECK(worst <= 1e-8);
  CHECK_THROWS_AS(axial_holomorphy_potential(s), UnsupportedBackend);
}
