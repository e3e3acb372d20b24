#pragma once

// Shared fixtures for the unit tests.

#include <cmath>
#include <numbers>

#include "pcf/geometry.hpp"

namespace pcf::test {

inline constexpr double kPi = std::numbers::pi;

inline GridSpec torus_spec(int N, int n = 1) {
  GridSpec s;
  s.backend = Backend::TorusPeriodic;
  s.complex_dim = n;
  s.resolution = N;
  return s;
}

inline GridSpec sphere_spec(int N) {
  GridSpec s;
  s.backend = Backend::SphereAxisymmetric;
  s.resolution = N;
  return s;
}

inline PotentialSpec random_potential(std::uint64_t seed, double margin, int max_mode = 2) {
  PotentialSpec p;
  p.kind = PotentialSpec::Kind::Random;
  p.seed = seed;
  p.target_margin = margin;
  p.max_mode = max_mode;
  return p;
}

inline PotentialSpec fourier(std::initializer_list<FourierTerm> terms) {
  PotentialSpec p;
  p.kind = PotentialSpec::Kind::Fourier;
  p.terms = terms;
  return p;
}

inline BackgroundPtr background(const GridSpec& g, const PotentialSpec& rho = {}) {
  return build_background(BackgroundDescriptor{g, rho});
}

/// Random valid potential relative to the background metric.
inline ScalarField random_phi(const BackgroundPtr& bg, std::uint64_t seed, double margin,
                              int max_mode = 2) {
  const auto spec = realize_potential(random_potential(seed, margin, max_mode), bg->grid,
                                      bg->g.components());
  return evaluate_potential(spec, bg->grid);
}

inline ScalarField sample(const GridPtr& grid, auto&& f) {
  std::vector<double> v(grid->size());
  for (std::size_t p = 0; p < v.size(); ++p) v[p] = f(p);
  return ScalarField(grid, std::move(v));
}

inline double sup_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }

/// Sup norm of f minus its arithmetic mean over nodes.
inline double oscillation_from_mean(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m += v;
  m /= static_cast<double>(f.size());
  return (f + (-m)).max_abs();
}

}  // namespace pcf::test
