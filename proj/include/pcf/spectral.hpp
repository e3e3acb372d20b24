#pragma once

// Linearized flow operator, harmonic tensor, Lichnerowicz form, constrained
// eigenvalues and exponential decay fits.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pcf/elliptic.hpp"

namespace pcf {

/// T_{i jbar} = -P_{i jbar} + R_{i jbar}(omega).  Throws InvariantViolation if
/// tr_phi T differs from S-bar by more than 1e-8 (relative to max(1, |S-bar|)) at some node.
HermitianTensorField harmonic_tensor(const MetricState& state);

/// Q with Delta_phi Q = g_phi^{i kbar} g_phi^{l jbar} v_{k lbar} T_{i jbar} and int Q e^P omega^[n] = 0.
ScalarField linearized_q(const MetricState& state, const ScalarField& v, double tol = kDefaultSolverTol);

/// Delta_phi v + Q.
ScalarField linearized_apply(const MetricState& state, const ScalarField& v,
                             double tol = kDefaultSolverTol);

/// For each step e in `eps`: sup norm, after removing the omega_phi mean, of
/// (pcf_rhs(phi + e v) - pcf_rhs(phi)) / e - linearized_apply(v).
std::vector<double> jacobian_probe(const MetricState& state, const ScalarField& v, std::span<const double> eps,
                                   double tol = 1e-13);

/// int g_phi^{i kbar} g_phi^{j lbar} u1_{;ij} conj(u2_{;kl}) omega_phi^[n] (real part).
double lichnerowicz_pair(const MetricState& state, const ScalarField& u1, const ScalarField& u2);

struct SpectralReport {
  double lambda_min = 0.0;
  ScalarField eigenfield;
  /// |int f omega_phi^[n]| and, on the sphere, |int <grad theta_X, grad f> omega_phi^[n]|,
  /// both relative to the norms of the factors.
  std::vector<double> constraint_residuals;
  std::string method = "dense";
  std::size_t dimension = 0;  // size of the discrete test space
};

/// Largest test space handled by the dense eigensolves.
inline constexpr std::size_t kMaxDenseDimension = 4500;

/// Dimension of the mean-zero test space used by lambda_min on this grid.
std::size_t test_space_dimension(const GridSpec& spec);

/// Smallest value of the Lichnerowicz form over the gradient form on the space of
/// mean-zero functions (orthogonal to the axial holomorphy potential on the sphere).
/// Test space: trigonometric polynomials without the Nyquist modes on the torus,
/// Legendre polynomials of degree < N on the sphere.  Throws EigSolveFailure when the
/// test space exceeds kMaxDenseDimension.
SpectralReport lambda_min(const MetricState& state);

/// Smallest positive eigenvalue of -Delta_phi (gradient form over the L^2 form
/// on the same test space).
double laplacian_gap(const MetricState& state);

struct DecayFit {
  double theta = 0.0;
  double r_squared = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  int samples = 0;
};

/// Least-squares fit of log(value) against t over samples with t in [t_start, t_end];
/// theta is minus the slope.  Throws FitError if a value is not positive or fewer
/// than 10 samples fall in the window.
DecayFit fit_decay(std::span<const double> t, std::span<const double> value, double t_start,
                   double t_end);

/// Default window: starts at the first sample whose Calabi energy is below 10% of its
/// initial value and ends at the last sample where `value` is at least 1e-12 times its
/// value at the start.  Throws FitError if no such start exists.
std::pair<double, double> default_decay_window(std::span<const double> t, std::span<const double> calabi,
                                               std::span<const double> value);

}  // namespace pcf
