#pragma once

// Discretizations of the two supported Kähler manifolds and their spectral
// differential operators.
//
// Convention sheet (used everywhere in the library):
//   omega = (sqrt(-1)/2) g_{i jbar} dz^i ^ dzbar^j, volume form omega^[n] = omega^n / n!
//   Laplacian       Delta f = g^{i jbar} d_i d_jbar f   (half the Riemannian Laplacian)
//   Ricci           R_{i jbar} = -d_i d_jbar log det g,  S = g^{i jbar} R_{i jbar}
// On the flat unit torus this gives Delta cos(2 pi x) = -2 pi^2 cos(2 pi x); on
// the unit round sphere Delta f = 1/2 d/du[(1 - u^2) df/du] for axisymmetric f.
// Derivatives d_i carry a factor sqrt(2) relative to the holomorphic coordinate
// derivative (first order) and 2 (second order), which is what the half-Laplacian
// normalization amounts to.

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pcf/tensor.hpp"

namespace pcf {

enum class Backend { TorusPeriodic, SphereAxisymmetric };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);

struct GridSpec {
  Backend backend = Backend::TorusPeriodic;
  int complex_dim = 1;
  int resolution = 32;
  // Period of every real torus axis.
  double period = 1.0;
  // Optional 2/3-rule truncation of torus derivatives.
  bool dealias = false;

  /// Throws SpecError when the spec describes no valid grid.
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

class Grid {
 public:
  explicit Grid(const GridSpec& spec);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  static std::shared_ptr<const Grid> make(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  Backend backend() const { return spec_.backend; }
  bool is_torus() const { return spec_.backend == Backend::TorusPeriodic; }
  int dim() const { return spec_.complex_dim; }
  int resolution() const { return spec_.resolution; }
  std::size_t size() const { return size_; }

  /// Quadrature weights of the reference volume form (flat / round).
  std::span<const double> weights() const { return weights_; }
  double ref_volume() const { return ref_volume_; }
  /// Characteristic node spacing used by the explicit step-size rule.
  double spacing() const;
  /// Real coordinate `axis` of a node (torus: x1,y1,x2,y2; sphere: u = cos theta).
  double coordinate(std::size_t node, int axis = 0) const;
  /// Ricci curvature of the reference metric in units of the metric
  /// (0 on the flat torus, computed from the round conformal factor on the sphere).
  double reference_ricci() const { return reference_ricci_; }

  /// Reference-metric Laplacian.
  std::vector<double> ref_laplacian(std::span<const double> f) const;
  /// Mean-zero solution of ref_laplacian(u) = rhs after removing the mean of rhs.
  std::vector<double> ref_laplacian_solve(std::span<const double> rhs) const;
  /// Complex Hessian f_{i jbar} in the reference frame.
  std::vector<Herm> complex_hessian(std::span<const double> f) const;
  /// (1,0) derivatives f_i in the reference frame.
  std::vector<Covector> gradient(std::span<const double> f) const;

  // Torus-only primitives (holomorphic-coordinate derivatives, no scaling).
  std::vector<cd> dz(std::span<const cd> f, int i) const;
  std::vector<cd> dzdz(std::span<const double> f, int i, int j) const;

  // Sphere-only primitives: derivatives in u = cos(theta).
  std::vector<double> du(std::span<const double> f) const;
  std::vector<double> duu(std::span<const double> f) const;
  /// Legendre coefficients c_l with f = sum_l c_l P_l(u).
  std::vector<double> legendre_forward(std::span<const double> f) const;
  std::vector<double> legendre_inverse(std::span<const double> c) const;

  /// Weighted sum over nodes of f with the reference weights.
  double integrate_ref(std::span<const double> f) const;

 private:
  struct Torus;
  struct Sphere;

  void require_torus(const char* what) const;
  void require_sphere(const char* what) const;

  GridSpec spec_;
  std::size_t size_ = 0;
  std::vector<double> weights_;
  double ref_volume_ = 0.0;
  double reference_ricci_ = 0.0;
  std::unique_ptr<Torus> torus_;
  std::unique_ptr<Sphere> sphere_;
};

using GridPtr = std::shared_ptr<const Grid>;

}  // namespace pcf
