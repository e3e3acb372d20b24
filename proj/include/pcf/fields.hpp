#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "pcf/grid.hpp"
#include "pcf/tensor.hpp"

namespace pcf {

/// Real function sampled on the nodes of a grid.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid);  // zero field
  ScalarField(GridPtr grid, std::vector<double> values);
  static ScalarField constant(GridPtr grid, double c);

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  bool empty() const { return values_.empty(); }

  double max_abs() const;
  double max() const;
  double min() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double c);

  /// Pointwise map.
  template <class F>
  ScalarField map(F&& f) const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(values_[i]);
    return ScalarField(grid_, std::move(out));
  }

 private:
  void check_same_grid(const ScalarField& o) const;

  GridPtr grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
ScalarField operator+(ScalarField a, double c);
/// Pointwise product.
ScalarField hadamard(const ScalarField& a, const ScalarField& b);
/// a + s * b
ScalarField axpy(const ScalarField& a, double s, const ScalarField& b);

/// (1,1) tensor field, components in the reference frame.
class HermitianTensorField {
 public:
  HermitianTensorField() = default;
  HermitianTensorField(GridPtr grid, std::vector<Herm> components);

  const GridPtr& grid() const { return grid_; }
  int dim() const { return grid_ ? grid_->dim() : 0; }
  std::size_t size() const { return comps_.size(); }
  std::span<const Herm> components() const { return comps_; }
  const Herm& operator[](std::size_t i) const { return comps_[i]; }
  bool all_finite() const;

 private:
  GridPtr grid_;
  std::vector<Herm> comps_;
};

HermitianTensorField operator+(const HermitianTensorField& a, const HermitianTensorField& b);
HermitianTensorField operator-(const HermitianTensorField& a, const HermitianTensorField& b);
HermitianTensorField scale(double s, const HermitianTensorField& a);
/// Largest componentwise modulus over nodes.
double max_abs(const HermitianTensorField& a);

/// Symmetric (2,0) tensor field, components in the reference frame.
struct SymTensorField {
  GridPtr grid;
  std::vector<Sym> components;
};

}  // namespace pcf
