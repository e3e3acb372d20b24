#include "pcf/fields.hpp"

#include <algorithm>
#include <limits>

#include "pcf/errors.hpp"

namespace pcf {

ScalarField::ScalarField(GridPtr grid) : grid_(std::move(grid)) {
  values_.assign(grid_->size(), 0.0);
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_ || values_.size() != grid_->size())
    throw SpecError("scalar field length does not match the grid node count");
}

ScalarField ScalarField::constant(GridPtr grid, double c) {
  std::vector<double> v(grid->size(), c);
  return ScalarField(std::move(grid), std::move(v));
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::max() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values_) m = std::max(m, v);
  return m;
}

double ScalarField::min() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : values_) m = std::min(m, v);
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ScalarField::check_same_grid(const ScalarField& o) const {
  if (grid_ != o.grid_ && !(grid_ && o.grid_ && grid_->spec() == o.grid_->spec()))
    throw SpecError("fields live on different grids");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  check_same_grid(o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  check_same_grid(o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double c) {
  for (double& v : values_) v += c;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }
ScalarField operator+(ScalarField a, double c) { return a += c; }

ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return ScalarField(a.grid(), std::move(out));
}

ScalarField axpy(const ScalarField& a, double s, const ScalarField& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + s * b[i];
  return ScalarField(a.grid(), std::move(out));
}

HermitianTensorField::HermitianTensorField(GridPtr grid, std::vector<Herm> components)
    : grid_(std::move(grid)), comps_(std::move(components)) {
  if (!grid_ || comps_.size() != grid_->size())
    throw SpecError("tensor field length does not match the grid node count");
}

bool HermitianTensorField::all_finite() const {
  return std::all_of(comps_.begin(), comps_.end(), [](const Herm& h) {
    return std::isfinite(h.a11) && std::isfinite(h.a22) && std::isfinite(h.a12.real()) &&
           std::isfinite(h.a12.imag());
  });
}

HermitianTensorField operator+(const HermitianTensorField& a, const HermitianTensorField& b) {
  std::vector<Herm> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return HermitianTensorField(a.grid(), std::move(out));
}

HermitianTensorField operator-(const HermitianTensorField& a, const HermitianTensorField& b) {
  std::vector<Herm> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return HermitianTensorField(a.grid(), std::move(out));
}

HermitianTensorField scale(double s, const HermitianTensorField& a) {
  std::vector<Herm> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * a[i];
  return HermitianTensorField(a.grid(), std::move(out));
}

double max_abs(const HermitianTensorField& a) {
  double m = 0.0;
  for (const auto& h : a.components())
    m = std::max({m, std::abs(h.a11), std::abs(h.a22), std::abs(h.a12)});
  return m;
}

}  // namespace pcf
