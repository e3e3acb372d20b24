#pragma once

// Pointwise algebra for (1,1) and (2,0) tensors in complex dimension n <= 2.
//
// Components are always expressed in a unitary frame of the reference metric
// (flat coordinates on the torus, the round frame on the sphere), so that for
// n = 1 a (1,1) tensor is a single real number and contractions need no
// coordinate factors.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

namespace pcf {

using cd = std::complex<double>;

/// Hermitian 2x2 matrix [[a11, a12], [conj(a12), a22]]; n = 1 uses a11 only.
struct Herm {
  double a11 = 0.0;
  double a22 = 0.0;
  cd a12{};

  static Herm scalar(double v) { return Herm{v, v, cd{}}; }
  bool operator==(const Herm&) const = default;
};

/// Symmetric complex 2x2 matrix holding a (2,0) tensor U_{ij}.
struct Sym {
  cd s11{};
  cd s12{};
  cd s22{};
};

/// Covector (f_1, f_2) of (1,0) components.
using Covector = std::array<cd, 2>;

inline Herm operator+(const Herm& a, const Herm& b) { return {a.a11 + b.a11, a.a22 + b.a22, a.a12 + b.a12}; }
inline Herm operator-(const Herm& a, const Herm& b) { return {a.a11 - b.a11, a.a22 - b.a22, a.a12 - b.a12}; }
inline Herm operator*(double s, const Herm& a) { return {s * a.a11, s * a.a22, s * a.a12}; }

inline double trace(const Herm& a, int n) { return n == 1 ? a.a11 : a.a11 + a.a22; }

inline double det(const Herm& a, int n) {
  return n == 1 ? a.a11 : a.a11 * a.a22 - std::norm(a.a12);
}

inline Herm inverse(const Herm& a, int n) {
  if (n == 1) return Herm{1.0 / a.a11, 0.0, cd{}};
  const double d = det(a, 2);
  return Herm{a.a22 / d, a.a11 / d, -a.a12 / d};
}

/// tr(A B) for Hermitian A, B (real).
inline double trace_product(const Herm& a, const Herm& b, int n) {
  if (n == 1) return a.a11 * b.a11;
  return a.a11 * b.a11 + a.a22 * b.a22 + 2.0 * std::real(a.a12 * std::conj(b.a12));
}

/// Polarized determinant: det(A + tB) = det A + t mixed(A,B) + t^2 det B.
inline double mixed(const Herm& a, const Herm& b, int n) {
  if (n == 1) return b.a11;  // d/dt (a + t b) at t = 0
  return a.a11 * b.a22 + a.a22 * b.a11 - 2.0 * std::real(a.a12 * std::conj(b.a12));
}

/// A B A for Hermitian A, B (result Hermitian).
inline Herm sandwich(const Herm& a, const Herm& b, int n) {
  if (n == 1) return Herm{a.a11 * b.a11 * a.a11, 0.0, cd{}};
  // M = A B, then M A.
  const cd a21 = std::conj(a.a12), b21 = std::conj(b.a12);
  const cd m11 = a.a11 * b.a11 + a.a12 * b21;
  const cd m12 = a.a11 * b.a12 + a.a12 * b.a22;
  const cd m21 = a21 * b.a11 + a.a22 * b21;
  const cd m22 = a21 * b.a12 + a.a22 * b.a22;
  Herm r;
  r.a11 = std::real(m11 * a.a11 + m12 * a21);
  r.a12 = m11 * a.a12 + m12 * a.a22;
  r.a22 = std::real(m21 * a.a12 + m22 * a.a22);
  return r;
}

/// Eigenvalues of G^{-1} B (both Hermitian, G > 0), ascending.
inline std::array<double, 2> relative_eigenvalues(const Herm& g, const Herm& b, int n) {
  if (n == 1) {
    const double v = b.a11 / g.a11;
    return {v, v};
  }
  // det(B - mu G) = det G mu^2 - mixed(G,B) mu + det B.
  const double a = det(g, 2);
  const double m = mixed(g, b, 2);
  const double c = det(b, 2);
  const double disc = std::sqrt(std::max(0.0, m * m - 4.0 * a * c));
  const double q = 0.5 * (m + (m >= 0.0 ? disc : -disc));
  double r1 = q / a;
  double r2 = q != 0.0 ? c / q : 0.0;
  if (r1 > r2) std::swap(r1, r2);
  return {r1, r2};
}

/// |T|^2_g = tr(g^{-1} T g^{-1} T) given ginv = g^{-1}.
inline double norm2_11(const Herm& ginv, const Herm& t, int n) {
  if (n == 1) {
    const double v = ginv.a11 * t.a11;
    return v * v;
  }
  return trace_product(sandwich(ginv, t, 2), t, 2);
}

/// Re g^{i jbar} a_i conj(b_j) = Re b^H g^{-1} a.
inline double pair(const Herm& ginv, const Covector& a, const Covector& b, int n) {
  if (n == 1) return ginv.a11 * std::real(a[0] * std::conj(b[0]));
  const cd w0 = ginv.a11 * a[0] + ginv.a12 * a[1];
  const cd w1 = std::conj(ginv.a12) * a[0] + ginv.a22 * a[1];
  return std::real(std::conj(b[0]) * w0 + std::conj(b[1]) * w1);
}

/// |U|^2_g = g^{i kbar} g^{j lbar} U_{ij} conj(U_{kl}) for a symmetric (2,0) tensor.
inline cd pair20(const Herm& ginv, const Sym& u, const Sym& v, int n) {
  if (n == 1) return ginv.a11 * ginv.a11 * u.s11 * std::conj(v.s11);
  const cd w[2][2] = {{ginv.a11, ginv.a12}, {std::conj(ginv.a12), ginv.a22}};
  const cd uu[2][2] = {{u.s11, u.s12}, {u.s12, u.s22}};
  const cd vv[2][2] = {{v.s11, v.s12}, {v.s12, v.s22}};
  cd acc{};
  // g^{i kbar} = w[k][i]
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) acc += w[k][i] * w[l][j] * uu[i][j] * std::conj(vv[k][l]);
  return acc;
}

inline double norm2_20(const Herm& ginv, const Sym& u, int n) { return std::real(pair20(ginv, u, u, n)); }

}  // namespace pcf
