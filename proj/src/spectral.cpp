#include "pcf/spectral.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <mutex>
#include <optional>

#include "pcf/errors.hpp"
#include "pcf/flow.hpp"
#include "pcf/functionals.hpp"

namespace pcf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

HermitianTensorField harmonic_tensor(const MetricState& state) {
  const auto P = state.P ? *state.P : solve_P(state);
  auto T = state.bg->ricci - complex_hessian(state.grid(), P);
  const auto tr = trace(state, T);
  const double sbar = state.bg->sbar;
  const double defect = (tr + (-sbar)).max_abs();
  if (defect > 1e-8 * std::max(1.0, std::abs(sbar)))
    throw InvariantViolation("trace of the harmonic tensor differs from S-bar by " + std::to_string(defect));
  return T;
}

ScalarField linearized_q(const MetricState& state, const ScalarField& v, double tol) {
  const int n = state.dim();
  const auto P = state.P ? *state.P : solve_P(state, tol);
  const auto& ric = state.bg->ricci;
  const auto Ph = complex_hessian(state.grid(), P);
  auto withP = state;
  withP.P = P;
  const auto T = harmonic_tensor(withP);
  const auto vh = complex_hessian(state.grid(), v);
  std::vector<double> rhs(v.size());
  // T is a difference of two curvature-sized terms; the solvability check is relative to them.
  double scale = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    const Herm& w = state.g_phi_inv[p];
    rhs[p] = trace_product(sandwich(w, vh[p], n), T[p], n);
    const double terms = std::sqrt(norm2_11(w, ric[p], n)) + std::sqrt(norm2_11(w, Ph[p], n));
    scale = std::max(scale, std::sqrt(norm2_11(w, vh[p], n)) * terms);
  }
  auto q = poisson(state, ScalarField(state.grid(), std::move(rhs)), tol, scale).u;
  const auto eP = P.map([](double x) { return std::exp(x); });
  // int e^P omega^[n] = V by the normalization of P.
  return q + (-integrate(*state.bg, hadamard(q, eP)) / integrate(*state.bg, eP));
}

ScalarField linearized_apply(const MetricState& state, const ScalarField& v, double tol) {
  return laplacian(state, v) + linearized_q(state, v, tol);
}

std::vector<double> jacobian_probe(const MetricState& state, const ScalarField& v, std::span<const double> eps,
                                   double tol) {
  const auto base = pcf_rhs(state, tol);
  const auto lin = linearized_apply(state, v, tol);
  std::vector<double> err;
  for (double e : eps) {
    const auto moved = assemble_state(state.bg, axpy(state.phi, e, v), state.bg->descriptor.eps_pos);
    auto d = (1.0 / e) * (pcf_rhs(moved, tol) - base) - lin;
    err.push_back((d + (-mean(state, d))).max_abs());
  }
  return err;
}

double lichnerowicz_pair(const MetricState& state, const ScalarField& u1, const ScalarField& u2) {
  const int n = state.dim();
  const auto a = covariant_hessian20(state, u1);
  const auto b = &u1 == &u2 ? a : covariant_hessian20(state, u2);
  std::vector<double> dens(u1.size());
  for (std::size_t p = 0; p < dens.size(); ++p)
    dens[p] = std::real(pair20(state.g_phi_inv[p], a.components[p], b.components[p], n));
  return integrate(state, ScalarField(state.grid(), std::move(dens)));
}

std::size_t test_space_dimension(const GridSpec& spec) {
  if (spec.backend == Backend::SphereAxisymmetric) return static_cast<std::size_t>(spec.resolution - 1);
  const std::size_t side = static_cast<std::size_t>(spec.resolution - 1);
  std::size_t count = 1;
  for (int a = 0; a < 2 * spec.complex_dim; ++a) count *= side;
  return count - 1;
}

namespace {

// Test space basis as columns of nodal values.
Matrix test_basis(const Grid& grid, bool with_constant) {
  const std::size_t P = grid.size();
  std::vector<Vector> cols;
  if (with_constant) cols.push_back(Vector::Ones(P));
  if (grid.is_torus()) {
    const int rank = 2 * grid.dim();
    const int K = grid.resolution() / 2 - 1;  // Nyquist excluded
    const int side = 2 * K + 1;
    int count = 1;
    for (int a = 0; a < rank; ++a) count *= side;
    const double k0 = 2 * std::numbers::pi / grid.spec().period;
    for (int c = 0; c < count; ++c) {
      int m[4] = {0, 0, 0, 0};
      int rem = c;
      for (int a = rank - 1; a >= 0; --a) {
        m[a] = rem % side - K;
        rem /= side;
      }
      int first = 0;
      for (int a = 0; a < rank; ++a)
        if (m[a] != 0) {
          first = m[a];
          break;
        }
      if (first <= 0) continue;
      Vector cs(P), sn(P);
      for (std::size_t p = 0; p < P; ++p) {
        double arg = 0.0;
        for (int a = 0; a < rank; ++a) arg += m[a] * grid.coordinate(p, a);
        cs[p] = std::cos(k0 * arg);
        sn[p] = std::sin(k0 * arg);
      }
      cols.push_back(std::move(cs));
      cols.push_back(std::move(sn));
    }
  } else {
    for (int l = 1; l < grid.resolution(); ++l) {
      std::vector<double> c(P, 0.0);
      c[l] = 1.0;
      const auto v = grid.legendre_inverse(c);
      cols.push_back(Eigen::Map<const Vector>(v.data(), P));
    }
  }
  Matrix B(P, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) B.col(j) = cols[j];
  return B;
}

std::vector<double> measure_weights(const MetricState& s) {
  const auto w = s.grid()->weights();
  std::vector<double> mu(w.size());
  for (std::size_t p = 0; p < w.size(); ++p) mu[p] = w[p] * std::exp(s.log_det[p]);
  return mu;
}

// Upper-triangular factor C with C^H C = g_phi^{-1} at a node (n = 2).
struct Factor {
  double c11 = 0.0, c22 = 0.0;
  cd c12{};
};

Factor factor_of(const Herm& w) {
  Factor f;
  f.c11 = std::sqrt(w.a11);
  f.c12 = w.a12 / f.c11;
  f.c22 = std::sqrt(std::max(0.0, w.a22 - std::norm(f.c12)));
  return f;
}

// Rows whose Gram matrix is the gradient form int <grad f1, grad f2> omega_phi^[n].
Matrix gradient_rows(const MetricState& s, const Matrix& basis, const std::vector<double>& mu) {
  const int n = s.dim();
  const std::size_t P = basis.rows();
  const auto& grid = *s.grid();
  Matrix X(2 * n * P, basis.cols());
  std::vector<Factor> fac(P);
  for (std::size_t p = 0; p < P; ++p) fac[p] = factor_of(s.g_phi_inv[p]);
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    const auto g = grid.gradient(std::span<const double>(basis.col(j).data(), P));
    for (std::size_t p = 0; p < P; ++p) {
      const double r = std::sqrt(mu[p]);
      if (n == 1) {
        const cd a = std::sqrt(s.g_phi_inv[p].a11) * g[p][0] * r;
        X(2 * p, j) = a.real();
        X(2 * p + 1, j) = a.imag();
      } else {
        const auto& f = fac[p];
        const cd a0 = (f.c11 * g[p][0] + f.c12 * g[p][1]) * r;
        const cd a1 = f.c22 * g[p][1] * r;
        X(4 * p, j) = a0.real();
        X(4 * p + 1, j) = a0.imag();
        X(4 * p + 2, j) = a1.real();
        X(4 * p + 3, j) = a1.imag();
      }
    }
  }
  return X;
}

// Rows whose Gram matrix is the Lichnerowicz form.
Matrix hessian_rows(const MetricState& s, const Matrix& basis, const std::vector<double>& mu) {
  const int n = s.dim();
  const std::size_t P = basis.rows();
  const int per = n == 1 ? 2 : 6;
  Matrix X(per * P, basis.cols());
  std::vector<Factor> fac(P);
  for (std::size_t p = 0; p < P; ++p) fac[p] = factor_of(s.g_phi_inv[p]);
  const double r2 = std::sqrt(2.0);
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    const std::vector<double> col(basis.col(j).data(), basis.col(j).data() + P);
    const auto H = covariant_hessian20(s, ScalarField(s.grid(), col));
    for (std::size_t p = 0; p < P; ++p) {
      const double r = std::sqrt(mu[p]);
      const Sym& U = H.components[p];
      if (n == 1) {
        const cd a = s.g_phi_inv[p].a11 * U.s11 * r;
        X(2 * p, j) = a.real();
        X(2 * p + 1, j) = a.imag();
        continue;
      }
      // C U C^T with C = [[c11, c12], [0, c22]].
      const auto& f = fac[p];
      const cd m11 = f.c11 * U.s11 + f.c12 * U.s12, m12 = f.c11 * U.s12 + f.c12 * U.s22;
      const cd m22 = f.c22 * U.s22;
      const cd t11 = m11 * f.c11 + m12 * f.c12;
      const cd t12 = m12 * f.c22;
      const cd t22 = m22 * f.c22;
      const cd e[3] = {t11 * r, t22 * r, r2 * t12 * r};
      for (int k = 0; k < 3; ++k) {
        X(per * p + 2 * k, j) = e[k].real();
        X(per * p + 2 * k + 1, j) = e[k].imag();
      }
    }
  }
  return X;
}

void check_dimension(std::size_t dim) {
  if (dim > kMaxDenseDimension)
    throw EigSolveFailure("test space of dimension " + std::to_string(dim) + " exceeds the dense limit " +
                          std::to_string(kMaxDenseDimension));
}

Matrix gram(const Matrix& X) {
  // Dense eigensolves stay single threaded so that concurrent calls do not compete.
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
  const int M = static_cast<int>(X.cols());
  const int K = static_cast<int>(X.rows());
  Matrix G = Matrix::Zero(M, M);
  cblas_dsyrk(CblasColMajor, CblasUpper, CblasTrans, M, K, 1.0, X.data(), K, 0.0, G.data(), M);
  G.triangularView<Eigen::StrictlyLower>() = G.transpose();
  return G;
}

// Eigenpairs il..iu (1-based, ascending) of A x = lambda B x, B positive definite.
// The reduction to standard form runs in Eigen; LAPACK only sees a symmetric matrix.
std::pair<Vector, Matrix> generalized_lowest(Matrix A, Matrix B, int il, int iu, bool vectors) {
  const int M = static_cast<int>(A.rows());
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success) throw EigSolveFailure("gradient form is not positive definite on the test space");
  const auto L = llt.matrixL();
  L.solveInPlace(A);
  Matrix C = A.transpose();
  L.solveInPlace(C);
  C = 0.5 * (C + C.transpose()).eval();

  Vector w(M);
  Matrix Z(M, iu - il + 1);
  std::vector<lapack_int> isuppz(2 * M);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'I', 'U', M, C.data(), M, 0.0,
                                         0.0, il, iu, 0.0, &found, w.data(), Z.data(), M, isuppz.data());
  if (info != 0 || found != iu - il + 1)
    throw EigSolveFailure("symmetric eigensolve failed (info " + std::to_string(info) + ")");
  if (vectors) llt.matrixU().solveInPlace(Z);
  return {w.head(found), Z};
}

}  // namespace

SpectralReport lambda_min(const MetricState& state) {
  const auto& grid = *state.grid();
  check_dimension(test_space_dimension(grid.spec()));
  const auto basis = test_basis(grid, false);
  const auto mu = measure_weights(state);
  const auto Xg = gradient_rows(state, basis, mu);
  Matrix B = gram(Xg);
  Matrix A = gram(hessian_rows(state, basis, mu));

  // Constraint space: orthogonal complement of the axial potential in the gradient form.
  Matrix Z;
  std::optional<ScalarField> theta;
  if (!grid.is_torus()) {
    theta = axial_holomorphy_potential(state);
    Matrix tcol(grid.size(), 1);
    for (std::size_t p = 0; p < grid.size(); ++p) tcol(p, 0) = (*theta)[p];
    const Matrix xt = gradient_rows(state, tcol, mu);
    const Vector c = Xg.transpose() * xt.col(0);
    Eigen::HouseholderQR<Matrix> qr(c);
    const Matrix Q = qr.householderQ();
    Z = Q.rightCols(c.size() - 1);
    A = Z.transpose() * A * Z;
    B = Z.transpose() * B * Z;
  }
  const std::size_t dim = A.rows();
  auto [w, vec] = generalized_lowest(std::move(A), std::move(B), 1, 1, true);

  SpectralReport rep;
  rep.lambda_min = w[0];
  rep.dimension = dim;
  Vector coef = grid.is_torus() ? Vector(vec.col(0)) : Vector(Z * vec.col(0));
  Vector f = basis * coef;
  std::vector<double> fv(f.data(), f.data() + f.size());
  ScalarField field(state.grid(), std::move(fv));
  field = field + (-mean(state, field));
  const double fmax = std::max(field.max_abs(), std::numeric_limits<double>::min());
  field *= 1.0 / fmax;
  rep.eigenfield = field;
  rep.constraint_residuals.push_back(std::abs(integrate(state, field)) / state.bg->volume);
  if (theta) {
    const double cross = integrate(state, gradient_pairing(state, *theta, field));
    const double tt = integrate(state, gradient_pairing(state, *theta, *theta));
    const double ff = integrate(state, gradient_pairing(state, field, field));
    rep.constraint_residuals.push_back(std::abs(cross) / std::sqrt(tt * ff));
  }
  return rep;
}

double laplacian_gap(const MetricState& state) {
  check_dimension(test_space_dimension(state.grid()->spec()) + 1);
  const auto basis = test_basis(*state.grid(), true);
  const auto mu = measure_weights(state);
  Matrix Mass;
  {
    Matrix Xm = basis;
    for (Eigen::Index p = 0; p < Xm.rows(); ++p) Xm.row(p) *= std::sqrt(mu[p]);
    Mass = gram(Xm);
  }
  Matrix Grad = gram(gradient_rows(state, basis, mu));
  auto [w, vec] = generalized_lowest(std::move(Grad), std::move(Mass), 1, 2, false);
  (void)vec;
  return w[1];
}

DecayFit fit_decay(std::span<const double> t, std::span<const double> value, double t_start, double t_end) {
  if (t.size() != value.size()) throw FitError("time and value series differ in length");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_start || t[k] > t_end) continue;
    if (!(value[k] > 0.0) || !std::isfinite(value[k]))
      throw FitError("non-positive value at t = " + std::to_string(t[k]));
    x.push_back(t[k]);
    y.push_back(std::log(value[k]));
  }
  if (x.size() < 10) throw FitError("fit window holds " + std::to_string(x.size()) + " samples, need 10");
  const double m = static_cast<double>(x.size());
  double xm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xm += x[k];
    ym += y[k];
  }
  xm /= m;
  ym /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - xm) * (x[k] - xm);
    sxy += (x[k] - xm) * (y[k] - ym);
    syy += (y[k] - ym) * (y[k] - ym);
  }
  if (!(sxx > 0.0)) throw FitError("fit window has no time extent");
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (ym + slope * (x[k] - xm));
    ssr += r * r;
  }
  DecayFit fit;
  fit.theta = -slope;
  fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  fit.t_start = x.front();
  fit.t_end = x.back();
  fit.samples = static_cast<int>(x.size());
  return fit;
}

std::pair<double, double> default_decay_window(std::span<const double> t, std::span<const double> calabi,
                                               std::span<const double> value) {
  if (t.empty() || t.size() != calabi.size() || t.size() != value.size())
    throw FitError("decay window needs equally long, non-empty series");
  std::size_t start = t.size();
  for (std::size_t k = 0; k < t.size(); ++k)
    if (calabi[k] < 0.1 * calabi[0]) {
      start = k;
      break;
    }
  if (start == t.size()) throw FitError("Calabi energy never drops below 10% of its initial value");
  std::size_t end = start;
  for (std::size_t k = start; k < t.size(); ++k)
    if (value[k] >= 1e-12 * value[start]) end = k;
  return {t[start], t[end]};
}

}  // namespace pcf
