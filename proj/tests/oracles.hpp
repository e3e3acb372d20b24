#pragma once

// Independent dense reference implementations used as test oracles.  They
// share no code with the FFT / Legendre paths of the library: derivatives come
// from explicit Fourier differentiation matrices and Kronecker products.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "pcf/geometry.hpp"

namespace pcf::oracle {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

/// First-derivative Fourier matrix on N equispaced points of period L (N even).
inline Mat fourier_d1(int N, double L) {
  Mat D = Mat::Zero(N, N);
  const double h = 2 * std::numbers::pi / N;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j) {
        const double sgn = ((i - j) % 2 == 0) ? 1.0 : -1.0;
        D(i, j) = 0.5 * sgn / std::tan((i - j) * h / 2);
      }
  return D * (2 * std::numbers::pi / L);
}

/// Second-derivative Fourier matrix (keeps the Nyquist mode).
inline Mat fourier_d2(int N, double L) {
  Mat D = Mat::Zero(N, N);
  const double h = 2 * std::numbers::pi / N;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) {
        D(i, j) = -std::numbers::pi * std::numbers::pi / (3 * h * h) - 1.0 / 6.0;
      } else {
        const double sgn = ((i - j) % 2 == 0) ? 1.0 : -1.0;
        const double s = std::sin((i - j) * h / 2);
        D(i, j) = -sgn / (2 * s * s);
      }
    }
  const double k = 2 * std::numbers::pi / L;
  return D * (k * k);
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Operator acting as `d` on axis `axis` of a rank-`rank` row-major grid (axis 0 slowest).
inline Mat on_axis(const Mat& d, int axis, int rank) {
  const int N = static_cast<int>(d.rows());
  Mat out = Mat::Identity(1, 1);
  for (int a = 0; a < rank; ++a) out = kron(out, a == axis ? d : Mat::Identity(N, N));
  return out;
}

/// Operator acting as `d` on both axes `a` and `b` (a != b).
inline Mat on_axes(const Mat& d, int a, int b, int rank) {
  const int N = static_cast<int>(d.rows());
  Mat out = Mat::Identity(1, 1);
  for (int k = 0; k < rank; ++k) out = kron(out, k == a || k == b ? d : Mat::Identity(N, N));
  return out;
}

/// Dense matrices H[i][j] of the complex Hessian u -> u_{i jbar} = 2 d_{z_i} d_{zbar_j} u
/// and G[i] of the gradient u -> u_i = sqrt(2) d_{z_i} u on the torus.
struct TorusDense {
  int n = 1;
  CMat hess[2][2];
  CMat grad[2];
  CMat hess20[2][2];  // 2 d_{z_i} d_{z_j}
};

inline TorusDense torus_dense(const Grid& grid) {
  const int n = grid.dim();
  const int rank = 2 * n;
  const int N = grid.resolution();
  const double L = grid.spec().period;
  const Mat d1 = fourier_d1(N, L), d2 = fourier_d2(N, L);
  const std::complex<double> I(0, 1);
  // Real derivative operators: second derivatives on one axis use d2, mixed use d1 x d1.
  auto second = [&](int a, int b) -> Mat {
    if (a == b) return on_axis(d2, a, rank);
    return on_axes(d1, a, b, rank);
  };
  TorusDense out;
  out.n = n;
  for (int i = 0; i < n; ++i) {
    const int xi = 2 * i, yi = 2 * i + 1;
    out.grad[i] = (std::sqrt(2.0) / 2) * (on_axis(d1, xi, rank).cast<cd>() - I * on_axis(d1, yi, rank).cast<cd>());
    for (int j = 0; j < n; ++j) {
      const int xj = 2 * j, yj = 2 * j + 1;
      // 2 dz_i dzbar_j = (1/2)(d_xi - i d_yi)(d_xj + i d_yj)
      out.hess[i][j] = 0.5 * (second(xi, xj).cast<cd>() + second(yi, yj).cast<cd>() +
                              I * (second(xi, yj).cast<cd>() - second(yi, xj).cast<cd>()));
      // 2 dz_i dz_j = (1/2)(d_xi - i d_yi)(d_xj - i d_yj)
      out.hess20[i][j] = 0.5 * (second(xi, xj).cast<cd>() - second(yi, yj).cast<cd>() -
                                I * (second(xi, yj).cast<cd>() + second(yi, xj).cast<cd>()));
    }
  }
  return out;
}

/// Dense evolved Laplacian g_phi^{i jbar} d_i d_jbar on the torus.
inline Mat torus_laplacian(const MetricState& s, const TorusDense& d) {
  const std::size_t M = s.grid()->size();
  const int n = s.dim();
  CMat L = CMat::Zero(M, M);
  for (std::size_t p = 0; p < M; ++p) {
    const Herm& w = s.g_phi_inv[p];
    const cd W[2][2] = {{w.a11, w.a12}, {std::conj(w.a12), w.a22}};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) L.row(p) += W[j][i] * d.hess[i][j].row(p);
  }
  return L.real();
}

/// Mean-zero (w.r.t. omega_phi^[n]) solution of Delta_phi u = rhs by a bordered dense solve.
inline ScalarField dense_poisson(const MetricState& s, const ScalarField& rhs) {
  const auto& grid = s.grid();
  const std::size_t M = grid->size();
  const Mat L = torus_laplacian(s, torus_dense(*grid));
  Mat A = Mat::Zero(M + 1, M + 1);
  A.topLeftCorner(M, M) = L;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(M + 1);
  const auto w = grid->weights();
  for (std::size_t p = 0; p < M; ++p) {
    A(p, M) = 1.0;
    A(M, p) = w[p] * std::exp(s.log_det[p]);
    b(p) = rhs[p];
  }
  Eigen::VectorXd x = A.partialPivLu().solve(b);
  std::vector<double> u(x.data(), x.data() + M);
  return ScalarField(grid, std::move(u));
}

/// Lichnerowicz and gradient forms for a potential rho + phi on the flat n = 1 torus,
/// assembled from dense Fourier matrices on the real trigonometric space without the
/// Nyquist modes.  The metric and its Christoffel symbol are rebuilt from the potential.
struct TorusForms {
  Mat lich;
  Mat grad;
  Mat mass;
};

inline TorusForms torus_forms(const Grid& grid, const ScalarField& potential, bool with_constant) {
  const int N = grid.resolution();
  const std::size_t M = grid.size();
  const double L = grid.spec().period;
  const auto d = torus_dense(grid);
  const Eigen::Map<const Eigen::VectorXd> pot(potential.values().data(), M);
  const Eigen::VectorXd g = (d.hess[0][0] * pot.cast<cd>()).real().array() + 1.0;
  const Eigen::VectorXcd grad_g = d.grad[0] * g.cast<cd>();

  // Basis: cos and sin of 2 pi (a x + b y) / L for (a, b) in the upper half plane.
  const int K = N / 2 - 1;
  std::vector<Eigen::VectorXd> cols;
  if (with_constant) cols.push_back(Eigen::VectorXd::Ones(M));
  for (int a = 0; a <= K; ++a)
    for (int b = -K; b <= K; ++b) {
      if (a == 0 && b <= 0) continue;
      Eigen::VectorXd c(M), s(M);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const double arg = 2 * std::numbers::pi * (a * i + b * j) / N;
          c(i * N + j) = std::cos(arg);
          s(i * N + j) = std::sin(arg);
        }
      cols.push_back(c);
      cols.push_back(s);
    }
  Mat X(M, cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) X.col(k) = cols[k];

  const CMat Xc = X.cast<cd>();
  const CMat grad = d.grad[0] * Xc;
  CMat h20 = d.hess20[0][0] * Xc;
  for (std::size_t p = 0; p < M; ++p) h20.row(p) -= (grad_g(p) / g(p)) * grad.row(p);
  const double cell = 1.0 / static_cast<double>(M) * L * L;
  // Weights: |u_{;11}|^2 g^{-2} and |u_1|^2 g^{-1}, both against omega_phi = g dA.
  const Eigen::VectorXd w20 = cell * g.cwiseInverse();
  const Eigen::VectorXd wgrad = Eigen::VectorXd::Constant(M, cell);
  TorusForms out;
  out.lich = (h20.adjoint() * w20.cast<cd>().asDiagonal() * h20).real();
  out.grad = (grad.adjoint() * wgrad.cast<cd>().asDiagonal() * grad).real();
  out.mass = X.transpose() * (cell * g).asDiagonal() * X;
  return out;
}

/// Ascending eigenvalues of A x = lambda B x.
inline Eigen::VectorXd generalized_eigenvalues(const Mat& A, const Mat& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, B, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace pcf::oracle
