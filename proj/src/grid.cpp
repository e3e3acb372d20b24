#include "pcf/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include "pcf/errors.hpp"

namespace pcf {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW's planner is not reentrant; execution on fresh arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex, FftwFree>;

FftwBuffer alloc_buffer(std::size_t n) {
  return FftwBuffer(fftw_alloc_complex(n));
}

// Legendre polynomial P_l(x) and derivative by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int l, double x) {
  double p0 = 1.0, p1 = x;
  if (l == 0) return {1.0, 0.0};
  for (int k = 2; k <= l; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = l * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

std::string to_string(Backend b) {
  return b == Backend::TorusPeriodic ? "torus" : "sphere";
}

Backend backend_from_string(const std::string& s) {
  if (s == "torus") return Backend::TorusPeriodic;
  if (s == "sphere") return Backend::SphereAxisymmetric;
  throw SpecError("unknown backend '" + s + "' (expected torus or sphere)");
}

void GridSpec::validate() const {
  if (backend == Backend::SphereAxisymmetric && complex_dim != 1)
    throw SpecError("sphere backend requires complex_dim = 1");
  if (complex_dim != 1 && complex_dim != 2) throw SpecError("complex_dim must be 1 or 2");
  if (resolution < 8) throw SpecError("resolution must be at least 8");
  if (backend == Backend::TorusPeriodic && resolution % 2 != 0)
    throw SpecError("torus resolution must be even");
  if (!(period > 0.0) || !std::isfinite(period)) throw SpecError("torus period must be positive");
}

// --------------------------------------------------------------------------
// Torus: c2c FFT over the 2n real axes, row-major with axis 0 slowest.

struct Grid::Torus {
  int n = 1;
  int N = 0;
  int rank = 2;
  std::size_t total = 0;
  double period = 1.0;
  bool dealias = false;
  // Per spectral index: wave numbers, Nyquist flags and 2/3-rule cut.
  std::vector<std::array<double, 4>> k;
  std::vector<std::array<bool, 4>> nyq;
  std::vector<char> cut;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  Torus(int complex_dim, int resolution, double L, bool dealias_flag)
      : n(complex_dim), N(resolution), rank(2 * complex_dim), period(L), dealias(dealias_flag) {
    total = 1;
    for (int a = 0; a < rank; ++a) total *= static_cast<std::size_t>(N);
    k.resize(total);
    nyq.resize(total);
    cut.resize(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      std::array<double, 4> kk{};
      std::array<bool, 4> nq{};
      bool c = false;
      for (int a = rank - 1; a >= 0; --a) {
        const int i = static_cast<int>(rem % N);
        rem /= N;
        const int m = i < N / 2 ? i : i - N;
        kk[a] = 2.0 * kPi * m / L;
        nq[a] = (i == N / 2);
        if (dealias && 3 * std::abs(m) > N) c = true;
      }
      k[idx] = kk;
      nyq[idx] = nq;
      cut[idx] = c;
    }
    std::vector<int> dims(rank, N);
    auto in = alloc_buffer(total);
    auto out = alloc_buffer(total);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd = fftw_plan_dft(rank, dims.data(), in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft(rank, dims.data(), in.get(), out.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  ~Torus() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }

  // First-derivative symbol along real axis a (zero at Nyquist).
  cd d1(std::size_t s, int a) const { return nyq[s][a] ? cd{} : cd(0.0, k[s][a]); }
  // Second-derivative symbol along axes a, b.
  double d2(std::size_t s, int a, int b) const {
    if (a == b) return -k[s][a] * k[s][a];
    if (nyq[s][a] || nyq[s][b]) return 0.0;
    return -k[s][a] * k[s][b];
  }
  double lap_symbol(std::size_t s) const {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += 0.5 * (d2(s, 2 * i, 2 * i) + d2(s, 2 * i + 1, 2 * i + 1));
    return v;
  }

  FftwBuffer forward_real(std::span<const double> f) const {
    auto in = alloc_buffer(total);
    auto out = alloc_buffer(total);
    for (std::size_t i = 0; i < total; ++i) {
      in.get()[i][0] = f[i];
      in.get()[i][1] = 0.0;
    }
    fftw_execute_dft(fwd, in.get(), out.get());
    return out;
  }

  FftwBuffer forward_complex(std::span<const cd> f) const {
    auto in = alloc_buffer(total);
    auto out = alloc_buffer(total);
    for (std::size_t i = 0; i < total; ++i) {
      in.get()[i][0] = f[i].real();
      in.get()[i][1] = f[i].imag();
    }
    fftw_execute_dft(fwd, in.get(), out.get());
    return out;
  }

  // Multiplies a spectrum by symbol(s) and transforms back (normalized).
  template <class Symbol>
  std::vector<cd> apply(const FftwBuffer& spec, Symbol&& symbol) const {
    auto in = alloc_buffer(total);
    auto out = alloc_buffer(total);
    for (std::size_t s = 0; s < total; ++s) {
      const cd c(spec.get()[s][0], spec.get()[s][1]);
      const cd v = cut[s] ? cd{} : c * symbol(s);
      in.get()[s][0] = v.real();
      in.get()[s][1] = v.imag();
    }
    fftw_execute_dft(bwd, in.get(), out.get());
    const double scale = 1.0 / static_cast<double>(total);
    std::vector<cd> r(total);
    for (std::size_t i = 0; i < total; ++i) r[i] = cd(out.get()[i][0], out.get()[i][1]) * scale;
    return r;
  }

  static std::vector<double> real_part(const std::vector<cd>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
    return r;
  }
};

// --------------------------------------------------------------------------
// Sphere: Gauss-Legendre collocation in u = cos(theta), axisymmetric fields.

struct Grid::Sphere {
  int N = 0;
  std::vector<double> x;       // nodes, ascending
  std::vector<double> w;       // Gauss-Legendre weights (sum 2)
  std::vector<double> P;       // P[l * N + j] = P_l(x_j)
  std::vector<double> D;       // first-derivative matrix, row-major
  std::vector<double> D2;      // second-derivative matrix

  explicit Sphere(int resolution) : N(resolution) {
    x.resize(N);
    w.resize(N);
    for (int i = 0; i < N; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (N + 0.5));
      for (int it = 0; it < 100; ++it) {
        const auto [p, dp] = legendre_with_derivative(N, z);
        const double dz = p / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      const auto [p, dp] = legendre_with_derivative(N, z);
      (void)p;
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
    std::vector<double> xs(N), ws(N);
    for (int i = 0; i < N; ++i) {
      xs[i] = x[order[i]];
      ws[i] = w[order[i]];
    }
    x = std::move(xs);
    w = std::move(ws);

    P.assign(static_cast<std::size_t>(N) * N, 0.0);
    for (int j = 0; j < N; ++j) {
      double p0 = 1.0, p1 = x[j];
      P[j] = 1.0;
      if (N > 1) P[N + j] = x[j];
      for (int l = 2; l < N; ++l) {
        const double p2 = ((2.0 * l - 1.0) * x[j] * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
        P[static_cast<std::size_t>(l) * N + j] = p2;
      }
    }

    // Barycentric weights in log form to avoid under/overflow at large N.
    std::vector<double> loglam(N, 0.0);
    std::vector<int> sign(N, 1);
    for (int j = 0; j < N; ++j) {
      for (int k = 0; k < N; ++k) {
        if (k == j) continue;
        const double d = x[j] - x[k];
        loglam[j] -= std::log(std::abs(d));
        if (d < 0) sign[j] = -sign[j];
      }
    }
    D.assign(static_cast<std::size_t>(N) * N, 0.0);
    for (int i = 0; i < N; ++i) {
      double diag = 0.0;
      for (int j = 0; j < N; ++j) {
        if (i == j) continue;
        const double v = sign[i] * sign[j] * std::exp(loglam[j] - loglam[i]) / (x[i] - x[j]);
        D[static_cast<std::size_t>(i) * N + j] = v;
        diag -= v;
      }
      D[static_cast<std::size_t>(i) * N + i] = diag;
    }
    D2.assign(static_cast<std::size_t>(N) * N, 0.0);
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < N; ++k) {
        const double dik = D[static_cast<std::size_t>(i) * N + k];
        for (int j = 0; j < N; ++j)
          D2[static_cast<std::size_t>(i) * N + j] += dik * D[static_cast<std::size_t>(k) * N + j];
      }
  }

  std::vector<double> matvec(const std::vector<double>& M, std::span<const double> f) const {
    std::vector<double> r(N, 0.0);
    for (int i = 0; i < N; ++i) {
      double acc = 0.0;
      for (int j = 0; j < N; ++j) acc += M[static_cast<std::size_t>(i) * N + j] * f[j];
      r[i] = acc;
    }
    return r;
  }

  std::vector<double> forward(std::span<const double> f) const {
    std::vector<double> c(N, 0.0);
    for (int l = 0; l < N; ++l) {
      double acc = 0.0;
      for (int j = 0; j < N; ++j) acc += w[j] * P[static_cast<std::size_t>(l) * N + j] * f[j];
      c[l] = 0.5 * (2.0 * l + 1.0) * acc;
    }
    return c;
  }

  std::vector<double> inverse(std::span<const double> c) const {
    std::vector<double> f(N, 0.0);
    for (int j = 0; j < N; ++j) {
      double acc = 0.0;
      for (int l = 0; l < N; ++l) acc += c[l] * P[static_cast<std::size_t>(l) * N + j];
      f[j] = acc;
    }
    return f;
  }
};

// --------------------------------------------------------------------------

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  if (is_torus()) {
    torus_ = std::make_unique<Torus>(spec_.complex_dim, spec_.resolution, spec_.period, spec_.dealias);
    size_ = torus_->total;
    const double cell = std::pow(spec_.period / spec_.resolution, 2 * spec_.complex_dim);
    weights_.assign(size_, cell);
    ref_volume_ = std::pow(spec_.period, 2 * spec_.complex_dim);
    reference_ricci_ = 0.0;
  } else {
    sphere_ = std::make_unique<Sphere>(spec_.resolution);
    size_ = static_cast<std::size_t>(spec_.resolution);
    weights_.resize(size_);
    for (std::size_t j = 0; j < size_; ++j) weights_[j] = 2.0 * kPi * sphere_->w[j];
    ref_volume_ = 4.0 * kPi;
    // Round metric in the isothermal chart t = log tan(theta/2) has conformal
    // factor 1 - u^2; Ric/g = -1/2 d/du[(1 - u^2) d/du log(1 - u^2)].
    std::vector<double> flux(size_);
    for (std::size_t j = 0; j < size_; ++j) {
      const double u = sphere_->x[j];
      flux[j] = (1.0 - u * u) * (-2.0 * u / (1.0 - u * u));
    }
    const auto dflux = sphere_->matvec(sphere_->D, flux);
    double acc = 0.0;
    for (std::size_t j = 0; j < size_; ++j) acc += sphere_->w[j] * (-0.5 * dflux[j]);
    reference_ricci_ = acc / 2.0;
  }
}

Grid::~Grid() = default;

std::shared_ptr<const Grid> Grid::make(const GridSpec& spec) { return std::make_shared<const Grid>(spec); }

double Grid::spacing() const {
  return is_torus() ? spec_.period / spec_.resolution : kPi / spec_.resolution;
}

double Grid::coordinate(std::size_t node, int axis) const {
  if (!is_torus()) return sphere_->x[node];
  const int rank = 2 * spec_.complex_dim;
  std::size_t rem = node;
  int idx = 0;
  for (int a = rank - 1; a >= 0; --a) {
    const int i = static_cast<int>(rem % spec_.resolution);
    rem /= spec_.resolution;
    if (a == axis) idx = i;
  }
  return idx * spec_.period / spec_.resolution;
}

void Grid::require_torus(const char* what) const {
  if (!is_torus()) throw UnsupportedBackend(std::string(what) + " is only defined on the torus backend");
}

void Grid::require_sphere(const char* what) const {
  if (is_torus()) throw UnsupportedBackend(std::string(what) + " is only defined on the sphere backend");
}

double Grid::integrate_ref(std::span<const double> f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < size_; ++i) acc += weights_[i] * f[i];
  return acc;
}

std::vector<double> Grid::ref_laplacian(std::span<const double> f) const {
  if (is_torus()) {
    const auto spec = torus_->forward_real(f);
    return Torus::real_part(torus_->apply(spec, [&](std::size_t s) { return cd(torus_->lap_symbol(s)); }));
  }
  auto c = sphere_->forward(f);
  for (int l = 0; l < sphere_->N; ++l) c[l] *= -0.5 * l * (l + 1.0);
  return sphere_->inverse(c);
}

std::vector<double> Grid::ref_laplacian_solve(std::span<const double> rhs) const {
  if (is_torus()) {
    const auto spec = torus_->forward_real(rhs);
    return Torus::real_part(torus_->apply(spec, [&](std::size_t s) {
      const double sym = torus_->lap_symbol(s);
      return sym == 0.0 ? cd{} : cd(1.0 / sym);
    }));
  }
  auto c = sphere_->forward(rhs);
  c[0] = 0.0;
  for (int l = 1; l < sphere_->N; ++l) c[l] /= -0.5 * l * (l + 1.0);
  return sphere_->inverse(c);
}

std::vector<Herm> Grid::complex_hessian(std::span<const double> f) const {
  std::vector<Herm> out(size_);
  if (!is_torus()) {
    const auto lap = ref_laplacian(f);
    for (std::size_t i = 0; i < size_; ++i) out[i].a11 = lap[i];
    return out;
  }
  const auto& T = *torus_;
  const auto spec = T.forward_real(f);
  // H_{i jbar} = 1/2 [d_xi d_xj + d_yi d_yj + i (d_xi d_yj - d_yi d_xj)]
  auto component = [&](int i, int j) {
    return T.apply(spec, [&](std::size_t s) {
      return cd(0.5 * (T.d2(s, 2 * i, 2 * j) + T.d2(s, 2 * i + 1, 2 * j + 1)),
                0.5 * (T.d2(s, 2 * i, 2 * j + 1) - T.d2(s, 2 * i + 1, 2 * j)));
    });
  };
  const auto h11 = component(0, 0);
  for (std::size_t i = 0; i < size_; ++i) out[i].a11 = h11[i].real();
  if (spec_.complex_dim == 2) {
    const auto h22 = component(1, 1);
    const auto h12 = component(0, 1);
    for (std::size_t i = 0; i < size_; ++i) {
      out[i].a22 = h22[i].real();
      out[i].a12 = h12[i];
    }
  }
  return out;
}

std::vector<Covector> Grid::gradient(std::span<const double> f) const {
  std::vector<Covector> out(size_, Covector{});
  if (!is_torus()) {
    const auto df = du(f);
    for (std::size_t j = 0; j < size_; ++j) {
      const double u = sphere_->x[j];
      out[j][0] = -std::sqrt(0.5 * (1.0 - u * u)) * df[j];
    }
    return out;
  }
  const auto& T = *torus_;
  const auto spec = T.forward_real(f);
  const double r2 = std::sqrt(0.5);
  for (int i = 0; i < spec_.complex_dim; ++i) {
    const auto c = T.apply(spec, [&](std::size_t s) {
      return r2 * (T.d1(s, 2 * i) - cd(0.0, 1.0) * T.d1(s, 2 * i + 1));
    });
    for (std::size_t p = 0; p < size_; ++p) out[p][i] = c[p];
  }
  return out;
}

std::vector<cd> Grid::dz(std::span<const cd> f, int i) const {
  require_torus("dz");
  const auto& T = *torus_;
  const auto spec = T.forward_complex(f);
  return T.apply(spec, [&](std::size_t s) {
    return 0.5 * (T.d1(s, 2 * i) - cd(0.0, 1.0) * T.d1(s, 2 * i + 1));
  });
}

std::vector<cd> Grid::dzdz(std::span<const double> f, int i, int j) const {
  require_torus("dzdz");
  const auto& T = *torus_;
  const auto spec = T.forward_real(f);
  // d_zi d_zj = 1/4 [d_xi d_xj - d_yi d_yj - i (d_xi d_yj + d_yi d_xj)]
  return T.apply(spec, [&](std::size_t s) {
    return cd(0.25 * (T.d2(s, 2 * i, 2 * j) - T.d2(s, 2 * i + 1, 2 * j + 1)),
              -0.25 * (T.d2(s, 2 * i, 2 * j + 1) + T.d2(s, 2 * i + 1, 2 * j)));
  });
}

std::vector<double> Grid::du(std::span<const double> f) const {
  require_sphere("du");
  return sphere_->matvec(sphere_->D, f);
}

std::vector<double> Grid::duu(std::span<const double> f) const {
  require_sphere("duu");
  return sphere_->matvec(sphere_->D2, f);
}

std::vector<double> Grid::legendre_forward(std::span<const double> f) const {
  require_sphere("legendre_forward");
  return sphere_->forward(f);
}

std::vector<double> Grid::legendre_inverse(std::span<const double> c) const {
  require_sphere("legendre_inverse");
  return sphere_->inverse(c);
}

}  // namespace pcf
