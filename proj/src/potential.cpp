#include "pcf/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pcf/errors.hpp"

namespace pcf {

const char* to_string(PotentialSpec::Kind k) {
  switch (k) {
    case PotentialSpec::Kind::Zero: return "zero";
    case PotentialSpec::Kind::Fourier: return "fourier";
    case PotentialSpec::Kind::Legendre: return "legendre";
    case PotentialSpec::Kind::Random: return "random";
  }
  return "zero";
}

PotentialSpec::Kind potential_kind_from_string(const std::string& s) {
  if (s == "zero") return PotentialSpec::Kind::Zero;
  if (s == "fourier") return PotentialSpec::Kind::Fourier;
  if (s == "legendre") return PotentialSpec::Kind::Legendre;
  if (s == "random") return PotentialSpec::Kind::Random;
  throw SpecError("unknown potential kind '" + s + "'");
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

ScalarField evaluate_potential(const PotentialSpec& spec, const GridPtr& grid) {
  const std::size_t n = grid->size();
  std::vector<double> v(n, 0.0);
  switch (spec.kind) {
    case PotentialSpec::Kind::Zero:
      break;
    case PotentialSpec::Kind::Fourier: {
      if (!grid->is_torus()) throw SpecError("Fourier potential given for a sphere grid");
      const int rank = 2 * grid->dim();
      const double L = grid->spec().period;
      for (const auto& t : spec.terms) {
        if (!std::isfinite(t.cos_amp) || !std::isfinite(t.sin_amp))
          throw SpecError("non-finite Fourier coefficient");
        for (int a = rank; a < 4; ++a)
          if (t.mode[a] != 0) throw SpecError("Fourier mode has entries beyond the grid dimension");
        for (int a = 0; a < rank; ++a)
          if (2 * std::abs(t.mode[a]) >= grid->resolution())
            throw SpecError("Fourier mode is not resolved by the grid");
        for (std::size_t p = 0; p < n; ++p) {
          double arg = 0.0;
          for (int a = 0; a < rank; ++a) arg += t.mode[a] * grid->coordinate(p, a);
          arg *= 2.0 * std::numbers::pi / L;
          v[p] += t.cos_amp * std::cos(arg) + t.sin_amp * std::sin(arg);
        }
      }
      break;
    }
    case PotentialSpec::Kind::Legendre: {
      if (grid->is_torus()) throw SpecError("Legendre potential given for a torus grid");
      if (spec.legendre.size() > grid->size())
        throw SpecError("more Legendre coefficients than grid nodes");
      for (double c : spec.legendre)
        if (!std::isfinite(c)) throw SpecError("non-finite Legendre coefficient");
      std::vector<double> c(grid->size(), 0.0);
      std::copy(spec.legendre.begin(), spec.legendre.end(), c.begin());
      v = grid->legendre_inverse(c);
      break;
    }
    case PotentialSpec::Kind::Random:
      throw SpecError("random potential must be realized before evaluation");
  }
  return ScalarField(grid, std::move(v));
}

PotentialSpec realize_potential(const PotentialSpec& spec, const GridPtr& grid,
                                std::span<const Herm> base) {
  if (spec.kind != PotentialSpec::Kind::Random) return spec;
  if (spec.max_mode < 1) throw SpecError("random potential needs max_mode >= 1");
  if (!(spec.target_margin > 0.0 && spec.target_margin < 1.0))
    throw SpecError("random potential target_margin must lie in (0, 1)");

  SplitMix64 rng(spec.seed);
  PotentialSpec out;
  if (grid->is_torus()) {
    out.kind = PotentialSpec::Kind::Fourier;
    const int rank = 2 * grid->dim();
    const int K = spec.max_mode;
    if (2 * K >= grid->resolution()) throw SpecError("random max_mode is not resolved by the grid");
    std::array<int, 4> m{};
    const int side = 2 * K + 1;
    int count = 1;
    for (int a = 0; a < rank; ++a) count *= side;
    for (int c = 0; c < count; ++c) {
      int rem = c;
      for (int a = rank - 1; a >= 0; --a) {
        m[a] = rem % side - K;
        rem /= side;
      }
      // Keep one representative of each +-m pair: first nonzero entry positive.
      int first = 0;
      for (int a = 0; a < rank; ++a)
        if (m[a] != 0) {
          first = m[a];
          break;
        }
      if (first <= 0) continue;
      double k2 = 0.0;
      for (int a = 0; a < rank; ++a) k2 += m[a] * m[a];
      const double damp = 1.0 / (1.0 + k2);
      FourierTerm t;
      t.mode = m;
      t.cos_amp = damp * rng.symmetric();
      t.sin_amp = damp * rng.symmetric();
      out.terms.push_back(t);
    }
  } else {
    out.kind = PotentialSpec::Kind::Legendre;
    if (spec.max_mode >= grid->resolution()) throw SpecError("random max_mode is not resolved by the grid");
    out.legendre.assign(spec.max_mode + 1, 0.0);
    for (int l = 1; l <= spec.max_mode; ++l) out.legendre[l] = rng.symmetric() / l;
  }

  const auto shape = evaluate_potential(out, grid);
  const auto hess = grid->complex_hessian(shape.values());
  const int n = grid->dim();
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid->size(); ++p)
    lowest = std::min(lowest, relative_eigenvalues(base[p], hess[p], n)[0]);
  if (!(lowest < 0.0)) throw SpecError("random potential has no negative curvature direction");
  const double s = (1.0 - spec.target_margin) / (-lowest);
  for (auto& t : out.terms) {
    t.cos_amp *= s;
    t.sin_amp *= s;
  }
  for (auto& c : out.legendre) c *= s;
  return out;
}

}  // namespace pcf
