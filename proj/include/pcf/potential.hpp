#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcf/fields.hpp"

namespace pcf {

/// One real Fourier mode a cos(2 pi m.x / L) + b sin(2 pi m.x / L) on the torus.
struct FourierTerm {
  std::array<int, 4> mode{};
  double cos_amp = 0.0;
  double sin_amp = 0.0;
  bool operator==(const FourierTerm&) const = default;
};

/// Description of a smooth Kähler potential (background rho or initial phi).
///
/// Random potentials are truncated series with coefficients drawn from a
/// seeded SplitMix64 stream (uniform in [-1, 1], damped by 1/(1 + |m|^2) on the
/// torus and 1/l on the sphere), then rescaled so that the resulting metric
/// has exactly the requested margin relative to the metric it perturbs.
struct PotentialSpec {
  enum class Kind { Zero, Fourier, Legendre, Random };
  Kind kind = Kind::Zero;
  std::vector<FourierTerm> terms;  // torus
  std::vector<double> legendre;    // sphere: coefficient of P_l at index l
  int max_mode = 2;                // random: |m_a| <= max_mode, or l <= max_mode
  double target_margin = 0.5;      // random
  std::uint64_t seed = 0;          // random

  bool operator==(const PotentialSpec&) const = default;
};

const char* to_string(PotentialSpec::Kind k);
PotentialSpec::Kind potential_kind_from_string(const std::string& s);

/// Portable SplitMix64 stream; uniform() maps the top 53 bits to [0, 1).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();
  double symmetric() { return 2.0 * uniform() - 1.0; }

 private:
  std::uint64_t state_;
};

/// Evaluates an explicit (non-random) potential on the grid.
ScalarField evaluate_potential(const PotentialSpec& spec, const GridPtr& grid);

/// Replaces a Random spec by the explicit series it denotes.  `base` is the
/// metric the potential perturbs (reference frame components); the scaling
/// makes min over nodes of the smallest eigenvalue of base^{-1}(base + ddbar phi)
/// equal to target_margin.  Non-random specs are returned unchanged.
PotentialSpec realize_potential(const PotentialSpec& spec, const GridPtr& grid,
                                std::span<const Herm> base);

}  // namespace pcf
