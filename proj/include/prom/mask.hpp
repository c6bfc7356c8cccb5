#ifndef PROM_MASK_HPP
#define PROM_MASK_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "prom/grid.hpp"
#include "prom/rng.hpp"

namespace prom {

// Full2D: one Bernoulli probability per k-space element (theta length D).
// Lines1D: one probability per phase-encode column (theta length W); a
// selected column is acquired for all H rows.
enum class MaskKind { Full2D, Lines1D };

// Number of free mask parameters for a kind on a grid.
std::int64_t mask_length(MaskKind kind, GridShape shape);

// Independent Bernoulli sampling probabilities theta_i in [0,1].
struct MaskDistribution {
  GridShape shape;
  MaskKind kind = MaskKind::Full2D;
  std::vector<double> theta;
};

// Relaxed mask sample, every entry strictly inside (0,1).
struct SoftMask {
  GridShape shape;
  MaskKind kind = MaskKind::Full2D;
  std::vector<double> values;
};

// Hard mask sample, entries exactly 0.0 or 1.0.
struct BinaryMask {
  GridShape shape;
  MaskKind kind = MaskKind::Full2D;
  std::vector<double> values;
};

// Paired Gumbel(0,1) draws used by the relaxed Bernoulli reparameterization.
struct GumbelNoise {
  std::vector<double> g1;
  std::vector<double> g0;
};

// theta_i i.i.d. uniform on [0.45, 0.55]: a near-maximum-entropy start that
// keeps the log odds far from saturation.
MaskDistribution init_distribution(GridShape shape, MaskKind kind, std::uint64_t seed);

// Clamp used before the log-odds transform; the projection can produce exact
// 0/1 entries and those must map to finite logits.
inline constexpr double kLogitClamp = 1e-6;

// rho_i = log(theta_i / (1 - theta_i)) on theta clamped to
// [kLogitClamp, 1 - kLogitClamp].
std::vector<double> log_odds(const MaskDistribution& dist);

inline double gumbel_from_uniform(double u) {
  return -std::log(-std::log(u));
}

GumbelNoise sample_gumbel(std::size_t length, Rng& rng);

// Soft mask values sigmoid((rho + g1 - g0) / tau). tau must be positive.
SoftMask sample_soft(GridShape shape, MaskKind kind, std::span<const double> rho,
                     const GumbelNoise& noise, double tau);

// Hard threshold at 0.5 (inclusive). Gradients are routed through the soft
// values unchanged; the backward identity lives in the optimizer chain.
BinaryMask straight_through(const SoftMask& soft);

// The S entries with the largest theta, ties broken by lowest vectorized
// index. Used for every reported evaluation so results carry no sampling
// noise.
BinaryMask deterministic_mask(const MaskDistribution& dist, std::int64_t budget);

// Elementwise mean of theta across runs (all same shape and kind).
MaskDistribution model_average(std::span<const MaskDistribution> runs);

// Replicate a Lines1D vector (length W) down all H rows; returns length D.
std::vector<double> broadcast_lines(std::span<const double> lines, GridShape shape);

// Grid-length view of any mask: Full2D values as-is, Lines1D broadcast.
std::vector<double> mask_as_grid(const BinaryMask& mask);

// Equispaced column mask with a fully-sampled central block:
// round(center_fraction * W) center columns plus equally spaced columns at a
// seed-derived offset, round(W / alpha) columns in total.
BinaryMask equispaced_mask(GridShape shape, double alpha, double center_fraction,
                           std::uint64_t seed);

// Variable-density 2D mask: exactly floor(D / alpha) elements drawn without
// replacement with weight exp(-r^2 / (2 sigma^2)), sigma =
// sigma_fraction * min(H, W), r the distance from the DC bin.
inline constexpr double kDefaultGaussianSigmaFraction = 1.0 / 6.0;
BinaryMask gaussian_mask(GridShape shape, double alpha, double sigma_fraction,
                         std::uint64_t seed);

// Sum(theta) / length: the expected sampled fraction.
double expected_density(const MaskDistribution& dist);

}  // namespace prom

#endif  // PROM_MASK_HPP
