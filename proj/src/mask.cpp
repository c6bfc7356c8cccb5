#include "prom/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "prom/errors.hpp"

namespace prom {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_kind_length(MaskKind kind, GridShape shape, std::size_t len,
                       const char* who) {
  if (std::int64_t(len) != mask_length(kind, shape)) {
    throw ValidationError(std::string(who) + ": value length does not match mask kind");
  }
}

}  // namespace

std::int64_t mask_length(MaskKind kind, GridShape shape) {
  return kind == MaskKind::Full2D ? shape.elements() : shape.width;
}

MaskDistribution init_distribution(GridShape shape, MaskKind kind, std::uint64_t seed) {
  Rng rng(seed);
  MaskDistribution dist{shape, kind, {}};
  dist.theta.resize(std::size_t(mask_length(kind, shape)));
  for (double& t : dist.theta) t = rng.uniform(0.45, 0.55);
  return dist;
}

std::vector<double> log_odds(const MaskDistribution& dist) {
  std::vector<double> rho(dist.theta.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double t = std::clamp(dist.theta[i], kLogitClamp, 1.0 - kLogitClamp);
    rho[i] = std::log(t / (1.0 - t));
  }
  return rho;
}

GumbelNoise sample_gumbel(std::size_t length, Rng& rng) {
  GumbelNoise noise;
  noise.g1.resize(length);
  noise.g0.resize(length);
  for (double& g : noise.g1) g = gumbel_from_uniform(rng.uniform());
  for (double& g : noise.g0) g = gumbel_from_uniform(rng.uniform());
  return noise;
}

SoftMask sample_soft(GridShape shape, MaskKind kind, std::span<const double> rho,
                     const GumbelNoise& noise, double tau) {
  if (tau <= 0.0) {
    throw ConfigError("sample_soft: tau must be positive");
  }
  if (noise.g1.size() != rho.size() || noise.g0.size() != rho.size()) {
    throw ValidationError("sample_soft: noise length does not match rho");
  }
  SoftMask soft{shape, kind, std::vector<double>(rho.size())};
  for (std::size_t i = 0; i < rho.size(); ++i) {
    soft.values[i] = sigmoid((rho[i] + noise.g1[i] - noise.g0[i]) / tau);
  }
  return soft;
}

BinaryMask straight_through(const SoftMask& soft) {
  BinaryMask hard{soft.shape, soft.kind, std::vector<double>(soft.values.size())};
  for (std::size_t i = 0; i < soft.values.size(); ++i) {
    hard.values[i] = soft.values[i] >= 0.5 ? 1.0 : 0.0;
  }
  return hard;
}

BinaryMask deterministic_mask(const MaskDistribution& dist, std::int64_t budget) {
  const std::int64_t len = std::int64_t(dist.theta.size());
  if (budget < 0 || budget > len) {
    throw ValidationError("deterministic_mask: budget out of [0, length]");
  }
  std::vector<std::size_t> order(dist.theta.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist.theta[a] > dist.theta[b];  // stable keeps lowest index on ties
  });
  BinaryMask mask{dist.shape, dist.kind, std::vector<double>(dist.theta.size(), 0.0)};
  for (std::int64_t k = 0; k < budget; ++k) mask.values[order[std::size_t(k)]] = 1.0;
  return mask;
}

MaskDistribution model_average(std::span<const MaskDistribution> runs) {
  if (runs.empty()) {
    throw ValidationError("model_average: need at least one distribution");
  }
  const MaskDistribution& first = runs[0];
  for (const MaskDistribution& d : runs) {
    if (d.shape != first.shape || d.kind != first.kind ||
        d.theta.size() != first.theta.size()) {
      throw ValidationError("model_average: distributions differ in shape or kind");
    }
  }
  MaskDistribution avg{first.shape, first.kind,
                       std::vector<double>(first.theta.size(), 0.0)};
  for (const MaskDistribution& d : runs) {
    for (std::size_t i = 0; i < avg.theta.size(); ++i) avg.theta[i] += d.theta[i];
  }
  const double inv = 1.0 / double(runs.size());
  for (double& t : avg.theta) t *= inv;
  return avg;
}

std::vector<double> broadcast_lines(std::span<const double> lines, GridShape shape) {
  if (std::int64_t(lines.size()) != shape.width) {
    throw ValidationError("broadcast_lines: line vector length does not match width");
  }
  std::vector<double> grid(std::size_t(shape.elements()));
  for (int r = 0; r < shape.height; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      grid[std::size_t(r) * shape.width + c] = lines[std::size_t(c)];
    }
  }
  return grid;
}

std::vector<double> mask_as_grid(const BinaryMask& mask) {
  check_kind_length(mask.kind, mask.shape, mask.values.size(), "mask_as_grid");
  if (mask.kind == MaskKind::Full2D) return mask.values;
  return broadcast_lines(mask.values, mask.shape);
}

BinaryMask equispaced_mask(GridShape shape, double alpha, double center_fraction,
                           std::uint64_t seed) {
  if (alpha < 1.0) throw ConfigError("equispaced_mask: alpha must be >= 1");
  if (center_fraction < 0.0 || center_fraction >= 1.0) {
    throw ConfigError("equispaced_mask: center_fraction must be in [0, 1)");
  }
  const int w = shape.width;
  const int n_center = int(std::llround(center_fraction * w));
  const int budget = int(std::llround(double(w) / alpha));
  if (budget < n_center) {
    throw ConfigError(
        "equispaced_mask: column budget " + std::to_string(budget) +
        " is smaller than the fully-sampled center block (" + std::to_string(n_center) +
        " columns); use a smaller center_fraction");
  }

  std::vector<double> lines(std::size_t(w), 0.0);
  const int center_lo = (w - n_center) / 2;
  for (int c = center_lo; c < center_lo + n_center; ++c) lines[std::size_t(c)] = 1.0;

  const int n_rem = budget - n_center;
  if (n_rem > 0) {
    std::vector<int> candidates;
    candidates.reserve(std::size_t(w - n_center));
    for (int c = 0; c < w; ++c) {
      if (lines[std::size_t(c)] == 0.0) candidates.push_back(c);
    }
    const double stride = double(candidates.size()) / double(n_rem);
    Rng rng(seed);
    const std::uint64_t offset_max = std::max<std::uint64_t>(1, std::uint64_t(stride));
    const double offset = double(rng.below(offset_max));
    for (int k = 0; k < n_rem; ++k) {
      const auto pos = std::size_t(offset + stride * k);
      lines[std::size_t(candidates[pos])] = 1.0;
    }
  }
  return BinaryMask{shape, MaskKind::Lines1D, std::move(lines)};
}

BinaryMask gaussian_mask(GridShape shape, double alpha, double sigma_fraction,
                         std::uint64_t seed) {
  if (alpha < 1.0) throw ConfigError("gaussian_mask: alpha must be >= 1");
  if (sigma_fraction <= 0.0) {
    throw ConfigError("gaussian_mask: sigma_fraction must be positive");
  }
  const std::int64_t d = shape.elements();
  const auto budget = std::int64_t(std::floor(double(d) / alpha));
  BinaryMask mask{shape, MaskKind::Full2D, std::vector<double>(std::size_t(d), 0.0)};
  if (budget >= d) {
    std::fill(mask.values.begin(), mask.values.end(), 1.0);
    return mask;
  }

  const double sigma = sigma_fraction * std::min(shape.height, shape.width);
  const int cr = shape.height / 2;  // DC bin of the centered k-space layout
  const int cc = shape.width / 2;

  // Weighted sampling without replacement via exponential keys: taking the
  // `budget` smallest values of -log(u_i)/w_i draws indices with probability
  // proportional to w_i, one by one without replacement.
  Rng rng(seed);
  std::vector<double> keys(std::size_t(d));
  for (int r = 0; r < shape.height; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      const double dr = r - cr;
      const double dc = c - cc;
      const double weight = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      keys[std::size_t(r) * shape.width + c] = -std::log(rng.uniform()) / weight;
    }
  }
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  for (std::int64_t k = 0; k < budget; ++k) mask.values[order[std::size_t(k)]] = 1.0;
  return mask;
}

double expected_density(const MaskDistribution& dist) {
  if (dist.theta.empty()) throw ValidationError("expected_density: empty distribution");
  const double sum = std::accumulate(dist.theta.begin(), dist.theta.end(), 0.0);
  return sum / double(dist.theta.size());
}

}  // namespace prom
