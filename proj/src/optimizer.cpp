#include "prom/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prom/fourier.hpp"

namespace prom {

namespace {

constexpr std::uint64_t kThetaInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

double sum_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::int64_t target_budget(std::int64_t length, double alpha) {
  return std::int64_t(std::floor(double(length) / alpha));
}

// g(lambda) = sum_i clip(tt_i - lambda, 0, 1) - S
double budget_excess(std::span<const double> tt, double lambda, double budget) {
  double sum = 0.0;
  for (double t : tt) sum += std::clamp(t - lambda, 0.0, 1.0);
  return sum - budget;
}

}  // namespace

void ProMConfig::validate() const {
  if (alpha < 1.0) throw ConfigError("config: alpha must be >= 1");
  if (iterations < 1) throw ConfigError("config: iterations must be positive");
  if (learning_rate <= 0.0) throw ConfigError("config: learning rate must be positive");
  if (batch_size < 1) throw ConfigError("config: batch size must be positive");
  if (mc_samples < 1) throw ConfigError("config: mc_samples must be positive");
  if (tau_start <= 0.0 || tau_end <= 0.0) throw ConfigError("config: tau must be positive");
  if (tau_end > tau_start) throw ConfigError("config: tau_end must be <= tau_start");
  if (explore_fraction < 0.0 || explore_fraction >= 1.0) {
    throw ConfigError("config: explore_fraction must be in [0, 1)");
  }
  if (constrain_end_fraction <= explore_fraction || constrain_end_fraction > 1.0) {
    throw ConfigError("config: constrain_end_fraction must be in (explore_fraction, 1]");
  }
  if (anneal_exponent <= 0.0) throw ConfigError("config: anneal_exponent must be positive");
}

// --- budget projection ------------------------------------------------------

double solve_lambda(std::span<const double> theta_tilde, std::int64_t budget) {
  const std::int64_t n = std::int64_t(theta_tilde.size());
  if (n == 0) throw ValidationError("solve_lambda: empty input");
  if (budget < 0 || budget > n) {
    throw ValidationError("solve_lambda: budget out of [0, n]");
  }
  const auto [min_it, max_it] = std::minmax_element(theta_tilde.begin(), theta_tilde.end());
  if (budget == 0) return *max_it;

  const double s = double(budget);
  double lo = *min_it - 1.0;  // g(lo) = n - S >= 0
  double hi = *max_it;        // g(hi) = -S < 0

  // g is continuous, piecewise linear and non-increasing, so its zero set is
  // a closed interval. Bisect to each edge and return the midpoint; every
  // lambda in the interval yields the same projected vector.
  constexpr int kMaxBisect = 200;
  double left_lo = lo, left_hi = hi;  // invariant: g(left_lo) > 0 or == 0 at edge
  if (budget_excess(theta_tilde, lo, s) <= 0.0) {
    left_hi = lo;
  } else {
    for (int i = 0; i < kMaxBisect && left_hi - left_lo > 1e-15; ++i) {
      const double mid = 0.5 * (left_lo + left_hi);
      if (budget_excess(theta_tilde, mid, s) > 0.0) {
        left_lo = mid;
      } else {
        left_hi = mid;
      }
    }
  }
  double right_lo = lo, right_hi = hi;  // invariant: g(right_hi) < 0
  for (int i = 0; i < kMaxBisect && right_hi - right_lo > 1e-15; ++i) {
    const double mid = 0.5 * (right_lo + right_hi);
    if (budget_excess(theta_tilde, mid, s) >= 0.0) {
      right_lo = mid;
    } else {
      right_hi = mid;
    }
  }
  return 0.5 * (left_hi + right_lo);
}

std::vector<double> project(std::span<const double> theta_tilde, std::int64_t budget) {
  const double shift = std::max(0.0, solve_lambda(theta_tilde, budget));
  std::vector<double> theta(theta_tilde.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] = std::clamp(theta_tilde[i] - shift, 0.0, 1.0);
  }
  return theta;
}

// --- schedules ---------------------------------------------------------------

std::int64_t anneal_budget(int iteration, std::int64_t length, const ProMConfig& config) {
  const int i_min = int(std::floor(config.explore_fraction * config.iterations));
  const int i_max = int(std::floor(config.constrain_end_fraction * config.iterations));
  if (iteration < i_min) return length;
  if (iteration >= i_max) return target_budget(length, config.alpha);
  const double d_target = 1.0 / config.alpha;
  const double t = double(iteration - i_min) / double(i_max - i_min);
  const double d_cur =
      d_target + (1.0 - d_target) * std::pow(1.0 - t, config.anneal_exponent);
  return std::llround(d_cur * double(length));
}

double anneal_tau(int iteration, const ProMConfig& config) {
  if (config.iterations == 1) return config.tau_end;
  const double t = double(iteration) / double(config.iterations - 1);
  return config.tau_start + (config.tau_end - config.tau_start) * t;
}

Phase phase_at(int iteration, const ProMConfig& config) {
  const int i_min = int(std::floor(config.explore_fraction * config.iterations));
  const int i_max = int(std::floor(config.constrain_end_fraction * config.iterations));
  if (iteration < i_min) return Phase::Exploration;
  if (iteration < i_max) return Phase::Constraining;
  return Phase::Exploitation;
}

ScheduleState schedule_at(int iteration, std::int64_t length, const ProMConfig& config) {
  return ScheduleState{anneal_budget(iteration, length, config),
                       anneal_tau(iteration, config), phase_at(iteration, config)};
}

// --- losses -------------------------------------------------------------------

double loss_mse(const RealGrid& reconstruction, const RealGrid& target) {
  if (reconstruction.shape != target.shape) {
    throw ValidationError("loss_mse: shape mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < reconstruction.data.size(); ++i) {
    const double d = reconstruction.data[i] - target.data[i];
    sum += d * d;
  }
  return sum / double(reconstruction.data.size());
}

RealGrid loss_mse_grad(const RealGrid& reconstruction, const RealGrid& target) {
  if (reconstruction.shape != target.shape) {
    throw ValidationError("loss_mse_grad: shape mismatch");
  }
  RealGrid grad = RealGrid::zeros(reconstruction.shape);
  const double scale = 2.0 / double(reconstruction.data.size());
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    grad.data[i] = scale * (reconstruction.data[i] - target.data[i]);
  }
  return grad;
}

// --- gradient machinery ---------------------------------------------------------

SampleEval evaluate_mask_sample(const MaskDistribution& dist, std::span<const double> rho,
                                const GumbelNoise& noise, double tau,
                                const TrainItem& item, const ReconstructionLoss& loss,
                                MaskForwardMode mode) {
  if (item.kspace.shape != dist.shape) {
    throw ValidationError("evaluate_mask_sample: grid shape does not match distribution");
  }
  const SoftMask soft = sample_soft(dist.shape, dist.kind, rho, noise, tau);

  // Forward: hard mask via straight-through in training, the relaxed mask in
  // Soft mode.
  std::vector<double> mask_values;
  if (mode == MaskForwardMode::Hard) {
    mask_values = straight_through(soft).values;
  } else {
    mask_values = soft.values;
  }
  const std::vector<double> grid_mask = dist.kind == MaskKind::Lines1D
                                            ? broadcast_lines(mask_values, dist.shape)
                                            : mask_values;

  const ComplexGrid masked = apply_mask(item.kspace, grid_mask);
  const ComplexGrid image = inverse_transform(masked);
  const RealGrid reconstruction = magnitude(image);

  SampleEval eval;
  eval.loss = loss.value(reconstruction, item.target);

  // Backward, evaluated at the forward values.
  const RealGrid recon_cot = loss.gradient(reconstruction, item.target);
  const ComplexGrid image_cot = magnitude_vjp(image, recon_cot);
  const ComplexGrid kspace_cot = inverse_transform_vjp(image_cot);
  std::vector<double> mask_grad = apply_mask_vjp(item.kspace, kspace_cot);

  if (dist.kind == MaskKind::Lines1D) {
    // Column sums: each line parameter feeds every row of its column.
    std::vector<double> line_grad(std::size_t(dist.shape.width), 0.0);
    for (int r = 0; r < dist.shape.height; ++r) {
      for (int c = 0; c < dist.shape.width; ++c) {
        line_grad[std::size_t(c)] += mask_grad[std::size_t(r) * dist.shape.width + c];
      }
    }
    mask_grad = std::move(line_grad);
  }

  // Straight-through passes gradients to the soft values unchanged; then
  // sigma'((rho + g1 - g0)/tau) d/d rho = soft (1 - soft) / tau, and
  // d rho / d theta = 1 / (theta_c (1 - theta_c)) on the clamped theta.
  eval.dloss_dtheta.resize(mask_grad.size());
  for (std::size_t i = 0; i < mask_grad.size(); ++i) {
    const double sv = soft.values[i];
    const double tc = std::clamp(dist.theta[i], kLogitClamp, 1.0 - kLogitClamp);
    eval.dloss_dtheta[i] = mask_grad[i] * sv * (1.0 - sv) / tau / (tc * (1.0 - tc));
  }
  return eval;
}

namespace {

// Shared core of the objective/gradient estimators: mean over batch items and
// mc_samples hard-mask draws, noise drawn in a fixed order from `rng`.
SampleEval estimate_batch(const MaskDistribution& dist,
                          std::span<const TrainItem* const> batch, int mc_samples,
                          double tau, Rng& rng, const ReconstructionLoss& loss) {
  if (batch.empty()) throw ValidationError("estimate: empty batch");
  const std::vector<double> rho = log_odds(dist);
  SampleEval total;
  total.dloss_dtheta.assign(dist.theta.size(), 0.0);
  for (const TrainItem* item : batch) {
    for (int l = 0; l < mc_samples; ++l) {
      const GumbelNoise noise = sample_gumbel(dist.theta.size(), rng);
      const SampleEval eval = evaluate_mask_sample(dist, rho, noise, tau, *item, loss,
                                                   MaskForwardMode::Hard);
      total.loss += eval.loss;
      for (std::size_t i = 0; i < total.dloss_dtheta.size(); ++i) {
        total.dloss_dtheta[i] += eval.dloss_dtheta[i];
      }
    }
  }
  const double inv = 1.0 / (double(batch.size()) * double(mc_samples));
  total.loss *= inv;
  for (double& g : total.dloss_dtheta) g *= inv;
  return total;
}

std::vector<const TrainItem*> item_pointers(std::span<const TrainItem> items) {
  std::vector<const TrainItem*> ptrs;
  ptrs.reserve(items.size());
  for (const TrainItem& item : items) ptrs.push_back(&item);
  return ptrs;
}

}  // namespace

double objective_estimate(const MaskDistribution& dist, std::span<const TrainItem> batch,
                          int mc_samples, double tau, Rng& rng,
                          const ReconstructionLoss& loss) {
  const std::vector<const TrainItem*> ptrs = item_pointers(batch);
  return estimate_batch(dist, ptrs, mc_samples, tau, rng, loss).loss;
}

std::vector<double> gradient_estimate(const MaskDistribution& dist,
                                      std::span<const TrainItem> batch, int mc_samples,
                                      double tau, Rng& rng,
                                      const ReconstructionLoss& loss) {
  const std::vector<const TrainItem*> ptrs = item_pointers(batch);
  return estimate_batch(dist, ptrs, mc_samples, tau, rng, loss).dloss_dtheta;
}

// --- optimizer ------------------------------------------------------------------

std::vector<double> adam_step(AdamState& state, std::span<const double> theta,
                              std::span<const double> gradient, double learning_rate) {
  if (theta.size() != gradient.size() || theta.size() != state.first_moment.size()) {
    throw ValidationError("adam_step: size mismatch");
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
  std::vector<double> theta_tilde(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = gradient[i];
    state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    state.second_moment[i] =
        state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.first_moment[i] / bc1;
    const double v_hat = state.second_moment[i] / bc2;
    theta_tilde[i] = theta[i] - learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
  }
  return theta_tilde;
}

namespace {

void check_dataset(std::span<const TrainItem> dataset) {
  if (dataset.empty()) throw ValidationError("optimize: empty dataset");
  const GridShape shape = dataset[0].kspace.shape;
  for (const TrainItem& item : dataset) {
    item.kspace.check_size();
    item.target.check_size();
    if (item.kspace.shape != shape || item.target.shape != shape) {
      throw ValidationError("optimize: dataset grids must share one shape");
    }
  }
}

const ReconstructionLoss& resolve_loss(const ProMConfig& config,
                                       const ReconstructionLoss* custom,
                                       const MseLoss& mse) {
  if (config.loss == LossKind::Pluggable) {
    if (custom == nullptr) {
      throw ConfigError("optimize: pluggable loss selected but none provided");
    }
    return *custom;
  }
  return mse;
}

// The training loop shared by single-image and dataset optimization. The
// batch and noise streams are independent generators, so a single-item
// dataset with batch_size 1 reproduces the single-image path bit for bit.
OptimizeResult optimize_loop(std::span<const TrainItem> dataset, const ProMConfig& config,
                             const ReconstructionLoss* custom_loss, bool batched) {
  config.validate();
  check_dataset(dataset);
  const MseLoss mse;
  const ReconstructionLoss& loss = resolve_loss(config, custom_loss, mse);

  const GridShape shape = dataset[0].kspace.shape;
  MaskDistribution dist =
      init_distribution(shape, config.mask_kind, derive_seed(config.seed, kThetaInitStream));
  const std::int64_t length = std::int64_t(dist.theta.size());

  Rng batch_rng(derive_seed(config.seed, kBatchStream));
  Rng noise_rng(derive_seed(config.seed, kNoiseStream));
  AdamState adam = AdamState::zeros(dist.theta.size());
  TrainTrace trace;
  trace.records.reserve(std::size_t(config.iterations));

  std::vector<TrainItem> batch_storage;
  std::vector<std::size_t> index_pool(dataset.size());
  std::iota(index_pool.begin(), index_pool.end(), std::size_t{0});

  for (int it = 0; it < config.iterations; ++it) {
    const double tau = anneal_tau(it, config);

    std::span<const TrainItem> batch = dataset;
    if (batched) {
      const std::size_t n = dataset.size();
      const auto want = std::size_t(config.batch_size);
      batch_storage.clear();
      if (n < want) {
        for (std::size_t k = 0; k < want; ++k) {
          batch_storage.push_back(dataset[batch_rng.below(n)]);  // with replacement
        }
      } else {
        // Partial Fisher-Yates: batch_size distinct items.
        for (std::size_t k = 0; k < want; ++k) {
          const std::size_t j = k + std::size_t(batch_rng.below(n - k));
          std::swap(index_pool[k], index_pool[j]);
          batch_storage.push_back(dataset[index_pool[k]]);
        }
      }
      batch = batch_storage;
    }

    const SampleEval eval =
        estimate_batch(dist, batch, config.mc_samples, tau, noise_rng, loss);
    if (!std::isfinite(eval.loss) || !all_finite(eval.dloss_dtheta)) {
      throw NumericalFailure(it, "optimize: non-finite loss or gradient",
                             std::move(trace));
    }

    const std::vector<double> theta_tilde =
        adam_step(adam, dist.theta, eval.dloss_dtheta, config.learning_rate);
    if (!all_finite(theta_tilde)) {
      throw NumericalFailure(it, "optimize: non-finite parameter update",
                             std::move(trace));
    }

    const std::int64_t budget = anneal_budget(it, length, config);
    dist.theta = project(theta_tilde, budget);

    trace.records.push_back(TrainTrace::Record{it, eval.loss, sum_of(dist.theta), budget,
                                               tau, double(budget) / double(length)});
  }
  return OptimizeResult{std::move(dist), std::move(trace)};
}

}  // namespace

OptimizeResult optimize_single(const ComplexGrid& kspace, const RealGrid& target,
                               const ProMConfig& config,
                               const ReconstructionLoss* custom_loss) {
  TrainItem item{kspace, target};
  return optimize_loop(std::span<const TrainItem>(&item, 1), config, custom_loss,
                       /*batched=*/false);
}

OptimizeResult optimize_dataset(std::span<const TrainItem> dataset,
                                const ProMConfig& config,
                                const ReconstructionLoss* custom_loss) {
  return optimize_loop(dataset, config, custom_loss, /*batched=*/true);
}

RunProMResult run_prom_full(std::span<const TrainItem> dataset, const ProMConfig& config,
                            int num_runs, const ReconstructionLoss* custom_loss) {
  if (num_runs < 1) throw ConfigError("run_prom: num_runs must be >= 1");
  std::vector<MaskDistribution> solutions;
  solutions.reserve(std::size_t(num_runs));
  TrainTrace first_trace;
  for (int r = 0; r < num_runs; ++r) {
    ProMConfig run_config = config;
    run_config.seed = r == 0 ? config.seed : derive_seed(config.seed, std::uint64_t(r));
    OptimizeResult result = optimize_dataset(dataset, run_config, custom_loss);
    if (r == 0) first_trace = std::move(result.trace);
    solutions.push_back(std::move(result.distribution));
  }
  MaskDistribution averaged = model_average(solutions);
  const std::int64_t budget =
      target_budget(std::int64_t(averaged.theta.size()), config.alpha);
  BinaryMask mask = deterministic_mask(averaged, budget);
  return RunProMResult{std::move(mask), std::move(averaged), std::move(first_trace)};
}

BinaryMask run_prom(std::span<const TrainItem> dataset, const ProMConfig& config,
                    int num_runs, const ReconstructionLoss* custom_loss) {
  return run_prom_full(dataset, config, num_runs, custom_loss).mask;
}

}  // namespace prom
