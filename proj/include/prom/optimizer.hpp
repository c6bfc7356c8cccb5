#ifndef PROM_OPTIMIZER_HPP
#define PROM_OPTIMIZER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "prom/grid.hpp"
#include "prom/loss.hpp"
#include "prom/mask.hpp"
#include "prom/rng.hpp"

namespace prom {

// Constrained stochastic mask optimization: Monte-Carlo objective over
// relaxed Bernoulli mask samples, analytic gradient through the zero-fill
// reconstruction chain, Adam updates on theta, and a Euclidean projection
// onto { theta in [0,1]^n : sum(theta) <= S } with S annealed over three
// phases (exploration, constraining, exploitation).

enum class LossKind { Mse, Pluggable };

struct ProMConfig {
  double alpha = 4.0;                   // acceleration factor, >= 1
  int iterations = 2500;
  double learning_rate = 0.01;
  int batch_size = 32;
  int mc_samples = 4;                   // mask draws per batch item
  double tau_start = 1.0;
  double tau_end = 0.03;
  double explore_fraction = 0.2;        // phase boundary i_min / iterations
  double constrain_end_fraction = 0.5;  // phase boundary i_max / iterations
  std::uint64_t seed = 0;
  MaskKind mask_kind = MaskKind::Full2D;
  LossKind loss = LossKind::Mse;
  double anneal_exponent = 1.0;         // curvature of the budget schedule

  void validate() const;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(std::size_t n) {
    return AdamState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0};
  }
};

enum class Phase { Exploration, Constraining, Exploitation };

struct ScheduleState {
  std::int64_t current_budget = 0;
  double current_tau = 0.0;
  Phase phase = Phase::Exploration;
};

struct TrainTrace {
  struct Record {
    int iteration;
    double loss;
    double sum_theta;
    std::int64_t budget;
    double tau;
    double dense_rate;  // budget / parameter count
  };
  std::vector<Record> records;
};

// Optimization aborted on a non-finite value; carries the iteration index and
// whatever trace was accumulated before the failure.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(int iteration, const std::string& what, TrainTrace trace)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration(iteration),
        partial_trace(std::move(trace)) {}

  int iteration;
  TrainTrace partial_trace;
};

struct TrainItem {
  ComplexGrid kspace;  // fully sampled, centered layout
  RealGrid target;     // fully sampled magnitude image
};

// --- budget projection ------------------------------------------------------

// Root of g(lambda) = sum_i min(1, max(0, tt_i - lambda)) - S, found by
// bisection on [min(tt) - 1, max(tt)]. g is monotone non-increasing; when its
// zero set is an interval the midpoint is returned. S = 0 returns max(tt).
double solve_lambda(std::span<const double> theta_tilde, std::int64_t budget);

// min(1, max(0, tt - max(0, lambda*))): the Euclidean projection of tt onto
// { theta in [0,1]^n : sum(theta) <= S }.
std::vector<double> project(std::span<const double> theta_tilde, std::int64_t budget);

// --- schedules ---------------------------------------------------------------

// Budget at `iteration` for a parameter vector of length `length`:
// exploration (S = length), then the annealed dense rate
// d = d_target + (1 - d_target) * (1 - t)^p with d_target = 1/alpha, then the
// exploitation budget floor(length / alpha).
std::int64_t anneal_budget(int iteration, std::int64_t length, const ProMConfig& config);

// Linear temperature schedule from tau_start (iteration 0) to tau_end (last).
double anneal_tau(int iteration, const ProMConfig& config);

Phase phase_at(int iteration, const ProMConfig& config);

ScheduleState schedule_at(int iteration, std::int64_t length, const ProMConfig& config);

// --- gradient machinery -------------------------------------------------------

// Hard: straight-through binary mask in the reconstruction (training mode).
// Soft: the relaxed mask itself is applied (used by finite-difference tests;
// the hard forward is piecewise constant in theta).
enum class MaskForwardMode { Hard, Soft };

struct SampleEval {
  double loss = 0.0;
  std::vector<double> dloss_dtheta;
};

// One Monte-Carlo term of the objective and its analytic gradient: sample a
// mask from the given Gumbel noise at temperature tau, reconstruct, and chain
// loss_grad -> magnitude_vjp -> inverse_transform_vjp -> apply_mask_vjp ->
// straight-through identity -> sigmoid derivative -> d rho / d theta.
SampleEval evaluate_mask_sample(const MaskDistribution& dist, std::span<const double> rho,
                                const GumbelNoise& noise, double tau,
                                const TrainItem& item, const ReconstructionLoss& loss,
                                MaskForwardMode mode);

// Monte-Carlo estimate of E_m[ loss ] over `mc_samples` hard-mask draws per
// batch item (mean reduction over both).
double objective_estimate(const MaskDistribution& dist, std::span<const TrainItem> batch,
                          int mc_samples, double tau, Rng& rng,
                          const ReconstructionLoss& loss);

// Matching gradient estimate. Pass the same freshly-seeded Rng as a paired
// objective_estimate call to evaluate both on identical mask samples.
std::vector<double> gradient_estimate(const MaskDistribution& dist,
                                      std::span<const TrainItem> batch, int mc_samples,
                                      double tau, Rng& rng, const ReconstructionLoss& loss);

// --- optimizer ----------------------------------------------------------------

// One bias-corrected Adam update; returns the unconstrained theta_tilde.
std::vector<double> adam_step(AdamState& state, std::span<const double> theta,
                              std::span<const double> gradient, double learning_rate);

struct OptimizeResult {
  MaskDistribution distribution;
  TrainTrace trace;
};

// Mask optimization on a single (kspace, target) pair: mc_samples mask draws
// per iteration.
OptimizeResult optimize_single(const ComplexGrid& kspace, const RealGrid& target,
                               const ProMConfig& config,
                               const ReconstructionLoss* custom_loss = nullptr);

// Same loop over a dataset; each iteration draws a seeded batch of
// batch_size items (without replacement, or with replacement when the dataset
// is smaller than the batch).
OptimizeResult optimize_dataset(std::span<const TrainItem> dataset,
                                const ProMConfig& config,
                                const ReconstructionLoss* custom_loss = nullptr);

struct RunProMResult {
  BinaryMask mask;               // top-S extraction from the averaged theta
  MaskDistribution distribution; // model average across runs
  TrainTrace first_trace;
};

// num_runs independent optimizations with derived seeds, model-averaged and
// reduced to a deterministic budget-exact mask. Run 0 uses config.seed
// verbatim, so num_runs = 1 reproduces a plain optimize_dataset run.
RunProMResult run_prom_full(std::span<const TrainItem> dataset, const ProMConfig& config,
                            int num_runs, const ReconstructionLoss* custom_loss = nullptr);

BinaryMask run_prom(std::span<const TrainItem> dataset, const ProMConfig& config,
                    int num_runs, const ReconstructionLoss* custom_loss = nullptr);

}  // namespace prom

#endif  // PROM_OPTIMIZER_HPP
