#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "defl/rng.hpp"
#include "defl/system_model.hpp"

namespace defl {

enum class TaskKind { quadratic, logistic };

struct LogisticDeviceData {
  Eigen::MatrixXd features;  // one sample per row
  Eigen::VectorXd labels;    // entries in {0, 1}
};

/// Synthetic convex training task with, for the quadratic kind, an exactly
/// known minimizer and smoothness constant.
struct SyntheticTask {
  TaskKind kind = TaskKind::quadratic;
  int dimension = 0;

  // Quadratic: F(w) = 1/2 w'Aw - u'w, minimized at w* = A^{-1} u.
  Eigen::MatrixXd quad_matrix;    // symmetric positive definite
  Eigen::VectorXd quad_linear;    // u
  Eigen::VectorXd minimizer;      // w*
  double smoothness = 0.0;        // largest eigenvalue of A
  double noise_sigma_sq = 0.0;    // injected gradient-noise variance

  // Logistic: one dataset per device ("identical data" duplicates one).
  std::vector<LogisticDeviceData> logistic_data;

  bool has_known_minimizer() const { return kind == TaskKind::quadratic; }
  double loss(const Eigen::VectorXd& w, int device) const;
  double global_loss(const Eigen::VectorXd& w,
                     const std::vector<double>& weights) const;
  Eigen::VectorXd exact_gradient(const Eigen::VectorXd& w, int device) const;
  /// F(w) - F(w*) for tasks with a known minimizer.
  double optimality_gap(const Eigen::VectorXd& w) const;
};

/// Diagonal-spectrum quadratic task. Eigenvalues are spaced linearly in
/// [lambda_min, lambda_max] (so the smoothness constant is lambda_max) and
/// the minimizer is drawn uniformly from [-1, 1]^d with the given seed.
SyntheticTask make_quadratic_task(int dimension, double lambda_min,
                                  double lambda_max, double noise_sigma_sq,
                                  std::uint64_t task_seed);

/// Synthetic logistic-regression task: Gaussian features, labels sampled
/// from a ground-truth logistic model.
SyntheticTask make_logistic_task(int dimension, int devices,
                                 int samples_per_device, bool identical_data,
                                 std::uint64_t task_seed);

struct SimConfig {
  int devices = 1;           // M
  long local_steps = 1;      // V, integer >= 1
  long rounds = 1;           // H, integer >= 1
  long batch_size = 1;       // b
  std::optional<double> eta; // explicit step size; default sqrt(M)/(4 L sqrt(HV))
  std::uint64_t seed = 1;
  bool identical_data = true;
  Fleet fleet;               // wall-clock accounting
  std::optional<Eigen::VectorXd> w0;  // default: uniform [-1,1]^d from seed
  std::optional<double> stop_at_gap;  // end the run once the gap reaches this
};

struct RoundRecord;

/// Optional per-round observer, invoked after each completed round. Lets
/// callers stream a trace to disk and still keep what was written when a
/// later round diverges.
using RoundObserver = std::function<void(const RoundRecord&)>;

struct RoundRecord {
  long round = 0;          // 1-based communication round index
  double wall_clock_s = 0; // cumulative simulated time at end of round
  double global_loss = 0;  // F at the aggregated model
  double opt_gap = 0;      // F - F(w*), NaN when the minimizer is unknown
};

struct SimTrace {
  std::vector<RoundRecord> rows;
  Eigen::VectorXd w_final;   // aggregated model after the last round
  Eigen::VectorXd w_bar;     // running average of per-step global averages
  double dist0_sq = 0.0;     // ||w0 - w*||^2 (NaN when w* unknown)
  double gap_w_bar = 0.0;    // F(w_bar) - F(w*) (NaN when w* unknown)
  long total_steps = 0;      // K = executed rounds * V
  double step_size = 0.0;    // eta actually used
};

/// Stochastic mini-batch gradient. Quadratic kind: exact gradient plus a
/// Gaussian perturbation with total variance sigma^2 / b (the distribution
/// of a mean of b draws of total variance sigma^2). Logistic kind: mean
/// gradient over b uniform-with-replacement samples.
Eigen::VectorXd sample_stochastic_gradient(const SyntheticTask& task, int device,
                                           const Eigen::VectorXd& w, long batch_size,
                                           RngStream& rng);

/// V sequential steps w <- w - eta * g. Throws DivergedError (tagged with
/// the offending step) if an iterate stops being finite.
Eigen::VectorXd local_sgd(const SyntheticTask& task, int device,
                          const Eigen::VectorXd& w_in, long local_steps,
                          long batch_size, double eta, RngStream& rng);

/// Weighted model average: sum_m (D_m / D) w_m.
Eigen::VectorXd aggregate(const std::vector<Eigen::VectorXd>& states,
                          const std::vector<double>& weights);

/// Synchronous training loop: per round, every device runs V local steps in
/// parallel, the server aggregates and broadcasts, and the simulated clock
/// advances by fleet_comm_time + V * fleet_compute_time. Deterministic for
/// a given seed; per-device noise streams are keyed on (seed, device,
/// round), so worker scheduling never changes the result.
SimTrace run_defl(const SyntheticTask& task, const SimConfig& config,
                  const RoundObserver& observer = {});

struct BoundCheckReport {
  double mean_gap = 0.0;
  double bound = 0.0;
  bool pass = false;
  int seeds = 0;
};

/// Monte Carlo check of the optimality-gap bound: averages F(w_bar_K)-F(w*)
/// over n_seeds runs (seed, seed+1, ...) with a shared w0 drawn from the
/// base seed, against the analytic bound at the exact dist0_sq.
BoundCheckReport bound_check(const SyntheticTask& task, const SimConfig& config,
                             int n_seeds);

}  // namespace defl
