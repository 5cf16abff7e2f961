#include "defl/fl_sim.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "defl/delay_model.hpp"
#include "defl/errors.hpp"
#include "defl/parallel.hpp"

namespace defl {

namespace {

constexpr std::uint64_t kTagW0 = 0xA0;
constexpr std::uint64_t kTagTask = 0xA1;
constexpr std::uint64_t kTagNoise = 0xA2;

double logistic_loss_term(double margin) {
  // log(1 + exp(-margin)) without overflow
  if (margin > 0.0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

Eigen::VectorXd uniform_vector(int dimension, RngStream& rng) {
  Eigen::VectorXd v(dimension);
  for (int i = 0; i < dimension; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

double SyntheticTask::loss(const Eigen::VectorXd& w, int device) const {
  if (kind == TaskKind::quadratic)
    return 0.5 * w.dot(quad_matrix * w) - quad_linear.dot(w);
  const auto& data = logistic_data.at(static_cast<std::size_t>(device));
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    const double sign = 2.0 * data.labels[i] - 1.0;
    total += logistic_loss_term(sign * data.features.row(i).dot(w));
  }
  return total / static_cast<double>(data.labels.size());
}

double SyntheticTask::global_loss(const Eigen::VectorXd& w,
                                  const std::vector<double>& weights) const {
  if (kind == TaskKind::quadratic) return loss(w, 0);
  double total = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m)
    total += weights[m] * loss(w, static_cast<int>(m));
  return total;
}

Eigen::VectorXd SyntheticTask::exact_gradient(const Eigen::VectorXd& w,
                                              int device) const {
  if (kind == TaskKind::quadratic) return quad_matrix * w - quad_linear;
  const auto& data = logistic_data.at(static_cast<std::size_t>(device));
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dimension);
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    const double sign = 2.0 * data.labels[i] - 1.0;
    const double margin = sign * data.features.row(i).dot(w);
    grad -= sign / (1.0 + std::exp(margin)) * data.features.row(i).transpose();
  }
  return grad / static_cast<double>(data.labels.size());
}

double SyntheticTask::optimality_gap(const Eigen::VectorXd& w) const {
  if (!has_known_minimizer())
    throw DomainError("optimality gap requires a task with a known minimizer");
  const Eigen::VectorXd delta = w - minimizer;
  return 0.5 * delta.dot(quad_matrix * delta);
}

SyntheticTask make_quadratic_task(int dimension, double lambda_min,
                                  double lambda_max, double noise_sigma_sq,
                                  std::uint64_t task_seed) {
  if (dimension < 1) throw DomainError("task dimension must be at least 1");
  if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
    throw DomainError("task spectrum must satisfy 0 < lambda_min <= lambda_max");
  if (noise_sigma_sq < 0.0) throw DomainError("noise variance must be nonnegative");

  SyntheticTask task;
  task.kind = TaskKind::quadratic;
  task.dimension = dimension;
  task.noise_sigma_sq = noise_sigma_sq;
  task.quad_matrix = Eigen::MatrixXd::Zero(dimension, dimension);
  for (int i = 0; i < dimension; ++i) {
    const double t = dimension == 1 ? 1.0 : static_cast<double>(i) / (dimension - 1);
    task.quad_matrix(i, i) = lambda_min + t * (lambda_max - lambda_min);
  }
  task.smoothness = lambda_max;
  RngStream rng(task_seed, 0, 0, kTagTask);
  task.minimizer = uniform_vector(dimension, rng);
  task.quad_linear = task.quad_matrix * task.minimizer;
  return task;
}

SyntheticTask make_logistic_task(int dimension, int devices,
                                 int samples_per_device, bool identical_data,
                                 std::uint64_t task_seed) {
  if (dimension < 1 || devices < 1 || samples_per_device < 1)
    throw DomainError("logistic task needs positive dimension, devices, samples");

  SyntheticTask task;
  task.kind = TaskKind::logistic;
  task.dimension = dimension;
  RngStream truth_rng(task_seed, 0, 0, kTagTask);
  const Eigen::VectorXd w_true = uniform_vector(dimension, truth_rng);

  const int distinct = identical_data ? 1 : devices;
  for (int m = 0; m < distinct; ++m) {
    RngStream rng(task_seed, static_cast<std::uint64_t>(m) + 1, 0, kTagTask);
    LogisticDeviceData data;
    data.features.resize(samples_per_device, dimension);
    data.labels.resize(samples_per_device);
    for (int i = 0; i < samples_per_device; ++i) {
      for (int j = 0; j < dimension; ++j) data.features(i, j) = rng.gaussian();
      const double p = 1.0 / (1.0 + std::exp(-data.features.row(i).dot(w_true)));
      data.labels[i] = rng.uniform() < p ? 1.0 : 0.0;
    }
    task.logistic_data.push_back(std::move(data));
  }
  while (static_cast<int>(task.logistic_data.size()) < devices)
    task.logistic_data.push_back(task.logistic_data.front());
  return task;
}

Eigen::VectorXd sample_stochastic_gradient(const SyntheticTask& task, int device,
                                           const Eigen::VectorXd& w, long batch_size,
                                           RngStream& rng) {
  if (batch_size < 1) throw DomainError("batch size must be at least 1");
  if (task.kind == TaskKind::quadratic) {
    Eigen::VectorXd grad = task.exact_gradient(w, device);
    if (task.noise_sigma_sq > 0.0) {
      // The mean of b i.i.d. zero-mean draws of total variance sigma^2 is a
      // single Gaussian with total variance sigma^2 / b; sample it directly.
      const double scale = std::sqrt(task.noise_sigma_sq /
                                     (static_cast<double>(batch_size) * task.dimension));
      for (int i = 0; i < task.dimension; ++i) grad[i] += scale * rng.gaussian();
    }
    return grad;
  }
  const auto& data = task.logistic_data.at(static_cast<std::size_t>(device));
  const auto n = static_cast<std::uint64_t>(data.labels.size());
  if (n == 0) throw DomainError("device has an empty dataset");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(task.dimension);
  for (long k = 0; k < batch_size; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.uniform_index(n));
    const double sign = 2.0 * data.labels[i] - 1.0;
    const double margin = sign * data.features.row(i).dot(w);
    grad -= sign / (1.0 + std::exp(margin)) * data.features.row(i).transpose();
  }
  return grad / static_cast<double>(batch_size);
}

namespace {

// One device's share of a communication round: V local steps plus the sum
// of its iterates (the server needs per-step global averages for w_bar).
Eigen::VectorXd local_sgd_accumulate(const SyntheticTask& task, int device,
                                     const Eigen::VectorXd& w_in, long local_steps,
                                     long batch_size, double eta, RngStream& rng,
                                     Eigen::VectorXd* iterate_sum) {
  if (local_steps < 1) throw DomainError("local step count must be at least 1");
  Eigen::VectorXd w = w_in;
  if (iterate_sum) iterate_sum->setZero(task.dimension);
  for (long v = 1; v <= local_steps; ++v) {
    w -= eta * sample_stochastic_gradient(task, device, w, batch_size, rng);
    if (!w.allFinite())
      throw DivergedError(v, "local SGD diverged at step " + std::to_string(v) +
                                 " on device " + std::to_string(device));
    if (iterate_sum) *iterate_sum += w;
  }
  return w;
}

}  // namespace

Eigen::VectorXd local_sgd(const SyntheticTask& task, int device,
                          const Eigen::VectorXd& w_in, long local_steps,
                          long batch_size, double eta, RngStream& rng) {
  return local_sgd_accumulate(task, device, w_in, local_steps, batch_size, eta,
                              rng, nullptr);
}

Eigen::VectorXd aggregate(const std::vector<Eigen::VectorXd>& states,
                          const std::vector<double>& weights) {
  if (states.empty()) throw DomainError("aggregate: no device states");
  if (states.size() != weights.size())
    throw DomainError("aggregate: states and weights disagree in length");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw DomainError("aggregate: weights must sum to a positive value");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(states.front().size());
  for (std::size_t m = 0; m < states.size(); ++m) {
    if (states[m].size() != out.size())
      throw DomainError("aggregate: dimension mismatch");
    out += (weights[m] / total) * states[m];
  }
  return out;
}

SimTrace run_defl(const SyntheticTask& task, const SimConfig& config,
                  const RoundObserver& observer) {
  if (config.devices < 1) throw DomainError("simulation needs at least one device");
  if (config.rounds < 1) throw DomainError("simulation needs at least one round");
  if (config.local_steps < 1 || config.batch_size < 1)
    throw DomainError("local steps and batch size must be at least 1");

  const int m_count = config.devices;
  const long total_steps = config.rounds * config.local_steps;
  const double eta = config.eta
                         ? *config.eta
                         : stepsize(task.smoothness, m_count, total_steps);
  if (!(eta > 0.0)) throw DomainError("step size must be positive");

  double t_cm = 0.0, t_cp = 0.0;
  std::vector<double> weights(static_cast<std::size_t>(m_count),
                              1.0 / static_cast<double>(m_count));
  if (!config.fleet.devices.empty()) {
    if (static_cast<int>(config.fleet.devices.size()) != m_count)
      throw DomainError("fleet size disagrees with the simulated device count");
    t_cm = fleet_comm_time(config.fleet);
    t_cp = fleet_compute_time(config.fleet, config.batch_size);
    double total = 0.0;
    for (const auto& d : config.fleet.devices) total += d.samples;
    for (int m = 0; m < m_count; ++m)
      weights[static_cast<std::size_t>(m)] = config.fleet.devices[static_cast<std::size_t>(m)].samples / total;
  }

  Eigen::VectorXd w;
  if (config.w0) {
    w = *config.w0;
    if (w.size() != task.dimension)
      throw DomainError("w0 dimension disagrees with the task");
  } else {
    RngStream rng(config.seed, 0, 0, kTagW0);
    w = uniform_vector(task.dimension, rng);
  }

  SimTrace trace;
  trace.step_size = eta;
  trace.dist0_sq = task.has_known_minimizer()
                       ? (w - task.minimizer).squaredNorm()
                       : std::numeric_limits<double>::quiet_NaN();

  Eigen::VectorXd w_bar_sum = Eigen::VectorXd::Zero(task.dimension);
  double clock = 0.0;

  std::vector<Eigen::VectorXd> states(static_cast<std::size_t>(m_count));
  std::vector<Eigen::VectorXd> iterate_sums(static_cast<std::size_t>(m_count));
  for (long h = 1; h <= config.rounds; ++h) {
    long diverged_step = 0;
    parallel_for(static_cast<std::size_t>(m_count), [&](std::size_t m) {
      RngStream rng(config.seed, m + 1, static_cast<std::uint64_t>(h), kTagNoise);
      try {
        states[m] = local_sgd_accumulate(task, static_cast<int>(m), w,
                                         config.local_steps, config.batch_size,
                                         eta, rng, &iterate_sums[m]);
      } catch (const DivergedError& e) {
        diverged_step = e.round();
      }
    });
    if (diverged_step != 0)
      throw DivergedError(h, "simulation diverged in communication round " +
                                 std::to_string(h));

    // Per-step global averages, summed: sum_v (1/M) sum_m w_m^v.
    for (const auto& sums : iterate_sums) w_bar_sum += sums / static_cast<double>(m_count);

    w = aggregate(states, weights);
    clock += t_cm + static_cast<double>(config.local_steps) * t_cp;
    trace.total_steps += config.local_steps;

    RoundRecord record;
    record.round = h;
    record.wall_clock_s = clock;
    record.global_loss = task.global_loss(w, weights);
    record.opt_gap = task.has_known_minimizer()
                         ? task.optimality_gap(w)
                         : std::numeric_limits<double>::quiet_NaN();
    trace.rows.push_back(record);
    if (observer) observer(record);

    if (config.stop_at_gap && task.has_known_minimizer() &&
        record.opt_gap <= *config.stop_at_gap)
      break;
  }

  trace.w_final = w;
  trace.w_bar = w_bar_sum / static_cast<double>(trace.total_steps);
  trace.gap_w_bar = task.has_known_minimizer()
                        ? task.optimality_gap(trace.w_bar)
                        : std::numeric_limits<double>::quiet_NaN();
  return trace;
}

BoundCheckReport bound_check(const SyntheticTask& task, const SimConfig& config,
                             int n_seeds) {
  if (!task.has_known_minimizer())
    throw DomainError("bound check requires a task with a known minimizer");
  if (n_seeds < 1) throw DomainError("bound check needs at least one seed");
  const long total_steps = config.rounds * config.local_steps;
  if (total_steps < config.devices)
    throw DomainError("bound check requires K >= M");

  // A single w0, shared across the seed ensemble, keeps dist0_sq (and with
  // it the bound) a fixed quantity.
  Eigen::VectorXd w0;
  if (config.w0) {
    w0 = *config.w0;
  } else {
    RngStream rng(config.seed, 0, 0, kTagW0);
    w0 = uniform_vector(task.dimension, rng);
  }

  double gap_sum = 0.0;
  std::vector<double> gaps(static_cast<std::size_t>(n_seeds), 0.0);
  for (int i = 0; i < n_seeds; ++i) {
    SimConfig run = config;
    run.w0 = w0;
    run.seed = config.seed + static_cast<std::uint64_t>(i);
    run.stop_at_gap.reset();
    gaps[static_cast<std::size_t>(i)] = run_defl(task, run).gap_w_bar;
  }
  for (double g : gaps) gap_sum += g;

  ConvergenceParams params;
  params.L = task.smoothness;
  params.sigma_sq = task.noise_sigma_sq;
  params.dist0_sq = (w0 - task.minimizer).squaredNorm();
  params.devices = config.devices;
  params.total_steps = total_steps;
  params.local_rounds = config.local_steps;
  params.batch_size = config.batch_size;

  BoundCheckReport report;
  report.mean_gap = gap_sum / static_cast<double>(n_seeds);
  report.bound = convergence_bound(params);
  report.pass = report.mean_gap <= report.bound;
  report.seeds = n_seeds;
  return report;
}

}  // namespace defl
