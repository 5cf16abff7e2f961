#include "defl/delay_model.hpp"

#include <cmath>

#include "defl/errors.hpp"

namespace defl {

LearningParams LearningParams::from_theta(double epsilon, double theta,
                                          double nu, double c, int devices) {
  if (!(theta > 0.0) || theta > 1.0)
    throw DomainError("theta must lie in (0, 1]");
  LearningParams p{epsilon, theta, std::log(1.0 / theta), nu, c, devices};
  validate(p);
  return p;
}

LearningParams LearningParams::from_alpha(double epsilon, double alpha,
                                          double nu, double c, int devices) {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  LearningParams p{epsilon, std::exp(-alpha), alpha, nu, c, devices};
  validate(p);
  return p;
}

void validate(const LearningParams& params) {
  if (!(params.epsilon > 0.0) || params.epsilon > 1.0)
    throw DomainError("epsilon must lie in (0, 1]");
  if (!(params.theta >= 0.0) || params.theta > 1.0)
    throw DomainError("theta must lie in [0, 1]");
  if (!(params.alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  if (!(params.nu > 0.0)) throw DomainError("nu must be positive");
  if (!(params.c > 0.0)) throw DomainError("c must be positive");
  if (params.devices < 1) throw DomainError("device count must be at least 1");
}

double local_rounds(double theta, double nu) {
  if (!(nu > 0.0)) throw DomainError("nu must be positive");
  if (!(theta > 0.0)) throw DomainError("theta must be positive (V unbounded at 0)");
  if (theta > 1.0) throw DomainError("theta must not exceed 1");
  return nu * std::log(1.0 / theta);
}

long local_rounds_int(double theta, double nu) {
  const double v = local_rounds(theta, nu);
  return std::max(1L, std::lround(v));
}

double round_time(double t_cm, double local_rounds, double t_cp) {
  if (t_cm < 0.0 || t_cp < 0.0 || local_rounds < 0.0)
    throw DomainError("round time inputs must be nonnegative");
  return t_cm + local_rounds * t_cp;
}

double rounds_to_converge(const LearningParams& params, double batch_size) {
  validate(params);
  if (batch_size < 1.0) throw DomainError("batch size must be at least 1");
  if (!(params.alpha > 0.0))
    throw DomainError("alpha must be positive (round count diverges at theta = 1)");
  const double b = batch_size;
  const double eps = params.epsilon;
  const double m = static_cast<double>(params.devices);
  return params.c / (b * b * eps * eps * m * params.nu * params.alpha) +
         params.c * m / (b * eps);
}

long rounds_to_converge_int(const LearningParams& params, double batch_size) {
  return static_cast<long>(std::ceil(rounds_to_converge(params, batch_size)));
}

double overall_time(double rounds, double time_per_round) {
  if (!(rounds > 0.0) || !(time_per_round > 0.0))
    throw DomainError("overall time inputs must be positive");
  return rounds * time_per_round;
}

double stepsize(double smoothness, int devices, long total_steps) {
  if (!(smoothness > 0.0)) throw DomainError("smoothness constant must be positive");
  if (devices < 1) throw DomainError("device count must be at least 1");
  if (total_steps < devices)
    throw DomainError("total step count must be at least the device count");
  return std::sqrt(static_cast<double>(devices)) /
         (4.0 * smoothness * std::sqrt(static_cast<double>(total_steps)));
}

double convergence_bound(const ConvergenceParams& params) {
  if (!(params.L > 0.0)) throw DomainError("smoothness constant must be positive");
  if (params.sigma_sq < 0.0) throw DomainError("noise variance must be nonnegative");
  if (params.dist0_sq < 0.0) throw DomainError("initial distance must be nonnegative");
  if (params.devices < 1) throw DomainError("device count must be at least 1");
  if (params.total_steps < params.devices)
    throw DomainError("total step count must be at least the device count");
  if (params.local_rounds < 1 || params.batch_size < 1)
    throw DomainError("local rounds and batch size must be at least 1");
  if (params.total_steps % params.local_rounds != 0)
    throw DomainError("total step count must be divisible by the local round count");
  const double m = static_cast<double>(params.devices);
  const double k = static_cast<double>(params.total_steps);
  const double b = static_cast<double>(params.batch_size);
  const double v = static_cast<double>(params.local_rounds);
  const double root_mk = std::sqrt(m * k);
  return 8.0 * params.dist0_sq / root_mk +
         params.sigma_sq / (2.0 * b * params.L * root_mk) +
         params.sigma_sq * m * (v - 1.0) / (b * params.L * k);
}

}  // namespace defl
