#pragma once

namespace defl {

/// Learning-side parameters driving round counts. theta and alpha are two
/// views of the same quantity: alpha = log(1/theta). alpha is canonical.
struct LearningParams {
  double epsilon = 0.0;  // target on the expected optimality gap, in (0,1)
  double theta = 1.0;    // relative local error in [0,1]
  double alpha = 0.0;    // log(1/theta), in [0,inf)
  double nu = 1.0;       // local-rounds constant, V = nu * alpha
  double c = 1.0;        // big-O constant in the round-count formula
  int devices = 1;       // M

  static LearningParams from_theta(double epsilon, double theta, double nu,
                                   double c, int devices);
  static LearningParams from_alpha(double epsilon, double alpha, double nu,
                                   double c, int devices);
};

void validate(const LearningParams& params);

/// Local SGD rounds per communication round: V = nu * log(1/theta).
/// Real-valued; use local_rounds_int at the simulation boundary.
double local_rounds(double theta, double nu);
long local_rounds_int(double theta, double nu);  // max(1, round(V))

/// Wall-clock length of one communication round: T = T_cm + V * T_cp.
double round_time(double t_cm, double local_rounds, double t_cp);

/// Communication rounds to reach the epsilon gap target:
/// H = c / (b^2 eps^2 M nu alpha) + c M / (b eps). Real-valued.
double rounds_to_converge(const LearningParams& params, double batch_size);
long rounds_to_converge_int(const LearningParams& params, double batch_size);

/// Total training time: H * T.
double overall_time(double rounds, double time_per_round);

/// Constant step size sqrt(M) / (4 L sqrt(K)).
double stepsize(double smoothness, int devices, long total_steps);

struct ConvergenceParams {
  double L = 1.0;         // smoothness constant
  double sigma_sq = 0.0;  // per-device gradient-noise variance bound
  double dist0_sq = 0.0;  // squared distance of w0 to the minimizer
  int devices = 1;        // M
  long total_steps = 1;   // K, must satisfy K >= M and V | K
  long local_rounds = 1;  // V
  long batch_size = 1;    // b
};

/// Expected optimality-gap bound for synchronous local SGD on identical data:
///   8 d0 / sqrt(MK) + sigma^2 / (2 b L sqrt(MK)) + sigma^2 M (V-1) / (b L K).
double convergence_bound(const ConvergenceParams& params);

}  // namespace defl
