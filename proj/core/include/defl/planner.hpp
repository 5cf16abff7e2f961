#pragma once

#include <cstddef>
#include <vector>

#include "defl/delay_model.hpp"
#include "defl/system_model.hpp"

namespace defl {

/// Everything the overall-time minimization needs: the fleet collapses to
/// the per-round communication time and the per-device compute ratios.
struct PlanInputs {
  double t_cm = 0.0;            // per-round communication time, seconds
  std::vector<double> ratios;   // per device, seconds per sample per step
  LearningParams learning;

  double max_ratio() const;
  std::size_t bottleneck_index() const;  // argmax ratio, ties to lowest index
};

void validate(const PlanInputs& inputs);

/// Builds PlanInputs from a fleet and learning parameters.
PlanInputs make_plan_inputs(const Fleet& fleet, const LearningParams& learning);

enum class PlanSource { closed_form, oracle };

struct Plan {
  double alpha = 0.0;
  double theta = 1.0;        // exp(-alpha)
  double b_cont = 1.0;       // continuous batch size (pre-projection)
  long b_rounded = 1;        // power-of-two projection of b_cont
  double t_cp = 0.0;         // max_ratio * b_cont
  double rounds = 0.0;       // H at (b_cont, alpha), real-valued
  double overall_time = 0.0; // objective at (b_cont, alpha)
  PlanSource source = PlanSource::closed_form;
};

/// Stationarity/feasibility/complementarity record at a candidate point.
/// Duals are recovered from the stationarity system: mu at the binding
/// (bottleneck) device, lambda1 = 0 for b > 1 and lambda2 = 0 for alpha > 0
/// by complementary slackness. Residuals are the leftover stationarity
/// violations; scaled_* entries are |residual| * |coordinate| / objective.
struct KktCertificate {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<double> mu;

  double res_b = 0.0;      // dL/db after dual substitution
  double res_alpha = 0.0;  // dL/dalpha, derived from the Lagrangian
  double res_tcp = 0.0;    // dL/dT_cp after dual substitution

  // Same alpha-stationarity equation as printed in the source derivation,
  // which carries T_cm where the Lagrangian yields T_cp. Logged, not used.
  double res_alpha_printed_variant = 0.0;

  double scaled_res_b = 0.0;
  double scaled_res_alpha = 0.0;
  double scaled_res_tcp = 0.0;

  double comp_lambda1 = 0.0;           // lambda1 * (b - 1)
  double comp_lambda2 = 0.0;           // lambda2 * alpha
  std::vector<double> comp_mu;         // mu_m * (T_cp - r_m b)

  bool feasible_b = false;     // b >= 1
  bool feasible_alpha = false; // alpha >= 0
  bool feasible_tcp = false;   // T_cp >= r_m b for all m
  bool duals_nonnegative = false;

  double objective = 0.0;

  double max_scaled_stationarity() const;
};

/// Overall-time objective with the compute-time constraint substituted at
/// its lower bound T_cp = b * max_ratio (the objective is strictly
/// increasing in T_cp, so the bound binds at any optimum):
///   (c/(b^2 eps^2 M nu a) + c M/(b eps)) * (t_cm + nu a b max_ratio).
double objective_eval(double b, double alpha, const PlanInputs& inputs);

struct PlanResult {
  Plan plan;
  KktCertificate certificate;
};

/// Closed-form candidate evaluated at the bottleneck device's ratio r:
///   alpha = sqrt(t_cm / (M^2 eps nu^2 r)),  b = 2 c M sqrt(t_cm eps / r),
///   T_cp = r * b. b is clamped to >= 1 before projection.
PlanResult closed_form_plan(const PlanInputs& inputs);

/// Projects a continuous batch size onto {1, 2, 4, ...}: evaluates the
/// objective at the two neighboring powers of two and keeps the smaller
/// objective; ties go to the smaller batch.
long round_batch(double b_cont, double alpha, const PlanInputs& inputs);

struct OracleGrid {
  double b_min = 1.0;
  double b_max = 1024.0;
  int b_points = 200;
  double alpha_min = 1e-4;
  double alpha_max = 20.0;
  int alpha_points = 200;
};

void validate(const OracleGrid& grid);

struct OracleResult {
  Plan continuous;  // refined grid minimum over the (b, alpha) box
  Plan pow2;        // exact enumeration of powers of two with alpha refined
};

/// Brute-force minimization: exhaustive log-spaced grid followed by
/// per-coordinate golden-section refinement until the relative objective
/// improvement drops below 1e-12. Grid ties break lexicographically in
/// (b, alpha). Deterministic regardless of worker count.
OracleResult oracle_plan(const PlanInputs& inputs, const OracleGrid& grid = {});

/// KKT residuals at a feasible point. Analytic partial derivatives of the
/// Lagrangian are cross-checked against central finite differences (step
/// 1e-6 * max(1, |x|)); a relative mismatch above 1e-4 throws InternalError.
KktCertificate kkt_residuals(double b, double alpha, double t_cp,
                             const PlanInputs& inputs);

}  // namespace defl
