#include "defl/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "defl/errors.hpp"
#include "defl/parallel.hpp"

namespace defl {

namespace {

LearningParams with_alpha(const LearningParams& base, double alpha) {
  LearningParams p = base;
  p.alpha = alpha;
  p.theta = std::exp(-alpha);
  return p;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out[static_cast<std::size_t>(i)] = std::exp(llo + t * (lhi - llo));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

// Golden-section minimum of a unimodal slice; also checks the interval
// endpoints so boundary minima are returned exactly.
template <typename F>
double golden_min(const F& f, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * (std::abs(a) + std::abs(b)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  double best_x = f1 <= f2 ? x1 : x2;
  double best_f = std::min(f1, f2);
  if (f(lo) <= best_f) {
    best_x = lo;
    best_f = f(lo);
  }
  if (f(hi) < best_f) best_x = hi;
  return best_x;
}

Plan make_plan(double b_cont, double alpha, const PlanInputs& inputs,
               PlanSource source) {
  Plan plan;
  plan.alpha = alpha;
  plan.theta = std::exp(-alpha);
  plan.b_cont = b_cont;
  plan.b_rounded = round_batch(b_cont, alpha, inputs);
  plan.t_cp = inputs.max_ratio() * b_cont;
  plan.rounds = rounds_to_converge(with_alpha(inputs.learning, alpha), b_cont);
  plan.overall_time = objective_eval(b_cont, alpha, inputs);
  plan.source = source;
  return plan;
}

}  // namespace

double PlanInputs::max_ratio() const {
  return ratios[bottleneck_index()];
}

std::size_t PlanInputs::bottleneck_index() const {
  if (ratios.empty()) throw DomainError("plan inputs: no device ratios");
  std::size_t best = 0;
  for (std::size_t i = 1; i < ratios.size(); ++i)
    if (ratios[i] > ratios[best]) best = i;
  return best;
}

void validate(const PlanInputs& inputs) {
  if (!(inputs.t_cm > 0.0))
    throw DomainError("plan inputs: communication time must be positive");
  if (inputs.ratios.empty())
    throw DomainError("plan inputs: no device ratios");
  for (double r : inputs.ratios)
    if (!(r > 0.0))
      throw DomainError("plan inputs: compute ratios must be positive");
  validate(inputs.learning);
}

PlanInputs make_plan_inputs(const Fleet& fleet, const LearningParams& learning) {
  validate(fleet);
  PlanInputs inputs;
  inputs.t_cm = fleet_comm_time(fleet);
  inputs.ratios.reserve(fleet.devices.size());
  for (const auto& device : fleet.devices)
    inputs.ratios.push_back(device.compute_ratio());
  inputs.learning = learning;
  validate(inputs);
  return inputs;
}

double objective_eval(double b, double alpha, const PlanInputs& inputs) {
  if (!(b >= 1.0)) throw DomainError("objective: batch size must be at least 1");
  if (!(alpha > 0.0)) throw DomainError("objective: alpha must be positive");
  const LearningParams params = with_alpha(inputs.learning, alpha);
  const double rounds = rounds_to_converge(params, b);
  const double t = round_time(inputs.t_cm, params.nu * alpha,
                              b * inputs.max_ratio());
  return rounds * t;
}

PlanResult closed_form_plan(const PlanInputs& inputs) {
  validate(inputs);
  const double r = inputs.max_ratio();
  const double m = static_cast<double>(inputs.learning.devices);
  const double eps = inputs.learning.epsilon;
  const double nu = inputs.learning.nu;
  const double c = inputs.learning.c;

  const double alpha = std::sqrt(inputs.t_cm / (m * m * eps * nu * nu * r));
  const double b_raw = 2.0 * c * m * std::sqrt(inputs.t_cm * eps / r);
  const double b_cont = std::max(1.0, b_raw);

  PlanResult result;
  result.plan = make_plan(b_cont, alpha, inputs, PlanSource::closed_form);
  result.certificate =
      kkt_residuals(b_cont, alpha, result.plan.t_cp, inputs);
  return result;
}

long round_batch(double b_cont, double alpha, const PlanInputs& inputs) {
  if (!(b_cont >= 1.0)) throw DomainError("round_batch: batch size must be at least 1");
  long lo = 1;
  while (lo * 2 <= static_cast<long>(b_cont)) lo *= 2;
  const long hi = static_cast<double>(lo) >= b_cont ? lo : lo * 2;
  if (lo == hi) return lo;
  const double f_lo = objective_eval(static_cast<double>(lo), alpha, inputs);
  const double f_hi = objective_eval(static_cast<double>(hi), alpha, inputs);
  return f_hi < f_lo ? hi : lo;
}

void validate(const OracleGrid& grid) {
  if (!(grid.b_min >= 1.0) || !(grid.b_max > grid.b_min))
    throw DomainError("oracle grid: batch range must satisfy 1 <= b_min < b_max");
  if (!(grid.alpha_min > 0.0) || !(grid.alpha_max > grid.alpha_min))
    throw DomainError("oracle grid: alpha range must satisfy 0 < alpha_min < alpha_max");
  if (grid.b_points < 2 || grid.alpha_points < 2)
    throw DomainError("oracle grid: need at least 2 points per axis");
}

OracleResult oracle_plan(const PlanInputs& inputs, const OracleGrid& grid) {
  validate(inputs);
  validate(grid);

  const std::vector<double> bs = log_spaced(grid.b_min, grid.b_max, grid.b_points);
  const std::vector<double> as =
      log_spaced(grid.alpha_min, grid.alpha_max, grid.alpha_points);

  // Exhaustive grid pass, partitioned by batch row. Each row reduces to its
  // own (value, alpha index); the final merge is a sequential scan in
  // ascending (b, alpha) order, so ties resolve lexicographically no matter
  // how many workers ran.
  struct RowBest {
    double value = std::numeric_limits<double>::infinity();
    std::size_t alpha_idx = 0;
  };
  std::vector<RowBest> rows(bs.size());
  parallel_for(bs.size(), [&](std::size_t i) {
    RowBest best;
    for (std::size_t j = 0; j < as.size(); ++j) {
      const double v = objective_eval(bs[i], as[j], inputs);
      if (v < best.value) best = {v, j};
    }
    rows[i] = best;
  });

  std::size_t best_i = 0;
  for (std::size_t i = 1; i < bs.size(); ++i)
    if (rows[i].value < rows[best_i].value) best_i = i;

  double b = bs[best_i];
  double alpha = as[rows[best_i].alpha_idx];
  double value = rows[best_i].value;

  // Coordinate refinement over the full box, one golden-section line search
  // per coordinate per pass.
  for (int pass = 0; pass < 200; ++pass) {
    const double prev = value;
    b = golden_min(
        [&](double x) { return objective_eval(x, alpha, inputs); },
        grid.b_min, grid.b_max);
    alpha = golden_min(
        [&](double x) { return objective_eval(b, x, inputs); },
        grid.alpha_min, grid.alpha_max);
    value = objective_eval(b, alpha, inputs);
    if (prev - value < 1e-12 * std::abs(prev)) break;
  }

  OracleResult result;
  result.continuous = make_plan(b, alpha, inputs, PlanSource::oracle);

  // Constrained optimum: exact enumeration of powers of two with the alpha
  // coordinate refined per batch size.
  double best_pow2_value = std::numeric_limits<double>::infinity();
  long best_pow2_b = 1;
  double best_pow2_alpha = grid.alpha_min;
  for (long pb = 1; static_cast<double>(pb) <= grid.b_max; pb *= 2) {
    if (static_cast<double>(pb) < grid.b_min) continue;
    const double a_opt = golden_min(
        [&](double x) { return objective_eval(static_cast<double>(pb), x, inputs); },
        grid.alpha_min, grid.alpha_max);
    const double v = objective_eval(static_cast<double>(pb), a_opt, inputs);
    if (v < best_pow2_value) {
      best_pow2_value = v;
      best_pow2_b = pb;
      best_pow2_alpha = a_opt;
    }
  }
  result.pow2 = make_plan(static_cast<double>(best_pow2_b), best_pow2_alpha,
                          inputs, PlanSource::oracle);
  return result;
}

namespace {

// Lagrangian of the relaxed problem evaluated with fixed duals.
double lagrangian(double b, double alpha, double t_cp, const PlanInputs& in,
                  double lambda1, double lambda2, const std::vector<double>& mu) {
  const double c = in.learning.c;
  const double eps = in.learning.epsilon;
  const double m = static_cast<double>(in.learning.devices);
  const double nu = in.learning.nu;
  double value = c * in.t_cm / (b * b * eps * eps * m * nu * alpha) +
                 c * m * in.t_cm / (b * eps) +
                 c * t_cp / (b * b * eps * eps * m) +
                 c * m * nu * alpha * t_cp / (b * eps);
  value -= lambda1 * (b - 1.0);
  value -= lambda2 * alpha;
  for (std::size_t i = 0; i < mu.size(); ++i)
    value -= mu[i] * (t_cp - in.ratios[i] * b);
  return value;
}

}  // namespace

double KktCertificate::max_scaled_stationarity() const {
  return std::max({scaled_res_b, scaled_res_alpha, scaled_res_tcp});
}

KktCertificate kkt_residuals(double b, double alpha, double t_cp,
                             const PlanInputs& inputs) {
  validate(inputs);
  if (!(b > 0.0) || !(alpha > 0.0) || !(t_cp >= 0.0))
    throw DomainError("kkt: point must have b > 0, alpha > 0, T_cp >= 0");

  const double c = inputs.learning.c;
  const double eps = inputs.learning.epsilon;
  const double m = static_cast<double>(inputs.learning.devices);
  const double nu = inputs.learning.nu;
  const std::size_t n = inputs.ratios.size();

  KktCertificate cert;
  cert.mu.assign(n, 0.0);

  // mu at the binding (bottleneck) device from T_cp stationarity; all other
  // compute constraints are slack, so their duals vanish.
  const std::size_t star = inputs.bottleneck_index();
  cert.mu[star] = c / (b * b * eps * eps * m) + c * m * nu * alpha / (b * eps);

  // Complementary slackness: lambda2 = 0 for alpha > 0; lambda1 = 0 off the
  // b = 1 boundary, otherwise recovered from b-stationarity (clamped at 0).
  cert.lambda2 = 0.0;

  double mu_dot_r = 0.0;
  for (std::size_t i = 0; i < n; ++i) mu_dot_r += cert.mu[i] * inputs.ratios[i];

  const double db_raw = -2.0 * c * inputs.t_cm / (b * b * b * eps * eps * m * nu * alpha) -
                        c * m * inputs.t_cm / (b * b * eps) -
                        2.0 * c * t_cp / (b * b * b * eps * eps * m) -
                        c * m * nu * alpha * t_cp / (b * b * eps) + mu_dot_r;
  cert.lambda1 = b <= 1.0 + 1e-12 ? std::max(0.0, db_raw) : 0.0;
  cert.res_b = db_raw - cert.lambda1;

  cert.res_alpha = -c * inputs.t_cm / (b * b * eps * eps * m * nu * alpha * alpha) +
                   c * m * nu * t_cp / (b * eps) - cert.lambda2;
  cert.res_alpha_printed_variant =
      -c * inputs.t_cm / (b * b * eps * eps * m * nu * alpha * alpha) +
      c * m * nu * inputs.t_cm / (b * eps) - cert.lambda2;

  double mu_sum = 0.0;
  for (double v : cert.mu) mu_sum += v;
  cert.res_tcp = c / (b * b * eps * eps * m) + c * m * nu * alpha / (b * eps) - mu_sum;

  // Cross-check the analytic partials against central differences of the
  // Lagrangian with the duals held fixed.
  const auto check = [&](double x, double analytic, int coord) {
    const double xs = std::max(std::abs(x), 1e-12);
    const double h = 1e-6 * xs;
    const auto eval = [&](double v) {
      switch (coord) {
        case 0: return lagrangian(v, alpha, t_cp, inputs, cert.lambda1, cert.lambda2, cert.mu);
        case 1: return lagrangian(b, v, t_cp, inputs, cert.lambda1, cert.lambda2, cert.mu);
        default: return lagrangian(b, alpha, v, inputs, cert.lambda1, cert.lambda2, cert.mu);
      }
    };
    const double fd = (eval(x + h) - eval(x - h)) / (2.0 * h);
    const double diff = std::abs(fd - analytic);
    // Near a stationary point both sides cancel to ~0 while finite-difference
    // roundoff stays proportional to |L| / x, so the tolerance is anchored to
    // that natural derivative scale rather than to the residual alone.
    const double scale = std::max({std::abs(fd), std::abs(analytic),
                                   std::abs(eval(x)) / xs});
    if (diff > 1e-4 * scale + 1e-12)
      throw InternalError("kkt: analytic derivative disagrees with finite differences");
    return fd;
  };
  check(b, cert.res_b, 0);
  check(alpha, cert.res_alpha, 1);
  check(t_cp, cert.res_tcp, 2);

  cert.comp_lambda1 = cert.lambda1 * (b - 1.0);
  cert.comp_lambda2 = cert.lambda2 * alpha;
  cert.comp_mu.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    cert.comp_mu[i] = cert.mu[i] * (t_cp - inputs.ratios[i] * b);

  cert.feasible_b = b >= 1.0 - 1e-12;
  cert.feasible_alpha = alpha >= 0.0;
  cert.feasible_tcp = true;
  for (std::size_t i = 0; i < n; ++i)
    if (t_cp < inputs.ratios[i] * b * (1.0 - 1e-9)) cert.feasible_tcp = false;
  cert.duals_nonnegative = cert.lambda1 >= 0.0 && cert.lambda2 >= 0.0;
  for (double v : cert.mu)
    if (v < 0.0) cert.duals_nonnegative = false;

  cert.objective = objective_eval(std::max(b, 1.0), alpha, inputs);
  const double obj = std::max(cert.objective, 1e-300);
  cert.scaled_res_b = std::abs(cert.res_b) * std::abs(b) / obj;
  cert.scaled_res_alpha = std::abs(cert.res_alpha) * std::abs(alpha) / obj;
  cert.scaled_res_tcp = std::abs(cert.res_tcp) * std::abs(t_cp) / obj;
  return cert;
}

}  // namespace defl
