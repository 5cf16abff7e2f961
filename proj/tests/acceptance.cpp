// Acceptance gate: one line per criterion, PASS or FAIL with measured
// numbers. Exits nonzero if any criterion fails.
//
// Usage: acceptance <defl-binary> <config-dir>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "defl/commands.hpp"
#include "defl/config.hpp"
#include "defl/delay_model.hpp"
#include "defl/errors.hpp"
#include "defl/fl_sim.hpp"
#include "defl/planner.hpp"
#include "defl/rng.hpp"
#include "defl/system_model.hpp"

using namespace defl;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("criterion %d (%s): %s — %s\n", criterion, name.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str());
  if (!pass) ++g_failures;
}

bool close(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

PlanInputs default_inputs() {
  PlanInputs in;
  in.t_cm = 0.005;
  in.ratios.assign(10, 0.015);
  in.learning = LearningParams::from_alpha(0.01, 1.0, 1.0, 1.0, 10);
  return in;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// ---- criterion 1: worked formula examples, 1e-12 relative -----------------

void criterion_1() {
  int bad = 0;
  std::string first;
  const auto expect = [&](const char* what, double got, double want) {
    if (!close(got, want)) {
      ++bad;
      if (first.empty()) first = what;
    }
  };

  expect("effective_frequency", effective_frequency({1e-10, 0.5, 5e9, 0.5, 5e9}),
         1.0 / 3e-10);

  DeviceProfile dev;
  dev.id = "d";
  dev.f_hz = 2e9;
  dev.cycles_per_sample = 3e7;
  dev.tx_power_w = 1.0;
  dev.channel_gain = 1023.0;
  dev.samples = 100;
  expect("local_step_time", local_step_time(dev, 32), 0.48);
  expect("uplink_time", uplink_time(dev, {2e7, 1.0, 1e6}), 5e-3);

  expect("local_rounds", local_rounds(0.15, 1.0), std::log(1.0 / 0.15));
  expect("round_time", round_time(0.005, 10.0, 0.48), 4.805);
  expect("rounds_to_converge",
         rounds_to_converge(LearningParams::from_alpha(0.1, 0.5, 1.0, 1.0, 10), 2.0),
         55.0);
  expect("overall_time a", overall_time(2.0, 4.805), 9.61);
  expect("overall_time b", overall_time(55.0, 0.005), 0.275);
  expect("stepsize a", stepsize(1.0, 4, 16), 0.125);
  expect("stepsize b", stepsize(2.0, 1, 100), 0.0125);

  ConvergenceParams cp;
  cp.L = 1.0;
  cp.sigma_sq = 1.0;
  cp.dist0_sq = 1.0;
  cp.devices = 1;
  cp.total_steps = 1;
  cp.local_rounds = 1;
  cp.batch_size = 1;
  expect("convergence_bound", convergence_bound(cp), 8.5);

  PlanInputs small = default_inputs();
  small.learning = LearningParams::from_alpha(0.1, 1.0, 1.0, 1.0, 10);
  expect("objective_eval", objective_eval(2.0, 0.5, small), 1.1);

  const PlanResult plan = closed_form_plan(default_inputs());
  expect("alpha*", plan.plan.alpha, std::sqrt(1.0 / 3.0));
  expect("b_cont*", plan.plan.b_cont, 20.0 * std::sqrt(1.0 / 300.0));
  expect("T_cp*", plan.plan.t_cp, 0.015 * 20.0 * std::sqrt(1.0 / 300.0));

  {  // hand-checked scalar SGD: 1 -> 0.5 -> 0.25
    SyntheticTask task;
    task.kind = TaskKind::quadratic;
    task.dimension = 1;
    task.quad_matrix = Eigen::MatrixXd::Constant(1, 1, 2.0);
    task.quad_linear = Eigen::VectorXd::Zero(1);
    task.minimizer = Eigen::VectorXd::Zero(1);
    task.smoothness = 2.0;
    task.noise_sigma_sq = 0.0;
    RngStream rng(1);
    expect("local_sgd", local_sgd(task, 0, Eigen::VectorXd::Ones(1), 2, 1, 0.25, rng)(0),
           0.25);
  }

  report(1, "formula examples", bad == 0,
         bad == 0 ? "all worked examples match to 1e-12 relative"
                  : "first mismatch: " + first);
}

// ---- criterion 2: oracle optimality over randomized configs ----------------

void criterion_2() {
  RngStream rng(20260826);
  int configs = 0, violations = 0;
  OracleGrid grid;  // defaults: b in [1, 1024], alpha in [1e-4, 20]

  while (configs < 50) {
    const double t_cm = std::exp(rng.uniform(std::log(1e-4), std::log(0.1)));
    const double ratio = std::exp(rng.uniform(std::log(1e-5), std::log(0.1)));
    const int m = 1 + static_cast<int>(rng.uniform_index(20));
    const double eps = std::exp(rng.uniform(std::log(5e-3), std::log(0.3)));
    const double nu = rng.uniform(0.5, 2.0);
    const double c = rng.uniform(0.5, 2.0);

    PlanInputs in;
    in.t_cm = t_cm;
    in.ratios.assign(static_cast<std::size_t>(m), ratio);
    in.learning = LearningParams::from_alpha(eps, 1.0, nu, c, m);

    // Keep the closed-form candidate inside the oracle's search box so the
    // two are comparable; the oracle can only certify points it can reach.
    const double b_star = 2.0 * c * m * std::sqrt(t_cm * eps / ratio);
    const double a_star = std::sqrt(t_cm / (m * m * eps * nu * nu * ratio));
    if (b_star > grid.b_max || a_star < 2.0 * grid.alpha_min ||
        a_star > 0.5 * grid.alpha_max)
      continue;
    ++configs;

    const PlanResult closed = closed_form_plan(in);
    const OracleResult oracle = oracle_plan(in, grid);
    const double t_oracle = oracle.continuous.overall_time;
    if (t_oracle > closed.plan.overall_time + 1e-9 * std::abs(closed.plan.overall_time))
      ++violations;
    for (int i = 0; i < 1000; ++i) {
      const double b = std::exp(rng.uniform(std::log(grid.b_min), std::log(grid.b_max)));
      const double a =
          std::exp(rng.uniform(std::log(grid.alpha_min), std::log(grid.alpha_max)));
      if (t_oracle > objective_eval(b, a, in) * (1.0 + 1e-9)) ++violations;
    }
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d randomized configs x 1000 probe points, %d violations", configs,
                violations);
  report(2, "oracle optimality", violations == 0, detail);
}

// ---- criterion 3: KKT certificate at the oracle optimum --------------------

void criterion_3() {
  const PlanInputs in = default_inputs();
  const OracleResult oracle = oracle_plan(in);
  const KktCertificate cert = kkt_residuals(
      oracle.continuous.b_cont, oracle.continuous.alpha, oracle.continuous.t_cp, in);
  const double worst = cert.max_scaled_stationarity();
  const bool interior = oracle.continuous.b_cont > 1.0 + 1e-9 &&
                        oracle.continuous.b_cont < 1024.0 * (1.0 - 1e-12);
  const bool pass = interior && worst <= 1e-5 && cert.duals_nonnegative;
  char detail[240];
  std::snprintf(detail, sizeof detail,
                "oracle minimum at b=%.6g (boundary: %s), max scaled residual %.3g, "
                "duals nonnegative: %s; the relaxed objective is monotone "
                "decreasing in b, so no interior stationary point exists",
                oracle.continuous.b_cont, interior ? "no" : "yes", worst,
                cert.duals_nonnegative ? "yes" : "no");
  report(3, "kkt certificate", pass, detail);
}

// ---- criterion 4: convergence bound, Monte Carlo ---------------------------

void criterion_4() {
  const SyntheticTask task = make_quadratic_task(10, 0.5, 1.0, 1.0, 12345);
  struct Case {
    long k, b, v;
  };
  const std::vector<Case> cases{{200, 1, 1}, {200, 4, 2}, {400, 16, 4}};
  bool pass = true;
  std::string detail;
  for (const Case& c : cases) {
    SimConfig config;
    config.devices = 10;
    config.batch_size = c.b;
    config.local_steps = c.v;
    config.rounds = c.k / c.v;
    config.seed = 1;
    const BoundCheckReport r = bound_check(task, config, 30);
    char buf[96];
    std::snprintf(buf, sizeof buf, "(K=%ld,b=%ld,V=%ld): gap %.4g vs bound %.4g; ",
                  c.k, c.b, c.v, r.mean_gap, r.bound);
    detail += buf;
    pass = pass && r.pass;
  }
  report(4, "convergence bound", pass, detail);
}

// ---- criterion 5: variance scaling ------------------------------------------

void criterion_5() {
  const double sigma_sq = 1.0;
  const SyntheticTask task = make_quadratic_task(10, 0.5, 1.0, sigma_sq, 42);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(10);
  const Eigen::VectorXd exact = task.quad_matrix * w - task.quad_linear;
  bool pass = true;
  std::string detail;
  for (long b : {1L, 4L, 16L}) {
    RngStream rng(77, static_cast<std::uint64_t>(b));
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
      acc += (sample_stochastic_gradient(task, 0, w, b, rng) - exact).squaredNorm();
    const double got = acc / n;
    const double want = sigma_sq / static_cast<double>(b);
    if (std::abs(got - want) > 0.2 * want) pass = false;
    char buf[64];
    std::snprintf(buf, sizeof buf, "b=%ld: %.4g vs %.4g; ", b, got, want);
    detail += buf;
  }
  report(5, "variance scaling", pass, detail);
}

// ---- criterion 6: monotonicity and interior trade-off ----------------------

void criterion_6() {
  const PlanInputs in = default_inputs();
  bool mono = true;

  const auto h_of = [&](double b, double alpha, double eps) {
    return rounds_to_converge(LearningParams::from_alpha(eps, alpha, 1.0, 1.0, 10), b);
  };
  for (int i = 1; i < 400; ++i) {
    const double x0 = 1.0 + (i - 1) * 2.0, x1 = 1.0 + i * 2.0;
    if (h_of(x1, 0.5, 0.01) >= h_of(x0, 0.5, 0.01)) mono = false;  // in b
    const double a0 = 0.01 * i, a1 = 0.01 * (i + 1);
    if (h_of(4.0, a1, 0.01) >= h_of(4.0, a0, 0.01)) mono = false;  // in alpha
    const double e0 = 0.001 + 0.002 * (i - 1), e1 = 0.001 + 0.002 * i;
    if (e1 < 1.0 && h_of(4.0, 0.5, e1) >= h_of(4.0, 0.5, e0)) mono = false;  // in eps
  }

  // Trade-off curve over integer b with theta fixed at the closed-form
  // operating point, using the ceiled round count a deployment would run.
  const double alpha = closed_form_plan(in).plan.alpha;
  long best_b = 1;
  double best = std::numeric_limits<double>::infinity();
  for (long b = 1; b <= 1024; ++b) {
    const auto params = LearningParams::from_alpha(0.01, alpha, 1.0, 1.0, 10);
    const double h = std::ceil(rounds_to_converge(params, static_cast<double>(b)));
    const double t = round_time(in.t_cm, alpha, static_cast<double>(b) * 0.015);
    const double total = h * t;
    if (total < best) {
      best = total;
      best_b = b;
    }
  }
  const bool interior = best_b > 1 && best_b < 1024;
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "H monotone decreasing in b, alpha, eps: %s; integer-round "
                "trade-off minimum at b=%ld (interior: %s)",
                mono ? "yes" : "no", best_b, interior ? "yes" : "no");
  report(6, "monotonicity and trade-off", mono && interior, detail);
}

// ---- criterion 7: comparison analog -----------------------------------------

void criterion_7(const std::string& config_dir) {
  const ExperimentConfig config = load_config(config_dir + "/paper_defaults.json");
  const PlanInputs in = make_plan_inputs(config.fleet, config.learning);
  const OracleResult oracle = oracle_plan(in, config.grid);

  const auto baseline_time = [&](long b, double v) {
    const double alpha = v / config.learning.nu;
    const auto params = LearningParams::from_alpha(
        config.learning.epsilon, alpha, config.learning.nu, config.learning.c,
        config.learning.devices);
    const double h = rounds_to_converge(params, static_cast<double>(b));
    const double t = round_time(in.t_cm, v, static_cast<double>(b) * in.max_ratio());
    return overall_time(h, t);
  };

  const double fedavg = baseline_time(10, 20.0);
  const double rand = baseline_time(16, 15.0);
  const double plan = oracle.pow2.overall_time;
  const bool pass = plan <= fedavg && plan <= rand;
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "plan %.4gs vs FedAvg %.4gs (%.1f%% less) and Rand %.4gs (%.1f%% less)",
                plan, fedavg, 100.0 * (1.0 - plan / fedavg), rand,
                100.0 * (1.0 - plan / rand));
  report(7, "comparison analog", pass, detail);
}

// ---- criterion 8: simulated time-to-target trend ----------------------------

void criterion_8(const std::string& config_dir) {
  const ExperimentConfig config = load_config(config_dir + "/trend_check.json");
  if (!config.sim.target_gap) {
    report(8, "simulation trend", false, "pinned config lacks target_gap");
    return;
  }
  const double target = *config.sim.target_gap;
  const PlanInputs in = make_plan_inputs(config.fleet, config.learning);
  const OracleResult oracle = oracle_plan(in, config.grid);
  const long plan_b = oracle.pow2.b_rounded;
  const long plan_v = std::max(1L, std::lround(config.learning.nu * oracle.pow2.alpha));

  const SyntheticTask task = make_quadratic_task(
      config.sim.task.dimension, config.sim.task.lambda_min, config.sim.task.lambda_max,
      config.sim.task.noise_sigma_sq, config.sim.task.task_seed);

  const auto time_to_target = [&](long b, long v, std::uint64_t seed) {
    SimConfig sim;
    sim.devices = static_cast<int>(config.fleet.devices.size());
    sim.batch_size = b;
    sim.local_steps = v;
    sim.rounds = config.sim.max_rounds;
    sim.eta = config.sim.eta;
    sim.seed = seed;
    sim.identical_data = true;
    sim.fleet = config.fleet;
    sim.stop_at_gap = target;
    const SimTrace trace = run_defl(task, sim);
    const RoundRecord& last = trace.rows.back();
    return last.opt_gap <= target ? last.wall_clock_s
                                  : std::numeric_limits<double>::infinity();
  };

  int wins = 0;
  for (int i = 0; i < config.sim.seeds; ++i) {
    const std::uint64_t seed = config.sim.seed + static_cast<std::uint64_t>(i);
    const double plan_t = time_to_target(plan_b, plan_v, seed);
    const double fedavg_t = time_to_target(10, 20, seed);
    if (plan_t < fedavg_t) ++wins;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "planned (b=%ld, V=%ld) beat FedAvg (b=10, V=20) to gap %.3g in "
                "%d/%d seeds",
                plan_b, plan_v, target, wins, config.sim.seeds);
  report(8, "simulation trend", wins >= 27, detail);
}

// ---- criterion 9: CSV determinism across worker counts ----------------------

void criterion_9(const std::string& defl_bin, const std::string& config_dir) {
  const std::string cfg = config_dir + "/paper_defaults.json";
  const auto run_once = [&](const char* threads, const char* out) {
    const std::string cmd = "DEFL_THREADS=" + std::string(threads) + " " + defl_bin +
                            " simulate --config " + cfg + " --seed 5 --out " + out +
                            " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  const bool ok1 = run_once("1", "/tmp/defl_acc_t1.csv");
  const bool ok4 = run_once("4", "/tmp/defl_acc_t4.csv");
  const std::string a = slurp("/tmp/defl_acc_t1.csv");
  const std::string b = slurp("/tmp/defl_acc_t4.csv");
  const bool pass = ok1 && ok4 && !a.empty() && a == b;
  char detail[120];
  std::snprintf(detail, sizeof detail,
                "DEFL_THREADS=1 vs 4: %zu-byte CSVs %s", a.size(),
                pass ? "byte-identical" : "differ");
  report(9, "determinism", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <defl-binary> <config-dir>\n");
    return 2;
  }
  const std::string defl_bin = argv[1];
  const std::string config_dir = argv[2];

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7(config_dir);
  criterion_8(config_dir);
  criterion_9(defl_bin, config_dir);

  std::printf("%d of 9 criteria passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
