#include <cmath>
#include <cstdlib>

#include <doctest.h>

#include "defl/delay_model.hpp"
#include "defl/errors.hpp"
#include "defl/fl_sim.hpp"

using namespace defl;

namespace {

SyntheticTask scalar_task(double a, double u, double sigma_sq = 0.0) {
  SyntheticTask task;
  task.kind = TaskKind::quadratic;
  task.dimension = 1;
  task.quad_matrix = Eigen::MatrixXd::Constant(1, 1, a);
  task.quad_linear = Eigen::VectorXd::Constant(1, u);
  task.minimizer = Eigen::VectorXd::Constant(1, u / a);
  task.smoothness = a;
  task.noise_sigma_sq = sigma_sq;
  return task;
}

}  // namespace

TEST_CASE("stochastic gradient") {
  SUBCASE("noiseless quadratic is the exact gradient") {
    const SyntheticTask task = make_quadratic_task(5, 0.5, 1.0, 0.0, 42);
    RngStream rng(1);
    Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
    const Eigen::VectorXd g = sample_stochastic_gradient(task, 0, w, 3, rng);
    const Eigen::VectorXd exact = task.quad_matrix * w - task.quad_linear;
    CHECK((g - exact).norm() == 0.0);
    CHECK(sample_stochastic_gradient(task, 0, task.minimizer, 1, rng).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("variance scales as sigma^2 / b") {
    const double sigma_sq = 4.0;
    const SyntheticTask task = make_quadratic_task(10, 0.5, 1.0, sigma_sq, 42);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(10);
    const Eigen::VectorXd exact = task.quad_matrix * w - task.quad_linear;
    for (long b : {1L, 4L, 16L}) {
      RngStream rng(99, static_cast<std::uint64_t>(b));
      double acc = 0.0;
      const int n = 10000;
      for (int i = 0; i < n; ++i)
        acc += (sample_stochastic_gradient(task, 0, w, b, rng) - exact).squaredNorm();
      const double expected = sigma_sq / static_cast<double>(b);
      CHECK(acc / n == doctest::Approx(expected).epsilon(0.2));
    }
  }
}

TEST_CASE("local sgd") {
  SUBCASE("one noiseless step is a plain gradient step") {
    const SyntheticTask task = make_quadratic_task(4, 0.5, 1.0, 0.0, 7);
    RngStream rng(2);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    const Eigen::VectorXd out = local_sgd(task, 0, w, 1, 1, 0.1, rng);
    const Eigen::VectorXd expect = w - 0.1 * (task.quad_matrix * w - task.quad_linear);
    CHECK((out - expect).norm() == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("zero step size freezes the iterate") {
    const SyntheticTask task = make_quadratic_task(4, 0.5, 1.0, 1.0, 7);
    RngStream rng(2);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    CHECK((local_sgd(task, 0, w, 5, 2, 0.0, rng) - w).norm() == 0.0);
  }

  SUBCASE("hand-checked scalar iteration") {
    // F(w) = w^2 (A = [2], u = [0]), w0 = 1, eta = 0.25:
    // 1 -> 1 - 0.25*2 = 0.5 -> 0.5 - 0.25*1 = 0.25
    const SyntheticTask task = scalar_task(2.0, 0.0);
    RngStream rng(3);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
    CHECK(local_sgd(task, 0, w, 2, 1, 0.25, rng)(0) ==
          doctest::Approx(0.25).epsilon(1e-15));
  }

  SUBCASE("divergence is reported with the offending step") {
    const SyntheticTask task = scalar_task(2.0, 0.0);
    RngStream rng(3);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1e308);
    CHECK_THROWS_AS(local_sgd(task, 0, w, 50, 1, 1e308, rng), DivergedError);
  }
}

TEST_CASE("aggregate") {
  std::vector<Eigen::VectorXd> states{Eigen::VectorXd::Constant(1, 0.0),
                                      Eigen::VectorXd::Constant(1, 2.0)};
  CHECK(aggregate(states, {1.0, 1.0})(0) == doctest::Approx(1.0).epsilon(1e-15));

  states = {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 4.0)};
  CHECK(aggregate(states, {1.0, 3.0})(0) == doctest::Approx(3.0).epsilon(1e-15));

  states = {Eigen::VectorXd::Constant(1, 7.5)};
  CHECK(aggregate(states, {2.0})(0) == doctest::Approx(7.5).epsilon(1e-15));

  CHECK_THROWS_AS(aggregate({}, {}), DomainError);
}

TEST_CASE("run_defl") {
  SUBCASE("degenerate loop is one gradient step") {
    const SyntheticTask task = make_quadratic_task(3, 0.5, 1.0, 0.0, 5);
    SimConfig config;
    config.devices = 1;
    config.local_steps = 1;
    config.rounds = 1;
    config.batch_size = 1;
    config.eta = 0.2;
    config.seed = 17;
    config.w0 = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
    const SimTrace trace = run_defl(task, config);
    const Eigen::VectorXd expect =
        *config.w0 - 0.2 * (task.quad_matrix * *config.w0 - task.quad_linear);
    CHECK((trace.w_final - expect).norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(trace.rows.size() == 1);
  }

  SUBCASE("identical seeds give bitwise-identical traces") {
    const SyntheticTask task = make_quadratic_task(10, 0.5, 1.0, 1.0, 12345);
    SimConfig config;
    config.devices = 10;
    config.local_steps = 3;
    config.rounds = 20;
    config.batch_size = 4;
    config.seed = 9;
    const SimTrace a = run_defl(task, config);
    const SimTrace b = run_defl(task, config);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].global_loss == b.rows[i].global_loss);
      CHECK(a.rows[i].opt_gap == b.rows[i].opt_gap);
    }
    CHECK((a.w_final - b.w_final).norm() == 0.0);
    CHECK((a.w_bar - b.w_bar).norm() == 0.0);
  }

  SUBCASE("trace is independent of the worker count") {
    const SyntheticTask task = make_quadratic_task(10, 0.5, 1.0, 1.0, 12345);
    SimConfig config;
    config.devices = 10;
    config.local_steps = 2;
    config.rounds = 10;
    config.batch_size = 2;
    config.seed = 4;
    setenv("DEFL_THREADS", "1", 1);
    const SimTrace a = run_defl(task, config);
    setenv("DEFL_THREADS", "4", 1);
    const SimTrace b = run_defl(task, config);
    unsetenv("DEFL_THREADS");
    for (std::size_t i = 0; i < a.rows.size(); ++i)
      CHECK(a.rows[i].global_loss == b.rows[i].global_loss);
    CHECK((a.w_final - b.w_final).norm() == 0.0);
  }

  SUBCASE("noiseless identical devices behave like a single device") {
    const SyntheticTask task = make_quadratic_task(6, 0.5, 1.0, 0.0, 21);
    SimConfig one;
    one.devices = 1;
    one.local_steps = 4;
    one.rounds = 5;
    one.batch_size = 1;
    one.eta = 0.1;
    one.seed = 33;
    const SimTrace single = run_defl(task, one);
    SimConfig many = one;
    many.devices = 8;
    many.w0 = Eigen::VectorXd::Zero(6);
    SimConfig one_shared = one;
    one_shared.w0 = Eigen::VectorXd::Zero(6);
    const SimTrace m = run_defl(task, many);
    const SimTrace s = run_defl(task, one_shared);
    CHECK((m.w_final - s.w_final).norm() == doctest::Approx(0.0).epsilon(1e-12));
    (void)single;
  }

  SUBCASE("wall clock follows the fleet delay model") {
    const SyntheticTask task = make_quadratic_task(4, 0.5, 1.0, 1.0, 8);
    DeviceProfile d;
    d.id = "d0";
    d.f_hz = 2e9;
    d.cycles_per_sample = 3e7;
    d.tx_power_w = 0.1;
    d.channel_gain = 1023.0;
    d.samples = 100;
    Fleet fleet;
    fleet.system = {2e7, 0.1, 1e6};  // p*h/N = 1023 -> uplink 5 ms
    fleet.devices = {d, d, d};
    fleet.devices[1].id = "d1";
    fleet.devices[2].id = "d2";

    SimConfig config;
    config.devices = 3;
    config.local_steps = 4;
    config.rounds = 6;
    config.batch_size = 2;
    config.eta = 0.05;
    config.seed = 2;
    config.fleet = fleet;
    const SimTrace trace = run_defl(task, config);
    const double t_cp = local_step_time(d, 2);
    const double per_round = round_time(fleet_comm_time(fleet), 4.0, t_cp);
    for (std::size_t i = 0; i < trace.rows.size(); ++i)
      CHECK(trace.rows[i].wall_clock_s ==
            doctest::Approx((i + 1) * per_round).epsilon(1e-12));
  }

  SUBCASE("stop_at_gap ends the run early") {
    const SyntheticTask task = make_quadratic_task(4, 0.5, 1.0, 0.0, 3);
    SimConfig config;
    config.devices = 2;
    config.local_steps = 2;
    config.rounds = 500;
    config.batch_size = 1;
    config.eta = 0.3;
    config.seed = 5;
    config.stop_at_gap = 1e-6;
    const SimTrace trace = run_defl(task, config);
    CHECK(trace.rows.size() < 500);
    CHECK(trace.rows.back().opt_gap <= 1e-6);
  }
}

TEST_CASE("bound check on a small pinned grid") {
  const SyntheticTask task = make_quadratic_task(10, 0.5, 1.0, 1.0, 12345);
  SimConfig config;
  config.devices = 10;
  config.batch_size = 4;
  config.local_steps = 2;
  config.rounds = 100;  // K = 200
  config.seed = 1;
  const BoundCheckReport report = bound_check(task, config, 10);
  CHECK(report.pass);
  CHECK(report.mean_gap <= report.bound);
}
