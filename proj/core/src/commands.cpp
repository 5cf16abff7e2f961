#include "defl/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "defl/errors.hpp"

namespace defl {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SyntheticTask make_task(const TaskSpec& spec, int devices, bool identical_data) {
  if (spec.kind == TaskKind::quadratic)
    return make_quadratic_task(spec.dimension, spec.lambda_min, spec.lambda_max,
                               spec.noise_sigma_sq, spec.task_seed);
  return make_logistic_task(spec.dimension, devices, spec.samples_per_device,
                            identical_data, spec.task_seed);
}

json plan_to_json(const Plan& plan) {
  return json{{"alpha", plan.alpha},
              {"theta", plan.theta},
              {"b_cont", plan.b_cont},
              {"b_rounded", plan.b_rounded},
              {"t_cp_s", plan.t_cp},
              {"rounds", plan.rounds},
              {"overall_time_s", plan.overall_time},
              {"source", plan.source == PlanSource::oracle ? "oracle" : "closed_form"}};
}

json certificate_to_json(const KktCertificate& cert) {
  return json{{"lambda1", cert.lambda1},
              {"lambda2", cert.lambda2},
              {"mu", cert.mu},
              {"res_b", cert.res_b},
              {"res_alpha", cert.res_alpha},
              {"res_tcp", cert.res_tcp},
              {"res_alpha_printed_variant", cert.res_alpha_printed_variant},
              {"scaled_res_b", cert.scaled_res_b},
              {"scaled_res_alpha", cert.scaled_res_alpha},
              {"scaled_res_tcp", cert.scaled_res_tcp},
              {"comp_lambda1", cert.comp_lambda1},
              {"comp_lambda2", cert.comp_lambda2},
              {"comp_mu", cert.comp_mu},
              {"feasible_b", cert.feasible_b},
              {"feasible_alpha", cert.feasible_alpha},
              {"feasible_tcp", cert.feasible_tcp},
              {"duals_nonnegative", cert.duals_nonnegative},
              {"objective_s", cert.objective}};
}

void print_plan_line(std::ostream& out, const std::string& label, const Plan& plan) {
  out << "  " << label << ": alpha=" << g17(plan.alpha)
      << " theta=" << g17(plan.theta) << " b_cont=" << g17(plan.b_cont)
      << " b_pow2=" << plan.b_rounded << " T_cp=" << g17(plan.t_cp)
      << " H=" << g17(plan.rounds) << " overall_time=" << g17(plan.overall_time)
      << "\n";
}

void write_text(const std::string& path, const std::string& payload) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open output file: " + path);
  file << payload;
}

struct ReportRow {
  std::string label;
  double batch = kNaN;
  double theta = kNaN;
  double alpha = kNaN;
  double local_steps = kNaN;   // V, real
  double rounds = kNaN;        // H, real
  double t_cm = kNaN;
  double t_cp = kNaN;
  double round_time_s = kNaN;
  double overall_time_s = kNaN;
  std::string source;
  double time_to_target_s = kNaN;  // only with --simulate
};

ReportRow row_from_point(const std::string& label, double batch, double alpha,
                         const PlanInputs& inputs, const std::string& source) {
  ReportRow row;
  row.label = label;
  row.batch = batch;
  row.alpha = alpha;
  row.theta = std::exp(-alpha);
  row.local_steps = inputs.learning.nu * alpha;
  LearningParams params = inputs.learning;
  params.alpha = alpha;
  params.theta = row.theta;
  row.rounds = rounds_to_converge(params, batch);
  row.t_cm = inputs.t_cm;
  row.t_cp = batch * inputs.max_ratio();
  row.round_time_s = round_time(row.t_cm, row.local_steps, row.t_cp);
  row.overall_time_s = overall_time(row.rounds, row.round_time_s);
  row.source = source;
  return row;
}

}  // namespace

std::string g17(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

long plan_local_steps(const Plan& plan, const LearningParams& learning) {
  return std::max(1L, std::lround(learning.nu * plan.alpha));
}

long plan_rounds(const Plan& plan, const PlanInputs& inputs) {
  LearningParams params = inputs.learning;
  params.alpha = plan.alpha;
  params.theta = plan.theta;
  return rounds_to_converge_int(params, plan.b_cont);
}

void cmd_plan(const ExperimentConfig& config, const CommandOptions& options,
              std::ostream& out) {
  const PlanInputs inputs = make_plan_inputs(config.fleet, config.learning);
  const PlanResult closed = closed_form_plan(inputs);
  const OracleResult oracle = oracle_plan(inputs, config.grid);
  const KktCertificate oracle_cert = kkt_residuals(
      oracle.continuous.b_cont, oracle.continuous.alpha, oracle.continuous.t_cp, inputs);
  const double gap_ratio =
      (closed.plan.overall_time - oracle.continuous.overall_time) /
      oracle.continuous.overall_time;
  const BottleneckInfo bottleneck = bottleneck_device(config.fleet);

  out << "plan (epsilon=" << g17(config.learning.epsilon)
      << ", nu=" << g17(config.learning.nu) << ", c=" << g17(config.learning.c)
      << ", M=" << config.learning.devices << ")\n";
  out << "  T_cm=" << g17(inputs.t_cm) << " s, bottleneck device " << bottleneck.id
      << " (ratio " << g17(bottleneck.ratio) << " s/sample)\n";
  print_plan_line(out, "closed_form ", closed.plan);
  print_plan_line(out, "oracle      ", oracle.continuous);
  print_plan_line(out, "oracle_pow2 ", oracle.pow2);
  out << "  gap: closed form exceeds oracle by " << g17(100.0 * gap_ratio) << "%\n";
  out << "  kkt@oracle: scaled residuals b=" << g17(oracle_cert.scaled_res_b)
      << " alpha=" << g17(oracle_cert.scaled_res_alpha)
      << " tcp=" << g17(oracle_cert.scaled_res_tcp)
      << " duals_ok=" << (oracle_cert.duals_nonnegative ? "yes" : "no") << "\n";
  out << "  kkt@closed_form: scaled residuals b=" << g17(closed.certificate.scaled_res_b)
      << " alpha=" << g17(closed.certificate.scaled_res_alpha)
      << " tcp=" << g17(closed.certificate.scaled_res_tcp) << "\n";

  if (!options.out_path.empty()) {
    json record{{"config", echo_config(config)},
                {"t_cm_s", inputs.t_cm},
                {"bottleneck", {{"id", bottleneck.id}, {"ratio", bottleneck.ratio}}},
                {"closed_form", plan_to_json(closed.plan)},
                {"oracle", plan_to_json(oracle.continuous)},
                {"oracle_pow2", plan_to_json(oracle.pow2)},
                {"gap_ratio", gap_ratio},
                {"kkt_closed_form", certificate_to_json(closed.certificate)},
                {"kkt_oracle", certificate_to_json(oracle_cert)}};
    write_text(options.out_path, record.dump(2) + "\n");
  }
}

void cmd_simulate(const ExperimentConfig& config, const CommandOptions& options,
                  std::ostream& out) {
  const PlanInputs inputs = make_plan_inputs(config.fleet, config.learning);
  const SimSpec& spec = config.sim;

  Plan plan;
  const bool need_plan = !spec.batch_size || !spec.local_steps || !spec.rounds;
  if (need_plan) plan = oracle_plan(inputs, config.grid).pow2;

  SimConfig sim;
  sim.devices = static_cast<int>(config.fleet.devices.size());
  sim.batch_size = spec.batch_size.value_or(plan.b_rounded);
  sim.local_steps = spec.local_steps.value_or(
      need_plan ? plan_local_steps(plan, config.learning) : 1);
  sim.rounds = spec.rounds.value_or(
      std::min(spec.max_rounds, need_plan ? plan_rounds(plan, inputs) : 1L));
  sim.eta = spec.eta;
  // The default step size is only defined for K = H * V >= M; without an
  // explicit eta, run enough rounds to stay inside that domain.
  if (!sim.eta) {
    const long min_rounds =
        (static_cast<long>(sim.devices) + sim.local_steps - 1) / sim.local_steps;
    sim.rounds = std::max(sim.rounds, min_rounds);
  }
  sim.seed = options.seed.value_or(spec.seed);
  sim.identical_data = spec.identical_data;
  sim.fleet = config.fleet;
  sim.stop_at_gap = spec.target_gap;

  const SyntheticTask task = make_task(spec.task, sim.devices, spec.identical_data);

  std::ostringstream csv;
  csv << "round,wall_clock_s,global_loss,opt_gap\n";
  const auto flush = [&] {
    if (!options.out_path.empty())
      write_text(options.out_path, csv.str());
    else
      out << csv.str();
  };

  try {
    const SimTrace trace = run_defl(task, sim, [&](const RoundRecord& record) {
      csv << record.round << ',' << g17(record.wall_clock_s) << ','
          << g17(record.global_loss) << ',' << g17(record.opt_gap) << "\n";
    });
    const RoundRecord& last = trace.rows.back();
    csv << "# final_gap=" << g17(last.opt_gap)
        << ",overall_time_s=" << g17(last.wall_clock_s)
        << ",rounds=" << last.round << ",eta=" << g17(trace.step_size)
        << ",gap_w_bar=" << g17(trace.gap_w_bar) << "\n";
    flush();
  } catch (const DivergedError& e) {
    csv << "# error=diverged,round=" << e.round() << "\n";
    flush();
    throw;
  }
}

void cmd_sweep(const ExperimentConfig& config, const CommandOptions& options,
               std::ostream& out) {
  if (options.axis != "epsilon" && options.axis != "b" && options.axis != "theta")
    throw ConfigError("sweep: axis must be one of epsilon, b, theta");
  if (options.values.empty()) throw ConfigError("sweep: no axis values given");

  const PlanInputs inputs = make_plan_inputs(config.fleet, config.learning);
  const Plan anchor = closed_form_plan(inputs).plan;
  const double r_max = inputs.max_ratio();

  std::ostringstream csv;
  csv << "axis,value,b,theta,alpha,V,H,H_int,T_cm,T_cp,T,overall_time,overall_time_int";
  if (options.simulate) csv << ",final_gap";
  csv << ",status\n";

  const SyntheticTask task =
      options.simulate
          ? make_task(config.sim.task, static_cast<int>(config.fleet.devices.size()),
                      config.sim.identical_data)
          : SyntheticTask{};

  for (double value : options.values) {
    std::string status = "ok";
    double b = kNaN, alpha = kNaN, theta = kNaN, local_steps = kNaN;
    double rounds = kNaN, rounds_int = kNaN, t_cp = kNaN, t = kNaN;
    double total = kNaN, total_int = kNaN, final_gap = kNaN;
    try {
      PlanInputs point_inputs = inputs;
      if (options.axis == "epsilon") {
        if (!(value > 0.0) || value > 1.0)
          throw DomainError("epsilon must lie in (0, 1]");
        point_inputs.learning.epsilon = value;
        const Plan plan = closed_form_plan(point_inputs).plan;
        b = plan.b_cont;
        alpha = plan.alpha;
      } else if (options.axis == "b") {
        if (!(value >= 1.0)) throw DomainError("batch size must be at least 1");
        b = value;
        alpha = anchor.alpha;
      } else {  // theta
        if (!(value > 0.0) || !(value < 1.0))
          throw DomainError("theta must lie in (0, 1)");
        b = static_cast<double>(anchor.b_rounded);
        alpha = std::log(1.0 / value);
      }
      theta = std::exp(-alpha);
      local_steps = point_inputs.learning.nu * alpha;
      LearningParams params = point_inputs.learning;
      params.alpha = alpha;
      params.theta = theta;
      rounds = rounds_to_converge(params, b);
      rounds_int = std::ceil(rounds);
      t_cp = b * r_max;
      t = round_time(point_inputs.t_cm, local_steps, t_cp);
      total = overall_time(rounds, t);
      total_int = rounds_int * t;

      if (options.simulate) {
        SimConfig sim;
        sim.devices = static_cast<int>(config.fleet.devices.size());
        sim.batch_size = std::max(1L, std::lround(b));
        sim.local_steps = std::max(1L, std::lround(local_steps));
        sim.rounds = std::min(config.sim.max_rounds, static_cast<long>(rounds_int));
        sim.eta = config.sim.eta;
        sim.seed = options.seed.value_or(config.sim.seed);
        sim.identical_data = config.sim.identical_data;
        sim.fleet = config.fleet;
        final_gap = run_defl(task, sim).rows.back().opt_gap;
      }
    } catch (const DomainError& e) {
      status = std::string("error: ") + e.what();
    } catch (const DivergedError& e) {
      status = std::string("error: ") + e.what();
    }
    csv << options.axis << ',' << g17(value) << ',' << g17(b) << ',' << g17(theta)
        << ',' << g17(alpha) << ',' << g17(local_steps) << ',' << g17(rounds) << ','
        << g17(rounds_int) << ',' << g17(inputs.t_cm) << ',' << g17(t_cp) << ','
        << g17(t) << ',' << g17(total) << ',' << g17(total_int);
    if (options.simulate) csv << ',' << g17(final_gap);
    csv << ',' << status << "\n";
  }

  if (!options.out_path.empty())
    write_text(options.out_path, csv.str());
  else
    out << csv.str();
}

void cmd_compare(const ExperimentConfig& config, const CommandOptions& options,
                 std::ostream& out) {
  if (config.baselines.empty()) throw ConfigError("compare: no baselines defined");

  const PlanInputs inputs = make_plan_inputs(config.fleet, config.learning);
  const PlanResult closed = closed_form_plan(inputs);
  const OracleResult oracle = oracle_plan(inputs, config.grid);

  std::vector<ReportRow> rows;
  rows.push_back(row_from_point("oracle", static_cast<double>(oracle.pow2.b_rounded),
                                oracle.pow2.alpha, inputs, "oracle"));
  rows.push_back(row_from_point("closed_form", closed.plan.b_cont, closed.plan.alpha,
                                inputs, "closed_form"));
  for (const auto& baseline : config.baselines) {
    // Baselines arrive as (b, V); theta is backed out via theta = exp(-V/nu).
    const double alpha = baseline.local_steps / config.learning.nu;
    rows.push_back(row_from_point(baseline.name,
                                  static_cast<double>(baseline.batch_size), alpha,
                                  inputs, "baseline"));
  }

  if (options.simulate) {
    const auto m_count = static_cast<int>(config.fleet.devices.size());
    const SyntheticTask task =
        make_task(config.sim.task, m_count, config.sim.identical_data);
    const double target = config.sim.target_gap.value_or(config.learning.epsilon);
    for (auto& row : rows) {
      SimConfig sim;
      sim.devices = m_count;
      sim.batch_size = row.label == "closed_form"
                           ? closed.plan.b_rounded
                           : std::max(1L, std::lround(row.batch));
      sim.local_steps = std::max(1L, std::lround(row.local_steps));
      sim.rounds = config.sim.max_rounds;
      sim.eta = config.sim.eta;
      sim.seed = options.seed.value_or(config.sim.seed);
      sim.identical_data = config.sim.identical_data;
      sim.fleet = config.fleet;
      sim.stop_at_gap = target;
      const SimTrace trace = run_defl(task, sim);
      const RoundRecord& last = trace.rows.back();
      row.time_to_target_s = last.opt_gap <= target ? last.wall_clock_s : kNaN;
    }
  }

  std::ostringstream csv;
  csv << "label,b,theta,V,H,T_cm,T_cp,T,overall_time,source";
  for (const auto& baseline : config.baselines) csv << ",reduction_vs_" << baseline.name;
  if (options.simulate) csv << ",time_to_target_s";
  csv << "\n";

  out << "comparison (epsilon=" << g17(config.learning.epsilon)
      << ", nu=" << g17(config.learning.nu) << ", c=" << g17(config.learning.c)
      << ")\n";
  out << "note: overall times and reductions are analytic model values on the "
         "configured system; they are not measured training-time reductions.\n";

  for (const auto& row : rows) {
    csv << row.label << ',' << g17(row.batch) << ',' << g17(row.theta) << ','
        << g17(row.local_steps) << ',' << g17(row.rounds) << ',' << g17(row.t_cm)
        << ',' << g17(row.t_cp) << ',' << g17(row.round_time_s) << ','
        << g17(row.overall_time_s) << ',' << row.source;
    out << "  " << row.label << ": b=" << g17(row.batch)
        << " theta=" << g17(row.theta) << " V=" << g17(row.local_steps)
        << " H=" << g17(row.rounds) << " T=" << g17(row.round_time_s)
        << " overall_time=" << g17(row.overall_time_s);
    for (const auto& baseline : config.baselines) {
      double base_total = kNaN;
      for (const auto& other : rows)
        if (other.label == baseline.name) base_total = other.overall_time_s;
      const double reduction = 100.0 * (1.0 - row.overall_time_s / base_total);
      csv << ',' << g17(reduction);
      out << " vs_" << baseline.name << "=" << g17(reduction) << "%";
    }
    if (options.simulate) {
      csv << ',' << g17(row.time_to_target_s);
      out << " time_to_target=" << g17(row.time_to_target_s) << "s";
    }
    csv << "\n";
    out << "\n";
  }

  if (!options.out_path.empty()) write_text(options.out_path, csv.str());
}

}  // namespace defl
