#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "defl/config.hpp"

namespace defl {

struct CommandOptions {
  std::optional<std::uint64_t> seed;  // overrides sim.seed
  std::string out_path;               // machine-readable output destination
  bool simulate = false;              // sweep/compare: add simulated columns
  std::string axis;                   // sweep: epsilon | b | theta
  std::vector<double> values;         // sweep: axis values
};

/// Serializes a double with 17 significant digits (round-trip exact).
std::string g17(double value);

/// Integerized local-round count and round count for a plan: V = max(1,
/// round(nu * alpha)), H = ceil of the analytic round count at (b, alpha).
long plan_local_steps(const Plan& plan, const LearningParams& learning);
long plan_rounds(const Plan& plan, const PlanInputs& inputs);

/// Closed-form and oracle plans plus the KKT certificate and their gap.
/// Human-readable table to `out`; JSON record to options.out_path if set.
void cmd_plan(const ExperimentConfig& config, const CommandOptions& options,
              std::ostream& out);

/// One synchronous training run. CSV trace (round,wall_clock_s,global_loss,
/// opt_gap) to options.out_path or `out`, with a summary footer line. On
/// divergence the partial trace is flushed with an error marker row and
/// DivergedError propagates.
void cmd_simulate(const ExperimentConfig& config, const CommandOptions& options,
                  std::ostream& out);

/// Parameter sweep along epsilon, b, or theta; plot-ready CSV. Out-of-domain
/// values produce an error row and the sweep continues.
void cmd_sweep(const ExperimentConfig& config, const CommandOptions& options,
               std::ostream& out);

/// Oracle plan vs closed form vs baselines, with percent reductions.
void cmd_compare(const ExperimentConfig& config, const CommandOptions& options,
                 std::ostream& out);

}  // namespace defl
