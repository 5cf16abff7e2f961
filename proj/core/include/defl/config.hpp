#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "defl/delay_model.hpp"
#include "defl/fl_sim.hpp"
#include "defl/planner.hpp"
#include "defl/system_model.hpp"

namespace defl {

struct TaskSpec {
  TaskKind kind = TaskKind::quadratic;
  int dimension = 10;
  double noise_sigma_sq = 1.0;
  double lambda_min = 0.5;       // quadratic spectrum
  double lambda_max = 1.0;
  std::uint64_t task_seed = 12345;
  int samples_per_device = 64;   // logistic only
};

struct SimSpec {
  TaskSpec task;
  int seeds = 30;            // ensemble size for multi-seed studies
  std::uint64_t seed = 1;    // base seed; runs use seed, seed+1, ...
  bool identical_data = true;
  std::optional<long> local_steps;  // V override
  std::optional<long> rounds;       // H override
  std::optional<long> batch_size;   // b override
  std::optional<double> eta;        // explicit step size
  long max_rounds = 5000;           // horizon for time-to-target runs
  std::optional<double> target_gap; // stop once the gap reaches this
};

struct BaselineSpec {
  std::string name;
  long batch_size = 1;
  double local_steps = 1.0;  // V; theta is backed out as exp(-V/nu)
};

struct ExperimentConfig {
  int schema_version = 1;
  Fleet fleet;
  LearningParams learning;
  OracleGrid grid;
  SimSpec sim;
  std::vector<BaselineSpec> baselines;
};

/// Loads and fully validates a JSON experiment configuration. Unknown
/// fields are rejected; defaults (c = 1, nu = 1, grid resolution, ...) are
/// resolved here and echoed by echo_config.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const nlohmann::json& root);

/// The configuration with every default resolved, for report echoing.
nlohmann::json echo_config(const ExperimentConfig& config);

}  // namespace defl
