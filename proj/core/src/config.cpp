#include "defl/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "defl/errors.hpp"

namespace defl {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& context) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError(context + ": unknown field '" + key + "'");
}

double get_number(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key)) throw ConfigError(context + ": missing field '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(context + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback,
                     const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(context + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

long get_integer(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key)) throw ConfigError(context + ": missing field '" + key + "'");
  if (!j.at(key).is_number_integer()) throw ConfigError(context + "." + key + ": expected an integer");
  return j.at(key).get<long>();
}

GpuClockModel parse_clock(const json& j, const std::string& context) {
  require_object(j, context);
  reject_unknown(j, {"a_s", "a_c", "f_c_hz", "a_M", "f_M_hz"}, context);
  GpuClockModel clock;
  clock.a_s = get_number(j, "a_s", context);
  clock.a_c = get_number(j, "a_c", context);
  clock.f_c_hz = get_number(j, "f_c_hz", context);
  clock.a_M = get_number(j, "a_M", context);
  clock.f_M_hz = get_number(j, "f_M_hz", context);
  return clock;
}

DeviceProfile parse_device(const json& j, const std::string& fallback_id,
                           const std::string& context) {
  require_object(j, context);
  reject_unknown(j,
                 {"id", "cycles_per_sample", "cycles_per_bit", "bits_per_sample",
                  "f_hz", "clock", "tx_power_w", "channel_gain", "samples"},
                 context);
  DeviceProfile device;
  device.id = j.value("id", fallback_id);

  if (j.contains("cycles_per_sample")) {
    if (j.contains("cycles_per_bit") || j.contains("bits_per_sample"))
      throw ConfigError(context + ": give either cycles_per_sample or the "
                                  "cycles_per_bit/bits_per_sample pair, not both");
    device.cycles_per_sample = get_number(j, "cycles_per_sample", context);
  } else if (j.contains("cycles_per_bit") && j.contains("bits_per_sample")) {
    device.cycles_per_sample = get_number(j, "cycles_per_bit", context) *
                               get_number(j, "bits_per_sample", context);
  } else {
    throw ConfigError(context + ": workload needs cycles_per_sample or "
                                "cycles_per_bit + bits_per_sample");
  }

  if (j.contains("f_hz")) {
    if (j.contains("clock"))
      throw ConfigError(context + ": give either f_hz or clock, not both");
    device.f_hz = get_number(j, "f_hz", context);
  } else if (j.contains("clock")) {
    device.clock = parse_clock(j.at("clock"), context + ".clock");
    device.f_hz = effective_frequency(*device.clock);
  } else {
    throw ConfigError(context + ": frequency needs f_hz or clock");
  }

  device.tx_power_w = get_number(j, "tx_power_w", context);
  device.channel_gain = get_number(j, "channel_gain", context);
  device.samples = get_number(j, "samples", context);
  return device;
}

WirelessSystem parse_wireless(const json& j) {
  const std::string context = "wireless";
  require_object(j, context);
  reject_unknown(j, {"bandwidth_hz", "noise", "update_bits"}, context);
  WirelessSystem system;
  system.bandwidth_hz = get_number(j, "bandwidth_hz", context);
  if (!(system.bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
  system.update_bits = get_number(j, "update_bits", context);

  if (!j.contains("noise")) throw ConfigError(context + ": missing field 'noise'");
  const json& noise = j.at("noise");
  require_object(noise, context + ".noise");
  reject_unknown(noise, {"dbm_per_hz", "watts"}, context + ".noise");
  if (noise.contains("watts") == noise.contains("dbm_per_hz"))
    throw ConfigError(context + ".noise: give exactly one of watts or dbm_per_hz");
  system.noise_w = noise.contains("watts")
                       ? get_number(noise, "watts", context + ".noise")
                       : noise_power_from_dbm_per_hz(
                             get_number(noise, "dbm_per_hz", context + ".noise"),
                             system.bandwidth_hz);
  return system;
}

Fleet parse_fleet(const json& j, const WirelessSystem& system) {
  const std::string context = "fleet";
  require_object(j, context);
  reject_unknown(j, {"devices", "homogeneous"}, context);
  Fleet fleet;
  fleet.system = system;
  if (j.contains("devices") == j.contains("homogeneous"))
    throw ConfigError(context + ": give exactly one of devices or homogeneous");
  if (j.contains("devices")) {
    const json& devices = j.at("devices");
    if (!devices.is_array() || devices.empty())
      throw ConfigError(context + ".devices: expected a nonempty array");
    for (std::size_t i = 0; i < devices.size(); ++i)
      fleet.devices.push_back(parse_device(devices[i], "dev" + std::to_string(i),
                                           context + ".devices[" + std::to_string(i) + "]"));
  } else {
    const json& h = j.at("homogeneous");
    require_object(h, context + ".homogeneous");
    reject_unknown(h, {"count", "device"}, context + ".homogeneous");
    const long count = get_integer(h, "count", context + ".homogeneous");
    if (count < 1) throw ConfigError("fleet device count must be at least 1");
    if (!h.contains("device"))
      throw ConfigError(context + ".homogeneous: missing field 'device'");
    for (long i = 0; i < count; ++i) {
      DeviceProfile device = parse_device(h.at("device"), "dev" + std::to_string(i),
                                          context + ".homogeneous.device");
      device.id = "dev" + std::to_string(i);
      fleet.devices.push_back(std::move(device));
    }
  }
  return fleet;
}

LearningParams parse_learning(const json& j, int devices) {
  const std::string context = "learning";
  require_object(j, context);
  reject_unknown(j, {"epsilon", "nu", "c"}, context);
  LearningParams learning;
  learning.epsilon = get_number(j, "epsilon", context);
  learning.nu = get_number_or(j, "nu", 1.0, context);
  learning.c = get_number_or(j, "c", 1.0, context);
  learning.devices = devices;
  learning.theta = 1.0;
  learning.alpha = 0.0;
  validate(learning);
  return learning;
}

OracleGrid parse_grid(const json* j) {
  OracleGrid grid;
  if (j) {
    const std::string context = "planner";
    require_object(*j, context);
    reject_unknown(*j, {"b_max", "b_points", "alpha_min", "alpha_max", "alpha_points"},
                   context);
    grid.b_max = get_number_or(*j, "b_max", grid.b_max, context);
    grid.b_points = static_cast<int>(get_number_or(*j, "b_points", grid.b_points, context));
    grid.alpha_min = get_number_or(*j, "alpha_min", grid.alpha_min, context);
    grid.alpha_max = get_number_or(*j, "alpha_max", grid.alpha_max, context);
    grid.alpha_points =
        static_cast<int>(get_number_or(*j, "alpha_points", grid.alpha_points, context));
  }
  validate(grid);
  return grid;
}

TaskSpec parse_task(const json* j) {
  TaskSpec task;
  if (!j) return task;
  const std::string context = "sim.task";
  require_object(*j, context);
  reject_unknown(*j,
                 {"kind", "dimension", "noise_sigma_sq", "lambda_min", "lambda_max",
                  "task_seed", "samples_per_device"},
                 context);
  const std::string kind = j->value("kind", "quadratic");
  if (kind == "quadratic")
    task.kind = TaskKind::quadratic;
  else if (kind == "logistic")
    task.kind = TaskKind::logistic;
  else
    throw ConfigError(context + ".kind: expected 'quadratic' or 'logistic'");
  task.dimension = static_cast<int>(get_number_or(*j, "dimension", task.dimension, context));
  task.noise_sigma_sq = get_number_or(*j, "noise_sigma_sq", task.noise_sigma_sq, context);
  task.lambda_min = get_number_or(*j, "lambda_min", task.lambda_min, context);
  task.lambda_max = get_number_or(*j, "lambda_max", task.lambda_max, context);
  task.task_seed = static_cast<std::uint64_t>(
      get_number_or(*j, "task_seed", static_cast<double>(task.task_seed), context));
  task.samples_per_device = static_cast<int>(
      get_number_or(*j, "samples_per_device", task.samples_per_device, context));
  if (task.dimension < 1) throw ConfigError("task dimension must be at least 1");
  if (!(task.lambda_min > 0.0) || !(task.lambda_max >= task.lambda_min))
    throw ConfigError("task spectrum must satisfy 0 < lambda_min <= lambda_max");
  if (task.noise_sigma_sq < 0.0) throw ConfigError("noise variance must be nonnegative");
  return task;
}

SimSpec parse_sim(const json* j) {
  SimSpec sim;
  if (!j) return sim;
  const std::string context = "sim";
  require_object(*j, context);
  reject_unknown(*j,
                 {"task", "seeds", "seed", "identical_data", "local_steps", "rounds",
                  "batch_size", "eta", "max_rounds", "target_gap"},
                 context);
  sim.task = parse_task(j->contains("task") ? &j->at("task") : nullptr);
  sim.seeds = static_cast<int>(get_number_or(*j, "seeds", sim.seeds, context));
  sim.seed = static_cast<std::uint64_t>(
      get_number_or(*j, "seed", static_cast<double>(sim.seed), context));
  if (j->contains("identical_data")) {
    if (!j->at("identical_data").is_boolean())
      throw ConfigError(context + ".identical_data: expected a boolean");
    sim.identical_data = j->at("identical_data").get<bool>();
  }
  if (j->contains("local_steps")) sim.local_steps = get_integer(*j, "local_steps", context);
  if (j->contains("rounds")) sim.rounds = get_integer(*j, "rounds", context);
  if (j->contains("batch_size")) sim.batch_size = get_integer(*j, "batch_size", context);
  if (j->contains("eta")) sim.eta = get_number(*j, "eta", context);
  sim.max_rounds = static_cast<long>(
      get_number_or(*j, "max_rounds", static_cast<double>(sim.max_rounds), context));
  if (j->contains("target_gap")) sim.target_gap = get_number(*j, "target_gap", context);
  if (sim.seeds < 1) throw ConfigError("sim.seeds must be at least 1");
  if (sim.max_rounds < 1) throw ConfigError("sim.max_rounds must be at least 1");
  if (sim.local_steps && *sim.local_steps < 1)
    throw ConfigError("sim.local_steps must be at least 1");
  if (sim.rounds && *sim.rounds < 1) throw ConfigError("sim.rounds must be at least 1");
  if (sim.batch_size && *sim.batch_size < 1)
    throw ConfigError("sim.batch_size must be at least 1");
  if (sim.eta && !(*sim.eta > 0.0)) throw ConfigError("sim.eta must be positive");
  return sim;
}

std::vector<BaselineSpec> parse_baselines(const json* j) {
  std::vector<BaselineSpec> baselines;
  if (!j) return baselines;
  if (!j->is_array()) throw ConfigError("baselines: expected an array");
  for (std::size_t i = 0; i < j->size(); ++i) {
    const std::string context = "baselines[" + std::to_string(i) + "]";
    const json& entry = (*j)[i];
    require_object(entry, context);
    reject_unknown(entry, {"name", "b", "V"}, context);
    BaselineSpec baseline;
    if (!entry.contains("name") || !entry.at("name").is_string())
      throw ConfigError(context + ": missing string field 'name'");
    baseline.name = entry.at("name").get<std::string>();
    baseline.batch_size = get_integer(entry, "b", context);
    baseline.local_steps = get_number(entry, "V", context);
    if (baseline.batch_size < 1) throw ConfigError(context + ": b must be at least 1");
    if (!(baseline.local_steps > 0.0)) throw ConfigError(context + ": V must be positive");
    baselines.push_back(std::move(baseline));
  }
  return baselines;
}

}  // namespace

ExperimentConfig parse_config(const json& root) {
  require_object(root, "config");
  reject_unknown(root,
                 {"schema_version", "fleet", "wireless", "learning", "planner", "sim",
                  "baselines"},
                 "config");
  ExperimentConfig config;
  config.schema_version = static_cast<int>(get_number_or(root, "schema_version", 1, "config"));
  if (config.schema_version != 1)
    throw ConfigError("unsupported schema_version " + std::to_string(config.schema_version));

  if (!root.contains("wireless")) throw ConfigError("config: missing field 'wireless'");
  if (!root.contains("fleet")) throw ConfigError("config: missing field 'fleet'");
  if (!root.contains("learning")) throw ConfigError("config: missing field 'learning'");

  const WirelessSystem system = parse_wireless(root.at("wireless"));
  config.fleet = parse_fleet(root.at("fleet"), system);
  try {
    validate(config.fleet);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  config.learning = parse_learning(root.at("learning"),
                                   static_cast<int>(config.fleet.devices.size()));
  config.grid = parse_grid(root.contains("planner") ? &root.at("planner") : nullptr);
  config.sim = parse_sim(root.contains("sim") ? &root.at("sim") : nullptr);
  config.baselines =
      parse_baselines(root.contains("baselines") ? &root.at("baselines") : nullptr);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config(root);
}

nlohmann::json echo_config(const ExperimentConfig& config) {
  json devices = json::array();
  for (const auto& device : config.fleet.devices) {
    json d{{"id", device.id},
           {"f_hz", device.f_hz},
           {"cycles_per_sample", device.cycles_per_sample},
           {"samples", device.samples},
           {"tx_power_w", device.tx_power_w},
           {"channel_gain", device.channel_gain}};
    devices.push_back(std::move(d));
  }
  json baselines = json::array();
  for (const auto& baseline : config.baselines)
    baselines.push_back(json{{"name", baseline.name},
                             {"b", baseline.batch_size},
                             {"V", baseline.local_steps}});
  return json{
      {"schema_version", config.schema_version},
      {"fleet", {{"devices", devices}}},
      {"wireless",
       {{"bandwidth_hz", config.fleet.system.bandwidth_hz},
        {"noise", {{"watts", config.fleet.system.noise_w}}},
        {"update_bits", config.fleet.system.update_bits}}},
      {"learning",
       {{"epsilon", config.learning.epsilon},
        {"nu", config.learning.nu},
        {"c", config.learning.c}}},
      {"planner",
       {{"b_max", config.grid.b_max},
        {"b_points", config.grid.b_points},
        {"alpha_min", config.grid.alpha_min},
        {"alpha_max", config.grid.alpha_max},
        {"alpha_points", config.grid.alpha_points}}},
      {"sim",
       {{"seeds", config.sim.seeds},
        {"seed", config.sim.seed},
        {"identical_data", config.sim.identical_data},
        {"max_rounds", config.sim.max_rounds}}},
      {"baselines", baselines}};
}

}  // namespace defl
