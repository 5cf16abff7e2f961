#include "defl/system_model.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include "defl/errors.hpp"

namespace defl {

double effective_frequency(const GpuClockModel& clock) {
  if (clock.f_c_hz <= 0.0 || clock.f_M_hz <= 0.0)
    throw DomainError("clock model: core and memory frequencies must be positive");
  if (clock.a_s < 0.0 || clock.a_c < 0.0 || clock.a_M < 0.0)
    throw DomainError("clock model: coefficients must be nonnegative");
  const double denom = clock.a_s + clock.a_c / clock.f_c_hz + clock.a_M / clock.f_M_hz;
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw DomainError("clock model: denominator must be positive and finite");
  return 1.0 / denom;
}

void validate(const DeviceProfile& device) {
  if (!(device.f_hz > 0.0)) throw DomainError("device " + device.id + ": frequency must be positive");
  if (!(device.cycles_per_sample > 0.0))
    throw DomainError("device " + device.id + ": cycles per sample must be positive");
  if (!(device.samples >= 1.0))
    throw DomainError("device " + device.id + ": dataset size must be at least 1");
  if (!(device.tx_power_w > 0.0))
    throw DomainError("device " + device.id + ": transmit power must be positive");
  if (!(device.channel_gain > 0.0))
    throw DomainError("device " + device.id + ": channel gain must be positive");
}

void validate(const WirelessSystem& system) {
  if (!(system.bandwidth_hz > 0.0)) throw DomainError("bandwidth must be positive");
  if (!(system.noise_w > 0.0)) throw DomainError("noise power must be positive");
  if (!(system.update_bits > 0.0)) throw DomainError("update size must be positive");
}

double noise_power_from_dbm_per_hz(double dbm_per_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw DomainError("bandwidth must be positive");
  return std::pow(10.0, (dbm_per_hz - 30.0) / 10.0) * bandwidth_hz;
}

void validate(const Fleet& fleet) {
  if (fleet.devices.empty()) throw DomainError("fleet must contain at least one device");
  validate(fleet.system);
  std::unordered_set<std::string> ids;
  for (const auto& device : fleet.devices) {
    validate(device);
    if (!ids.insert(device.id).second)
      throw DomainError("duplicate device id: " + device.id);
  }
}

double local_step_time(const DeviceProfile& device, long batch_size) {
  if (batch_size < 1) throw DomainError("batch size must be at least 1");
  return device.cycles_per_sample * static_cast<double>(batch_size) / device.f_hz;
}

double fleet_compute_time(const Fleet& fleet, long batch_size) {
  if (fleet.devices.empty()) throw DomainError("fleet must contain at least one device");
  double worst = 0.0;
  for (const auto& device : fleet.devices)
    worst = std::max(worst, local_step_time(device, batch_size));
  return worst;
}

double uplink_time(const DeviceProfile& device, const WirelessSystem& system) {
  const double snr = device.tx_power_w * device.channel_gain / system.noise_w;
  if (!(snr > 0.0) || !std::isfinite(snr))
    throw DomainError("device " + device.id + ": link SNR must be positive and finite");
  return system.update_bits / (system.bandwidth_hz * std::log2(1.0 + snr));
}

double fleet_comm_time(const Fleet& fleet) {
  if (fleet.devices.empty()) throw DomainError("fleet must contain at least one device");
  double worst = 0.0;
  for (const auto& device : fleet.devices)
    worst = std::max(worst, uplink_time(device, fleet.system));
  return worst;
}

BottleneckInfo bottleneck_device(const Fleet& fleet) {
  if (fleet.devices.empty()) throw DomainError("fleet must contain at least one device");
  BottleneckInfo best{0, fleet.devices[0].id, fleet.devices[0].compute_ratio()};
  for (std::size_t i = 1; i < fleet.devices.size(); ++i) {
    const double ratio = fleet.devices[i].compute_ratio();
    if (ratio > best.ratio) best = {i, fleet.devices[i].id, ratio};
  }
  return best;
}

}  // namespace defl
