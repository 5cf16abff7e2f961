#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace defl {

/// GPU effective-frequency model: 1 / (a_s + a_c/f_c + a_M/f_M).
struct GpuClockModel {
  double a_s = 0.0;     // static term, seconds
  double a_c = 0.0;     // core coefficient, dimensionless
  double f_c_hz = 0.0;  // core frequency
  double a_M = 0.0;     // memory coefficient, dimensionless
  double f_M_hz = 0.0;  // memory frequency
};

/// Effective processor frequency in Hz. Throws DomainError if the model is
/// degenerate (non-positive or non-finite denominator).
double effective_frequency(const GpuClockModel& clock);

/// One edge device. The effective frequency is either given directly or
/// derived from a GpuClockModel at construction time.
struct DeviceProfile {
  std::string id;
  double f_hz = 0.0;               // effective processor frequency
  double cycles_per_sample = 0.0;  // workload per data point per local step
  double samples = 0.0;            // local dataset size D_m
  double tx_power_w = 0.0;         // uplink transmit power p_m
  double channel_gain = 0.0;       // h_m
  std::optional<GpuClockModel> clock;

  /// Compute ratio, seconds per sample per local step.
  double compute_ratio() const { return cycles_per_sample / f_hz; }
};

/// Validates DeviceProfile invariants; throws DomainError naming the field.
void validate(const DeviceProfile& device);

/// Shared uplink parameters.
struct WirelessSystem {
  double bandwidth_hz = 0.0;  // B
  double noise_w = 0.0;       // linear noise power in watts
  double update_bits = 0.0;   // local model update size s
};

void validate(const WirelessSystem& system);

/// Converts a noise spectral density in dBm/Hz to a linear noise power in
/// watts over the given bandwidth: 10^((dbm_per_hz - 30) / 10) * bandwidth.
double noise_power_from_dbm_per_hz(double dbm_per_hz, double bandwidth_hz);

struct Fleet {
  std::vector<DeviceProfile> devices;
  WirelessSystem system;

  std::size_t size() const { return devices.size(); }
};

/// Validates fleet invariants (nonempty, unique ids, device/system checks).
void validate(const Fleet& fleet);

/// Time for one local mini-batch step: cycles_per_sample * b / f.
double local_step_time(const DeviceProfile& device, long batch_size);

/// Synchronous per-round compute time: max over devices of local_step_time.
double fleet_compute_time(const Fleet& fleet, long batch_size);

/// Uplink time for one model update: s / (B * log2(1 + p*h/N)).
double uplink_time(const DeviceProfile& device, const WirelessSystem& system);

/// Synchronous per-round communication time: max over devices of uplink_time.
double fleet_comm_time(const Fleet& fleet);

struct BottleneckInfo {
  std::size_t index = 0;  // position in the fleet's device list
  std::string id;
  double ratio = 0.0;  // cycles_per_sample / f, seconds per sample per step
};

/// Device with the largest compute ratio; ties break to the lowest index.
BottleneckInfo bottleneck_device(const Fleet& fleet);

}  // namespace defl
