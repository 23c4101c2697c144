#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wqfl/rng.hpp"

namespace wqfl::channel {

/// Converts a noise spectral density from dBm/Hz to W/Hz.
inline double dbm_per_hz_to_watt_per_hz(double dbm) {
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

/// Radio and hardware constants shared by all users.
struct PhysicsConfig {
  double bandwidth_hz = 0.3e6;                           // W
  double noise_psd = dbm_per_hz_to_watt_per_hz(-174.0);  // N0, W/Hz
  double zeta = 1e-27;                                   // effective capacitance
  int tau = 2;                                           // local steps per round
  std::int64_t header_bits = 64;                         // m
  double pathloss_exponent = 3.75;                       // beta

  void validate() const;
};

/// Static per-user parameters.
struct UserProfile {
  int id = 0;
  double cycles_per_bit = 25.0;  // c_n
  double workload_bits = 1e6;    // D_n
  double f_max = 1.5e9;          // Hz
  double e_max = 0.3;            // J per round
  double weight = 1.0;           // aggregation weight p_n
  double distance = 500.0;       // m

  void validate() const;
};

/// Linear power gains of one quasi-static round.
struct ChannelRealization {
  int round = 0;
  std::vector<double> gains;
};

/// Draws |h_n|^2 ~ Exp(1) and returns g_n = |h_n|^2 d_n^-beta for each user.
ChannelRealization sample_channels(std::span<const UserProfile> users,
                                   const PhysicsConfig& cfg, Rng& rng, int round = 0);

/// Large-scale part d^-beta of the channel gain.
double pathloss(double distance, double exponent);

/// Bits deliverable in a slot of `slot` seconds with energy `energy` over
/// gain `gain`: l W log2(1 + g E / (l W N0)). Zero for an empty slot.
double uplink_bits(double slot, double energy, double gain, const PhysicsConfig& cfg);

/// Supremum of uplink_bits over all slot lengths: g E / (N0 ln 2).
double capacity_cap(double energy, double gain, const PhysicsConfig& cfg);

/// Shortest slot that delivers `payload` bits, or std::nullopt when the
/// payload is at or above the capacity cap (no slot length suffices).
std::optional<double> min_uplink_time(double payload, double energy, double gain,
                                      const PhysicsConfig& cfg);

/// tau c D / f.
double compute_time(const UserProfile& user, double freq, const PhysicsConfig& cfg);

/// tau zeta c D f^2.
double compute_energy(const UserProfile& user, double freq, const PhysicsConfig& cfg);

/// Uplink of a single user written in terms of the normalized load
/// x = b / l, with b = g E / (W N0). Bits delivered are b W log2(1 + x) / x,
/// the slot is b / x. Used by the round optimizer, which works in x.
class UplinkCurve {
 public:
  UplinkCurve(double energy, double gain, const PhysicsConfig& cfg);

  double b() const { return b_; }
  double cap() const { return cap_; }
  double energy() const { return energy_; }
  double gain() const { return gain_; }

  /// Slot length for load x.
  double slot(double x) const { return b_ / x; }
  /// Bits delivered at load x.
  double bits(double x) const;
  /// Marginal time per bit, dl/dS, at load x.
  double time_per_bit(double x) const;
  /// Load x at which exactly `payload` bits are delivered; nullopt at or
  /// above the cap, +inf for an empty payload.
  std::optional<double> load_for_bits(double payload) const;

 private:
  double energy_;
  double gain_;
  double bandwidth_;
  double b_;
  double cap_;
};

}  // namespace wqfl::channel
