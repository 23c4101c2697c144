#include "wqfl/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "detail/roots.hpp"

namespace wqfl::channel {

void PhysicsConfig::validate() const {
  if (!(bandwidth_hz > 0.0) || !(noise_psd > 0.0) || !(zeta > 0.0) || !(pathloss_exponent > 0.0)) {
    throw std::invalid_argument("physics constants must be positive");
  }
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (header_bits < 0) throw std::invalid_argument("header bits must be >= 0");
}

void UserProfile::validate() const {
  if (!(cycles_per_bit > 0.0) || !(workload_bits > 0.0) || !(f_max > 0.0) || !(e_max > 0.0) ||
      !(weight > 0.0) || !(distance > 0.0)) {
    throw std::invalid_argument("user " + std::to_string(id) + ": profile fields must be positive");
  }
}

double pathloss(double distance, double exponent) { return std::pow(distance, -exponent); }

ChannelRealization sample_channels(std::span<const UserProfile> users,
                                   const PhysicsConfig& cfg, Rng& rng, int round) {
  ChannelRealization out;
  out.round = round;
  out.gains.reserve(users.size());
  for (const auto& u : users) {
    if (!(u.distance > 0.0)) throw std::invalid_argument("distance must be positive");
    double fading = exponential1(rng);
    // Exp(1) can return exactly zero; the gain must stay strictly positive.
    if (fading <= 0.0) fading = std::numeric_limits<double>::min();
    out.gains.push_back(fading * pathloss(u.distance, cfg.pathloss_exponent));
  }
  return out;
}

double uplink_bits(double slot, double energy, double gain, const PhysicsConfig& cfg) {
  if (slot <= 0.0 || energy <= 0.0) return 0.0;
  const double snr = gain * energy / (slot * cfg.bandwidth_hz * cfg.noise_psd);
  return slot * cfg.bandwidth_hz * std::log1p(snr) / M_LN2;
}

double capacity_cap(double energy, double gain, const PhysicsConfig& cfg) {
  return gain * energy / (cfg.noise_psd * M_LN2);
}

std::optional<double> min_uplink_time(double payload, double energy, double gain,
                                      const PhysicsConfig& cfg) {
  if (payload < 0.0) throw std::invalid_argument("payload must be non-negative");
  if (payload == 0.0) return 0.0;
  if (!(energy > 0.0)) return std::nullopt;
  UplinkCurve curve(energy, gain, cfg);
  auto x = curve.load_for_bits(payload);
  if (!x) return std::nullopt;
  return curve.slot(*x);
}

double compute_time(const UserProfile& user, double freq, const PhysicsConfig& cfg) {
  if (!(freq > 0.0)) throw std::invalid_argument("CPU frequency must be positive");
  return cfg.tau * user.cycles_per_bit * user.workload_bits / freq;
}

double compute_energy(const UserProfile& user, double freq, const PhysicsConfig& cfg) {
  if (!(freq > 0.0)) throw std::invalid_argument("CPU frequency must be positive");
  return cfg.tau * cfg.zeta * user.cycles_per_bit * user.workload_bits * freq * freq;
}

UplinkCurve::UplinkCurve(double energy, double gain, const PhysicsConfig& cfg)
    : energy_(energy),
      gain_(gain),
      bandwidth_(cfg.bandwidth_hz),
      b_(gain * energy / (cfg.bandwidth_hz * cfg.noise_psd)),
      cap_(capacity_cap(energy, gain, cfg)) {}

double UplinkCurve::bits(double x) const {
  if (x <= 0.0) return cap_;
  return b_ * bandwidth_ * std::log1p(x) / (x * M_LN2);
}

double UplinkCurve::time_per_bit(double x) const {
  // Inverse of d(bits)/d(slot) = W (ln(1+x) - x/(1+x)) / ln 2.
  double shape;
  if (x < 1e-3) {
    shape = x * x * (0.5 + x * (-2.0 / 3.0 + x * (0.75 - 0.8 * x)));
  } else {
    shape = std::log1p(x) - x / (1.0 + x);
  }
  return M_LN2 / (bandwidth_ * shape);
}

std::optional<double> UplinkCurve::load_for_bits(double payload) const {
  if (payload <= 0.0) return std::numeric_limits<double>::infinity();
  if (!(cap_ > 0.0)) return std::nullopt;
  const double kappa = payload / cap_;
  if (kappa >= 1.0) return std::nullopt;
  // log1p(x)/x = kappa. The bounds 2/(2+x) <= log1p(x)/x <= 1/sqrt(1+x)
  // bracket the root between (1-kappa)/kappa and 1/kappa^2.
  const double log_kappa = std::log(kappa);
  auto f = [log_kappa](double u) {
    const double x = std::exp(u);
    return std::log(std::log1p(x)) - u - log_kappa;
  };
  const double lo = std::log((1.0 - kappa) / kappa);
  const double hi = -2.0 * log_kappa;
  const double u = detail::bracketed_root(f, lo, hi, 52);
  return std::exp(u);
}

}  // namespace wqfl::channel
