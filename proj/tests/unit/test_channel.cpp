#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "golden.hpp"
#include "wqfl/channel.hpp"

namespace {

using namespace wqfl;
using channel::PhysicsConfig;
using channel::UserProfile;

TEST(Channel, NoisePsdConversion) {
  EXPECT_NEAR(PhysicsConfig{}.noise_psd, std::pow(10.0, -20.4), 1e-35);
}

TEST(Channel, Pathloss) {
  EXPECT_DOUBLE_EQ(channel::pathloss(1.0, 3.75), 1.0);
  EXPECT_NEAR(channel::pathloss(1000.0, 3.75) / std::pow(10.0, -11.25), 1.0, 1e-14);
}

TEST(Channel, FadingHasUnitMean) {
  std::vector<UserProfile> users(1);
  users[0].distance = 1.0;
  Rng rng(99);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += channel::sample_channels(users, {}, rng).gains[0];
  EXPECT_NEAR(sum / n, 1.0, 0.01);
}

TEST(Channel, UplinkBitsGolden) {
  const auto g = load_golden("channel_golden.json")["uplink_bits"];
  const double gain = std::pow(10.0, g["gain_log10"].get<double>());
  const double v = channel::uplink_bits(g["slot"], g["energy"], gain, {});
  EXPECT_NEAR(v / g["value"].get<double>(), 1.0, 1e-12);
}

TEST(Channel, MinUplinkTimeGolden) {
  const auto g = load_golden("channel_golden.json")["min_uplink_time"];
  const double gain = std::pow(10.0, g["gain_log10"].get<double>());
  const auto l = channel::min_uplink_time(g["payload"], g["energy"], gain, {});
  ASSERT_TRUE(l.has_value());
  EXPECT_NEAR(*l / g["value"].get<double>(), 1.0, 1e-10);
}

TEST(Channel, UplinkBitsLimits) {
  const PhysicsConfig cfg;
  const double g = 1e-11;
  EXPECT_EQ(channel::uplink_bits(0.1, 0.0, g, cfg), 0.0);
  EXPECT_EQ(channel::uplink_bits(0.0, 0.1, g, cfg), 0.0);
  const double cap = channel::capacity_cap(0.1, g, cfg);
  EXPECT_NEAR(channel::uplink_bits(1e9, 0.1, g, cfg) / cap, 1.0, 1e-6);
  EXPECT_LT(channel::uplink_bits(1e3, 0.1, g, cfg), cap);
}

TEST(Channel, UplinkBitsIncreasingConcave) {
  const PhysicsConfig cfg;
  const double g = 3e-12;
  double prev = 0.0;
  double prev_slope = INFINITY;
  const double h = 1e-3;
  for (int i = 1; i <= 300; ++i) {
    const double l = i * h;
    const double v = channel::uplink_bits(l, 0.2, g, cfg);
    EXPECT_GT(v, prev);
    const double slope = (v - prev) / h;
    EXPECT_LT(slope, prev_slope * (1 + 1e-12));
    prev = v;
    prev_slope = slope;
  }
  EXPECT_LT(channel::uplink_bits(0.1, 0.1, g, cfg), channel::uplink_bits(0.1, 0.2, g, cfg));
  EXPECT_LT(channel::uplink_bits(0.1, 0.1, g, cfg), channel::uplink_bits(0.1, 0.1, 2 * g, cfg));
}

TEST(Channel, MinUplinkTimeInverts) {
  const PhysicsConfig cfg;
  for (double g : {1e-13, 5.6e-12, 1e-9, 1e-5}) {
    for (double e : {1e-3, 0.05, 0.3}) {
      const double cap = channel::capacity_cap(e, g, cfg);
      for (double frac : {1e-6, 0.01, 0.3, 0.9, 0.999}) {
        const double s = frac * cap;
        const auto l = channel::min_uplink_time(s, e, g, cfg);
        ASSERT_TRUE(l.has_value());
        EXPECT_NEAR(channel::uplink_bits(*l, e, g, cfg) / s, 1.0, 1e-9) << g << ' ' << e << ' ' << frac;
      }
    }
  }
}

TEST(Channel, MinUplinkTimeEdgeCases) {
  const PhysicsConfig cfg;
  const double g = std::pow(10.0, -11.25);
  EXPECT_EQ(*channel::min_uplink_time(0.0, 0.1, g, cfg), 0.0);
  EXPECT_FALSE(channel::min_uplink_time(channel::capacity_cap(0.1, g, cfg), 0.1, g, cfg));
  EXPECT_FALSE(channel::min_uplink_time(2 * channel::capacity_cap(0.1, g, cfg), 0.1, g, cfg));
  EXPECT_THROW(channel::min_uplink_time(-1.0, 0.1, g, cfg), std::invalid_argument);
}

TEST(Channel, ComputeTimeAndEnergy) {
  PhysicsConfig unit;
  unit.tau = 1;
  UserProfile one;
  one.cycles_per_bit = 1;
  one.workload_bits = 1;
  EXPECT_DOUBLE_EQ(channel::compute_time(one, 1.0, unit), 1.0);
  EXPECT_DOUBLE_EQ(channel::compute_energy(one, 1.0, unit), unit.zeta);

  const PhysicsConfig cfg;
  const UserProfile u;  // c = 25, D = 1e6
  EXPECT_NEAR(channel::compute_time(u, 1.5e9, cfg), 2.0 * 25 * 1e6 / 1.5e9, 1e-15);
  EXPECT_NEAR(channel::compute_energy(u, 1.5e9, cfg), 0.1125, 1e-15);
  for (double f : {1e8, 7e8, 1.5e9}) {
    EXPECT_NEAR(channel::compute_time(u, f, cfg) * f, 5e7, 1e-6);
    EXPECT_NEAR(channel::compute_energy(u, f, cfg) / (f * f), 5e-20, 1e-33);
  }
}

}  // namespace
