#include <cmath>

#include "doctest.h"
#include "rescuesim/netmodel.hpp"
#include "rescuesim/rng.hpp"

using namespace rescuesim;
using namespace rescuesim::netmodel;

TEST_CASE("flying power examples") {
  CHECK(flying_power(10, 0, 0.0037, 5.0206) == doctest::Approx(4.20206).epsilon(1e-9));
  CHECK(flying_power(1, 0, 0, 1) == doctest::Approx(1.0));
  CHECK(flying_power(10, 9.8, 0.0037, 5.0206) == doctest::Approx(4.70412).epsilon(1e-9));
  CHECK_THROWS_AS(flying_power(0, 0, 0.0037, 5.0206), std::domain_error);
  CHECK_THROWS_AS(flying_power(-1, 0, 0.0037, 5.0206), std::domain_error);
  CHECK(std::isfinite(flying_power_clamped(0, 0, 0.0037, 5.0206, 0.1)));
}

TEST_CASE("flying power has one minimum, located where finite differences change sign") {
  const double l1 = 0.0037, l2 = 5.0206, a = 2.0;
  const double vstar = std::pow(l2 * (1 + a * a / (kGravity * kGravity)) / (3 * l1), 0.25);
  const double h = 1e-5;
  for (double v = 0.5; v < 30; v += 0.25) {
    if (std::abs(v - vstar) < 0.05) continue;
    const double fd = (flying_power(v + h, a, l1, l2) - flying_power(v - h, a, l1, l2)) / (2 * h);
    if (v < vstar) CHECK(fd < 0);
    else CHECK(fd > 0);
  }
}

TEST_CASE("fluid traffic velocity") {
  ChannelParams p;
  p.min_vehicle_velocity = 6.667;
  p.max_vehicle_velocity = 20;
  CHECK(average_vehicle_velocity(0, p) == doctest::Approx(20));
  CHECK(average_vehicle_velocity(p.max_traffic_density, p) == doctest::Approx(6.667));
  CHECK(average_vehicle_velocity(p.max_traffic_density / 2, p) == doctest::Approx(10));
  CHECK_THROWS_AS(average_vehicle_velocity(-0.01, p), std::domain_error);
  CHECK_THROWS_AS(average_vehicle_velocity(0.2, p), std::domain_error);
}

TEST_CASE("coverage count recursion") {
  std::vector<double> phi(6, 4.0);
  std::vector<double> all_leave(6, 1.0), none_leave(6, 0.0), half(6, 0.5);
  for (double v : coverage_count(phi, all_leave)) CHECK(v == 0.0);
  auto c = coverage_count(phi, none_leave);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(4.0 * (i + 1)));
  auto h = coverage_count(phi, half);
  CHECK(h[0] == doctest::Approx(2));
  CHECK(h[1] == doctest::Approx(3));
  CHECK(h[2] == doctest::Approx(3.5));
  CHECK_THROWS(coverage_count(std::vector<double>{}, std::vector<double>{}));
  CHECK_THROWS(coverage_count(std::vector<double>{1.0}, std::vector<double>{1.5}));
}

TEST_CASE("coverage count dominance under random series") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<double> a(n), b(n), o1(n), o2(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(0, 5);
      b[i] = a[i] + rng.uniform(0, 2);
      o1[i] = rng.uniform(0, 1);
      o2[i] = std::min(1.0, o1[i] + rng.uniform(0, 0.3));
    }
    auto base = coverage_count(a, o1);
    auto more = coverage_count(b, o1);
    auto fewer = coverage_count(a, o2);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(more[i] >= base[i] - 1e-12);
      CHECK(fewer[i] <= base[i] + 1e-12);
    }
  }
}

TEST_CASE("link rates") {
  ChannelParams p;
  CHECK(shannon_rate(1e7, 0.0, 100, p) == 0.0);
  CHECK(shannon_rate(1e7, 0.1, 100, p) == doctest::Approx(1.4427e3).epsilon(1e-4));
  CHECK_THROWS_AS(shannon_rate(1e7, 0.1, 0, p), std::domain_error);
  // mu = 2: doubling d quarters the SNR
  p.noise_model = NoiseModel::total_power;
  const double snr_near = std::exp2(shannon_rate(1.0, 1.0, 100, p)) - 1;
  const double snr_far = std::exp2(shannon_rate(1.0, 1.0, 200, p)) - 1;
  CHECK(snr_near / snr_far == doctest::Approx(4.0));
  double prev = INFINITY;
  for (double d = 10; d < 500; d += 10) {
    const double r = link_rates(d, p, UavState{}, VehicleState{}).g2a;
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("offload delay and energy") {
  Task t;
  t.data_bits = 8e6;
  t.cycles_per_bit = 100;
  ReturnPath in{true, 1e6, 0};
  auto times = offload_delay(t, 4e9, 1e6, in);
  CHECK(times.compute == doctest::Approx(0.2));
  CHECK(times.total == doctest::Approx(times.a2g + times.compute + times.g2a));

  t.output_ratio = 1e-9;
  auto tiny = offload_delay(t, 4e9, 1e6, in);
  CHECK(tiny.total == doctest::Approx(tiny.a2g + tiny.compute).epsilon(1e-6));

  t.output_ratio = 0.5;
  ReturnPath relay{false, 1e6, 1e6};
  CHECK(offload_delay(t, 4e9, 1e6, relay).total > offload_delay(t, 4e9, 1e6, in).total);

  double prev = INFINITY;
  for (double x = 1e9; x <= 6e9; x += 0.5e9) {
    const double phi = offload_delay(t, x, 1e6, in).total;
    CHECK(phi < prev);
    prev = phi;
  }
  CHECK_THROWS_AS(offload_delay(t, 0, 1e6, in), std::domain_error);
  CHECK_THROWS_AS(offload_delay(t, 1e9, 0, in), std::domain_error);

  UavState uav;
  VehicleState veh;
  auto e = offload_energy(t, 4e9, times, uav, veh, 10.0);
  CHECK(e.compute == doctest::Approx(1.28));
  CHECK(e.a2g == doctest::Approx(uav.tx_power * times.a2g));
  auto e2 = offload_energy(t, 4e9, OffloadTimes{0, 0, 0, 2 * times.total}, uav, veh, 10.0);
  CHECK(e2.flying == doctest::Approx(2 * e.flying));
  CHECK(offload_energy(t, 0, times, uav, veh, 10.0).compute == 0.0);
}

TEST_CASE("constraint predicates") {
  Task t;
  t.ttl = 1.0;
  CHECK(meets_deadline(t, OffloadTimes{0.5, 0.2, 0.3, 1.0}));
  CHECK_FALSE(meets_deadline(t, OffloadTimes{0.5, 0.3, 0.3, 1.1}));
  UavState u;
  u.energy = 60e3;
  u.reserve = 50e3;
  CHECK(meets_energy_reserve(u, OffloadEnergy{0, 4e3, 6e3}));
  CHECK_FALSE(meets_energy_reserve(u, OffloadEnergy{0, 4e3, 6e3 + 1e-3}));
}

TEST_CASE("state invariants") {
  UavState u;
  CHECK_NOTHROW(u.check());
  u.energy = u.reserve - 1;
  CHECK_THROWS_AS(u.check(), std::domain_error);
  u = UavState{};
  u.velocity = u.max_velocity + 1;
  CHECK_THROWS_AS(u.check(), std::domain_error);
  Task t;
  t.urgency = 1.5;
  CHECK_THROWS_AS(t.check(), std::domain_error);
  ChannelParams c;
  c.path_loss_exponent = 1.0;
  CHECK_THROWS_AS(c.check(), std::domain_error);
}
