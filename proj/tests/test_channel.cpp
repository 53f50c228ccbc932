#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dsqkd/channel.hpp"
#include "dsqkd/stats.hpp"

using namespace dsqkd;

namespace {

channel::ChannelModel lossless() {
  channel::ChannelModel m;
  m.fiber_length_km = 0.0;
  m.detector_efficiencies = {1.0, 1.0};
  m.background_yield = 0.0;
  m.visibility_error = 0.0;
  m.window_acceptance = 1.0;
  return m;
}

channel::ChannelModel test_channel() {
  channel::ChannelModel m;
  m.fiber_length_km = 50.0;
  m.attenuation_db_per_km = 0.2;
  m.detector_efficiencies = {0.33, 0.50};
  m.background_yield = 2e-6;
  m.visibility_error = 0.02;
  m.window_acceptance = 0.4;
  return m;
}

} // namespace

TEST_CASE("transmittance composition") {
  CHECK(channel::transmittance(lossless()) == doctest::Approx(1.0));
  channel::ChannelModel m = lossless();
  m.fiber_length_km = 100.0;
  m.attenuation_db_per_km = 0.2;
  CHECK(channel::transmittance(m) == doctest::Approx(0.01).epsilon(1e-12));
  // Assigning 102 km of a 202 km link to the sender leaves a 100 km channel.
  CHECK(channel::effective_length_km(202.0, 102.0) == doctest::Approx(100.0));
}

TEST_CASE("expected yields closed form") {
  channel::ChannelModel m = lossless();
  m.background_yield = 0.1;
  m.window_acceptance = 0.5; // eta = 0.5
  auto curve = channel::expected_yields(m, 5);
  CHECK(curve.yields[0] == doctest::Approx(0.1));
  CHECK(curve.error_rates[0] == doctest::Approx(0.5));
  CHECK(curve.yields[2] == doctest::Approx(1.0 - 0.9 * 0.25).epsilon(1e-12));

  channel::ChannelModel clean = lossless();
  clean.window_acceptance = 0.01;
  clean.visibility_error = 0.03;
  auto c2 = channel::expected_yields(clean, 3);
  CHECK(c2.yields[1] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(c2.error_rates[1] == doctest::Approx(0.03).epsilon(1e-12));

  // Monotone, and saturating toward 1.
  auto c3 = channel::expected_yields(test_channel(), 400);
  for (int n = 1; n < c3.yields.size(); ++n) CHECK(c3.yields[n] >= c3.yields[n - 1]);
  CHECK(c3.yields[c3.yields.size() - 1] > 0.5);
}

TEST_CASE("gain closed form equals direct poisson summation") {
  auto m = test_channel();
  auto curve = channel::expected_yields(m, 40);
  for (double mu : {0.05, 0.297, 0.487, 1.0}) {
    auto g = channel::expected_gain_qber(m, mu);
    double direct_gain = 0.0, direct_err = 0.0;
    for (int n = 0; n <= 40; ++n) {
      double p = stats::poisson_pmf(n, mu);
      direct_gain += p * curve.yields[n];
      direct_err += p * curve.yields[n] * curve.error_rates[n];
    }
    CHECK(g.gain == doctest::Approx(direct_gain).epsilon(1e-10));
    CHECK(g.qber == doctest::Approx(direct_err / direct_gain).epsilon(1e-10));
  }
}

TEST_CASE("gain monotone in mu, qber dilutes toward the visibility floor") {
  auto m = test_channel();
  double prev_gain = -1.0, prev_qber = 1.0;
  for (double mu = 0.02; mu < 1.0; mu += 0.02) {
    auto g = channel::expected_gain_qber(m, mu);
    CHECK(g.gain > prev_gain);
    CHECK(g.qber <= prev_qber + 1e-12);
    prev_gain = g.gain;
    prev_qber = g.qber;
  }
}

TEST_CASE("vacuum input with background clicks is pure noise") {
  channel::ChannelModel m = lossless();
  m.background_yield = 1e-3;
  auto g = channel::expected_gain_qber(m, 0.0);
  CHECK(g.gain == doctest::Approx(1e-3).epsilon(1e-9));
  CHECK(g.qber == doctest::Approx(0.5));
}

TEST_CASE("lossless visible-error channel has qber = visibility error") {
  channel::ChannelModel m = lossless();
  m.visibility_error = 0.01;
  auto g = channel::expected_gain_qber(m, 0.487);
  CHECK(g.qber == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("beamsplitter single fraction limits") {
  channel::ChannelModel m = lossless();
  m.window_acceptance = 0.03;
  CHECK(channel::beamsplitter_single_fraction(m, 1e-8) == doctest::Approx(1.0).epsilon(1e-6));
  // More photons, more multi-photon detections: fraction decreases in mu.
  double prev = 1.1;
  for (double mu : {0.1, 0.3, 0.6, 1.0}) {
    double f = channel::beamsplitter_single_fraction(m, mu);
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("detailed sifted probabilities are consistent") {
  auto m = test_channel();
  for (double mu : {0.0, 0.1, 0.297, 0.487}) {
    auto p = channel::sifted_event_probabilities(m, mu);
    CHECK(p.sift >= 0.0);
    CHECK(p.sift <= 0.5);
    CHECK(p.error <= p.sift);
    CHECK(p.alice_zero <= p.sift);
    CHECK(p.bob_zero <= p.sift);
    // Mean-efficiency closed form approximates the detailed model's gain.
    auto g = channel::expected_gain_qber(m, mu);
    CHECK(p.sift == doctest::Approx(0.5 * g.gain).epsilon(5e-4));
  }
  // The imbalanced detectors make detector 1 (50%) clicks dominate, so
  // zeros fall short of half.
  auto p = channel::sifted_event_probabilities(m, 0.3);
  CHECK(p.bob_zero / p.sift < 0.48);
  CHECK(p.alice_zero / p.sift < 0.48);
}

TEST_CASE("sifted_yield matches the poisson mixture") {
  auto m = test_channel();
  for (double mu : {0.1, 0.45}) {
    double mixed = 0.0;
    for (std::uint64_t n = 0; n <= 42; ++n)
      mixed += stats::poisson_pmf(n, mu) * channel::sifted_yield(m, n);
    auto p = channel::sifted_event_probabilities(m, mu);
    CHECK(p.sift == doctest::Approx(mixed).epsilon(1e-9));
  }
}

TEST_CASE("calibration hits its targets") {
  channel::ChannelModel base = test_channel();
  base.window_acceptance = 1.0;
  base.visibility_error = 0.0;
  double target_sift = 1.2e-4;
  double target_qber = 0.04;
  for (int round = 0; round < 4; ++round) {
    base.window_acceptance = channel::calibrate_window_acceptance(base, 0.297, target_sift);
    base.visibility_error = channel::calibrate_visibility_error(base, 0.297, target_qber);
  }
  auto p = channel::sifted_event_probabilities(base, 0.297);
  CHECK(p.sift == doctest::Approx(target_sift).epsilon(1e-9));
  CHECK(p.error / p.sift == doctest::Approx(target_qber).epsilon(1e-9));
}

TEST_CASE("validation rejects malformed models") {
  channel::ChannelModel m = test_channel();
  m.background_yield = 1.5;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = test_channel();
  m.attenuation_db_per_km = 0.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = test_channel();
  m.fiber_length_km = -1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
