#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dsqkd/cascade.hpp"
#include "dsqkd/rng.hpp"
#include "dsqkd/stats.hpp"

using namespace dsqkd;

namespace {

BitVector random_bits(std::size_t n, std::uint64_t seed) {
  rng::Stream s(seed, rng::Domain::test, 0);
  return BitVector::random(n, s);
}

BitVector flip_random(const BitVector& bits, double rate, std::uint64_t seed) {
  rng::Stream s(seed, rng::Domain::test, 1);
  BitVector out = bits;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (s.bernoulli(rate)) out.flip(i);
  return out;
}

} // namespace

TEST_CASE("identical strings leak only top parities and the battery") {
  BitVector alice = random_bits(1024, 5);
  auto result = cascade::cascade_reconcile(alice, alice, 0.01, 9);
  CHECK(result.verified);
  CHECK(result.corrected_bob_bits == alice);
  // No binary searches: leakage is the per-pass block count plus the
  // 64-parity battery; each pass after the first infers its last block
  // parity from the whole-string parity.
  auto sizes = cascade::cascade_schedule(0.01, 1024);
  std::uint64_t expect = 64;
  for (std::size_t p = 0; p < sizes.size(); ++p)
    expect += (1024 + sizes[p] - 1) / sizes[p] - (p == 0 ? 0 : 1);
  CHECK(result.leaked_bits == expect);
}

TEST_CASE("single flipped bit costs exactly log2(block) search parities") {
  const std::size_t n = 64;
  BitVector alice = random_bits(n, 6);
  BitVector bob = alice;
  bob.flip(37);
  cascade::Options options;
  options.block_sizes = {16, 32, 32, 32};
  cascade::Transcript transcript;
  auto result = cascade::cascade_reconcile(alice, bob, 0.05, 10, options, &transcript);
  CHECK(result.verified);
  CHECK(result.corrected_bob_bits == alice);
  std::uint64_t search_parities = 0;
  for (const auto& e : transcript)
    if (e.kind == cascade::MessageKind::search_parity) search_parities += e.parity_bits;
  // One error, found in pass 1 on a 16-bit block: 4 parities. Fixing it
  // leaves every later pass clean.
  CHECK(search_parities == 4);
}

TEST_CASE("transcript carries only parity traffic") {
  BitVector alice = random_bits(4096, 7);
  BitVector bob = flip_random(alice, 0.03, 8);
  cascade::Transcript transcript;
  auto result = cascade::cascade_reconcile(alice, bob, 0.03, 11, {}, &transcript);
  CHECK(result.verified);
  std::uint64_t total = 0;
  for (const auto& e : transcript) {
    bool known_kind = e.kind == cascade::MessageKind::block_parities ||
                      e.kind == cascade::MessageKind::search_parity ||
                      e.kind == cascade::MessageKind::verify_parity;
    CHECK(known_kind);
    total += e.parity_bits;
  }
  CHECK(total == result.leaked_bits);
}

TEST_CASE("leakage is deterministic in the seed") {
  BitVector alice = random_bits(5000, 12);
  BitVector bob = flip_random(alice, 0.02, 13);
  auto r1 = cascade::cascade_reconcile(alice, bob, 0.02, 99);
  auto r2 = cascade::cascade_reconcile(alice, bob, 0.02, 99);
  CHECK(r1.leaked_bits == r2.leaked_bits);
  CHECK(r1.corrected_bob_bits == r2.corrected_bob_bits);
  auto r3 = cascade::cascade_reconcile(alice, bob, 0.02, 100);
  CHECK(r3.verified);
}

TEST_CASE("correction succeeds across rates with the cited efficiency") {
  const std::size_t n = 10000;
  for (double rate : {0.01, 0.03, 0.05}) {
    int verified = 0;
    double fec_sum = 0.0;
    int fec_count = 0;
    const int trials = 34;
    for (int t = 0; t < trials; ++t) {
      BitVector alice = random_bits(n, 1000 + t);
      BitVector bob = flip_random(alice, rate, 2000 + t);
      double actual_rate =
          static_cast<double>((alice ^ bob).count_ones()) / static_cast<double>(n);
      if (actual_rate <= 0.0) continue;
      auto result =
          cascade::cascade_reconcile(alice, bob, rate, 3000 + t);
      if (result.verified && result.corrected_bob_bits == alice) ++verified;
      auto fec = cascade::ec_efficiency(result.leaked_bits, n, actual_rate);
      if (fec) {
        fec_sum += *fec;
        ++fec_count;
      }
    }
    CHECK(verified >= trials - 1);
    double fec_mean = fec_sum / fec_count;
    MESSAGE("rate ", rate, " mean f_ec ", fec_mean);
    CHECK(fec_mean > 1.0);
    CHECK(fec_mean < 1.25);
  }
}

TEST_CASE("session-scale frame reconciles inside the cited band") {
  const std::size_t n = 100000;
  BitVector alice = random_bits(n, 404);
  BitVector bob = flip_random(alice, 0.04, 405);
  double actual = static_cast<double>((alice ^ bob).count_ones()) / static_cast<double>(n);
  auto result = cascade::cascade_reconcile(alice, bob, actual, 406);
  CHECK(result.verified);
  CHECK(result.corrected_bob_bits == alice);
  auto fec = cascade::ec_efficiency(result.leaked_bits, n, actual);
  REQUIRE(fec.has_value());
  CHECK(*fec >= 1.05);
  CHECK(*fec <= 1.20);
}

TEST_CASE("ec_efficiency formula and guards") {
  // Leakage exactly at the Shannon limit.
  double h = stats::binary_entropy(0.04);
  auto f1 = cascade::ec_efficiency(static_cast<std::uint64_t>(h * 10000), 10000, 0.04);
  REQUIRE(f1.has_value());
  CHECK(*f1 == doctest::Approx(1.0).epsilon(1e-3));
  // 0.2665 n at B = 0.04 is about 10% over the limit.
  auto f2 = cascade::ec_efficiency(2665, 10000, 0.04);
  CHECK(*f2 == doctest::Approx(0.2665 / stats::binary_entropy(0.04)).epsilon(1e-12));
  CHECK(*f2 == doctest::Approx(1.1).epsilon(1e-3));
  CHECK(!cascade::ec_efficiency(100, 1000, 0.0).has_value());
  CHECK_THROWS_AS(cascade::ec_efficiency(100, 0, 0.1), std::invalid_argument);
}

TEST_CASE("rejects malformed inputs") {
  BitVector a = random_bits(10, 1);
  BitVector b = random_bits(12, 2);
  CHECK_THROWS_AS(cascade::cascade_reconcile(a, b, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(cascade::cascade_reconcile(a, a, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(cascade::cascade_reconcile(a, a, 0.6, 1), std::invalid_argument);
}
