#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "stdpavg/parallel.hpp"
#include "stdpavg/rng.hpp"

using namespace stdpavg;

TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        Philox4x32Ctr{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        Philox4x32Ctr{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        Philox4x32Ctr{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  PhiloxStream a({7, 3, 1, StreamRole::presyn}), b({7, 3, 1, StreamRole::presyn});
  for (int i = 0; i < 100; ++i) CHECK(a() == b());

  std::set<std::uint32_t> firsts;
  for (auto role : {StreamRole::presyn, StreamRole::thinning, StreamRole::discrete_clocks})
    for (std::uint32_t r = 0; r < 4; ++r)
      for (std::uint16_t g = 0; g < 3; ++g) firsts.insert(PhiloxStream({7, r, g, role})());
  CHECK(firsts.size() == 36);
  CHECK(PhiloxStream({7, 0, 0, StreamRole::presyn})() != PhiloxStream({8, 0, 0, StreamRole::presyn})());
}

TEST_CASE("uniform and exponential variates") {
  PhiloxStream s({11, 0, 0, StreamRole::invariant});
  const int n = 200000;
  double sum = 0.0, sum_e = 0.0, sum_e2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    double v = s.uniform_pos();
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
    sum += u;
    double e = s.exp1();
    sum_e += e;
    sum_e2 += e * e;
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sum_e / n - 1.0) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(sum_e2 / n - 2.0) < 4.0 * std::sqrt(20.0 / n));
}

TEST_CASE("parallel_for runs each index once and rethrows") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 5) throw std::runtime_error("x");
                  }),
                  std::runtime_error);
}
