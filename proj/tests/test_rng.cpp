#include <doctest.h>

#include <set>

#include "toruslab/rng.hpp"

using namespace toruslab;

TEST_CASE("philox4x32-10 known answers") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          K{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter generator is a pure function of its address") {
  const CounterRng a(42, 7, 0), b(42, 7, 0), c(42, 8, 0), d(43, 7, 0), e(42, 7, 1);
  CHECK(a.uniforms(3) == b.uniforms(3));
  CHECK(a.uniforms(3) != c.uniforms(3));
  CHECK(a.uniforms(3) != d.uniforms(3));
  CHECK(a.uniforms(3) != e.uniforms(3));
  CHECK(a.uniforms(3) != a.uniforms(4));
}

TEST_CASE("uniforms lie in [0, 1) and below() in range") {
  const CounterRng g(1, 2, 3);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto u = g.uniforms(static_cast<std::uint32_t>(i));
    for (double x : u) {
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
      sum += x;
    }
    CHECK(g.below(5, static_cast<std::uint32_t>(i)) < 5u);
  }
  CHECK(sum / (2.0 * n) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("mix64 is a bijection on samples") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(mix64(i));
  CHECK(seen.size() == 1000);
}
