#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Every draw is a pure function of (key, counter), so a trial's random
// stream does not depend on which thread runs it or in what order.

#include <array>
#include <cstdint>

namespace toruslab {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

/// Uniform doubles in [0, 1) addressed by (seed, trial, stream, index).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t trial, std::uint32_t stream)
      : seed_(seed), trial_(trial), stream_(stream) {}

  /// Four 32-bit words for block `index`.
  Philox4x32::Counter words(std::uint32_t index) const;
  /// Two 53-bit uniforms in [0, 1) from block `index`.
  std::array<double, 2> uniforms(std::uint32_t index) const;
  /// Integer in [0, n) from block `index` by multiply-shift (bias below n / 2^64).
  std::uint64_t below(std::uint64_t n, std::uint32_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t trial_;
  std::uint32_t stream_;
};

/// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace toruslab
