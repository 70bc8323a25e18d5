#include "toruslab/rng.hpp"

namespace toruslab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Philox4x32::Counter CounterRng::words(std::uint32_t index) const {
  const Philox4x32::Counter ctr{index, stream_, static_cast<std::uint32_t>(trial_),
                                static_cast<std::uint32_t>(trial_ >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  return Philox4x32::block(ctr, key);
}

std::array<double, 2> CounterRng::uniforms(std::uint32_t index) const {
  const auto w = words(index);
  const std::uint64_t a = (static_cast<std::uint64_t>(w[0]) << 32 | w[1]) >> 11;
  const std::uint64_t b = (static_cast<std::uint64_t>(w[2]) << 32 | w[3]) >> 11;
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  return {static_cast<double>(a) * scale, static_cast<double>(b) * scale};
}

std::uint64_t CounterRng::below(std::uint64_t n, std::uint32_t index) const {
  const auto w = words(index);
  const std::uint64_t r = static_cast<std::uint64_t>(w[0]) << 32 | w[1];
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(r) * n) >> 64);
}

}  // namespace toruslab
