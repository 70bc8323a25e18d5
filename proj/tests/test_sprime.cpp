#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "toruslab/error.hpp"
#include "toruslab/sprime.hpp"

using namespace toruslab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool coefficient_recheck(Norm mk, Norm next, const SPrimeParams& p) {
  return oracle::coefficient_recheck(mk, next, p.delta, p.eps, p.c_coeff);
}

SPrimeParams params(double delta, double eps, double eps_prime, double c_gap, double c_coeff) {
  SPrimeParams p;
  p.delta = delta;
  p.eps = eps;
  p.eps_prime = eps_prime;
  p.c_gap = c_gap;
  p.c_coeff = c_coeff;
  return p;
}

}  // namespace

TEST_CASE("epsilon from delta") {
  CHECK(epsilon_from_delta(kHuxleyTheta, 0.10) == doctest::Approx(0.040144).epsilon(1e-4));
  CHECK(epsilon_from_delta(0.25, 0.15) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK_THROWS_AS(epsilon_from_delta(kHuxleyTheta, 0.5 - kHuxleyTheta), Error);
  const auto p = SPrimeParams::from_delta(0.17);
  CHECK(p.eps == p.eps_prime);
  CHECK(p.delta_in_range());
  CHECK_FALSE(SPrimeParams::from_delta(0.1).delta_in_range());
  CHECK_FALSE(params(0.35, 0.04, 0.2, 10, 10).delta_in_range());
}

TEST_CASE("gap condition") {
  const auto t = enumerate_spectrum(2, 2'000'000);
  auto p = params(0.1, 0.04, 0.2, 10, 10);
  // 4π²·2 ≈ 78.96 against 10·(4π²·9)^0.2 ≈ 32.4
  CHECK_FALSE(gap_condition(t, 9, p));
  p.c_gap = kInf;
  CHECK(gap_condition(t, 9, p));
  p.c_gap = 10;
  std::size_t checked = 0;
  for (const auto& e : t.entries()) {
    if (e.m < 1'000'000 || checked == 20) continue;
    const auto g = t.gap_around(e.m);
    if (g.next - g.prev == 2) {
      CHECK(gap_condition(t, e.m, p));
      ++checked;
    }
  }
  CHECK(checked == 20);
}

TEST_CASE("coefficient condition against an exhaustive re-check") {
  const auto t = enumerate_spectrum(2, 5000);
  const auto p = params(0.1, 0.04, 0.2, 10, 1);
  CHECK(shift_radius_sq(25, p.eps) == 1);
  CHECK(shift_vectors(2, 1).size() == 4);
  const auto c = check_coeff_condition(t, 25, p);
  CHECK(c.shift_count == 4);
  CHECK(c.annulus_size == 12);
  CHECK(c.ok == coefficient_recheck(25, 26, p));
  for (const auto& e : t.entries()) {
    if (e.m < 100 || e.m > 3000) continue;
    const auto g = t.gap_around(e.m);
    for (double cc : {1.0, 10.0}) {
      auto q = params(0.2, 0.1, 0.2, 10, cc);
      CHECK(coeff_condition(t, e.m, q) == coefficient_recheck(e.m, g.next, q));
    }
  }
}

TEST_CASE("coefficient condition edge cases") {
  const auto t = enumerate_spectrum(2, 5000);
  // No admissible shifts: vacuous.
  auto p = params(0.1, 1e-6, 0.2, 10, 10);
  CHECK(shift_radius_sq(25, p.eps) == 1);
  p.eps = -0.5;
  CHECK_THROWS_AS(check_coeff_condition(t, 25, p), Error);
  // (5,0) + (0,... ) lands back on norm 25 through (4,3) - (0,... ) style shifts:
  // ξ = (3,4), ζ = (1,-1) gives (4,3), norm 25 itself.
  auto q = params(0.1, 0.2, 0.2, 10, 1e9);
  CHECK(shift_radius_sq(25, q.eps) >= 2);
  const auto c = check_coeff_condition(t, 25, q);
  CHECK_FALSE(c.ok);
  REQUIRE(c.first_violation.has_value());
  CHECK(c.first_violation->distance == 0.0);
}

TEST_CASE("window densities") {
  const auto t = enumerate_spectrum(2, 25'000);
  const auto none = build_window(t, 10'000, 11'000, params(0.1, 0.04, 0.2, 1e-3, 10));
  CHECK(none.density == 0.0);
  CHECK(none.accepted.empty());
  const auto all = build_window(t, 10'000, 11'000, params(0.1, 1e-6, 0.2, kInf, kInf));
  CHECK(all.density == 1.0);
  CHECK_THROWS_AS(build_window(t, 3, 2, SPrimeParams::from_delta(0.1)), Error);
  try {
    (void)build_window(t, 30'000, 31'000, SPrimeParams::from_delta(0.1));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfRange);
  }
}

TEST_CASE("default window over [1e4, 2e4]") {
  const auto t = enumerate_spectrum(2, 21'000);
  const auto p = SPrimeParams::from_delta(0.1);
  const auto w = build_window(t, 10'000, 20'000, p);
  const auto again = build_window(t, 10'000, 20'000, p);
  CHECK(w.accepted == again.accepted);
  std::size_t representable = 0;
  for (const auto& [m, r] : oracle::norm_counts(2, 20'001)) representable += (m >= 10'000 && m <= 20'000);
  CHECK(w.rows.size() == representable);
  // Recorded from the first full scan: c_gap = 10 rejects every member at δ = 0.1.
  CHECK(w.accepted.size() == 0);
  CHECK(w.density == 0.0);
  for (Norm m : w.accepted) {
    CHECK(coefficient_recheck(m, t.gap_around(m).next, p));
  }
  std::ostringstream csv;
  write_window_csv(w, csv);
  CHECK(csv.str().rfind("m_k,gap_ok,coeff_ok,accepted\n", 0) == 0);
  CHECK(window_summary(w).at("density") == w.density);
}

TEST_CASE("accepted members survive the re-check, and weaker constants accept more") {
  const auto t = enumerate_spectrum(2, 21'000);
  std::size_t prev_gap = 0;
  for (double c_gap : {2.0, 5.0, 10.0, 40.0}) {
    const auto w = build_window(t, 10'000, 12'000, params(0.35, 0.04, 0.2, c_gap, 10));
    CHECK(w.accepted.size() >= prev_gap);
    prev_gap = w.accepted.size();
  }
  std::size_t prev_coeff = 0;
  for (double c_coeff : {1.0, 3.0, 10.0, 100.0}) {
    const auto p = params(0.35, 0.04, 0.2, 10, c_coeff);
    const auto w = build_window(t, 10'000, 12'000, p);
    CHECK(w.accepted.size() >= prev_coeff);
    prev_coeff = w.accepted.size();
    for (Norm m : w.accepted) CHECK(coefficient_recheck(m, t.gap_around(m).next, p));
  }
  CHECK(prev_coeff > 0);
}

TEST_CASE("interval selection") {
  const auto t = enumerate_spectrum(2, 21'000);
  const auto p = params(0.35, 0.04, 0.2, 10, 10);
  const auto m = select_interval(t, 10'000, p);
  REQUIRE(m.has_value());
  CHECK(*m >= 10'000);
  CHECK(gap_condition(t, *m, p));
  CHECK(coeff_condition(t, *m, p));
  CHECK(annulus_covers_interval(*m, t.gap_around(*m).next, annulus_width(*m, p.delta)));
  CHECK_FALSE(select_interval(t, 10'000, p, 9'000).has_value());
}

TEST_CASE("spatial windows are flagged heuristic") {
  const auto t = enumerate_spectrum(3, 3000);
  const auto w = build_window(t, 1000, 1100, SPrimeParams::from_delta(0.1));
  CHECK(w.heuristic);
  CHECK(window_summary(w).contains("note"));
}

TEST_CASE("parameter JSON round-trip") {
  const auto p = params(0.35, 0.04, 0.2, 7, 11);
  const nlohmann::json j = p;
  const auto q = j.get<SPrimeParams>();
  CHECK(q.delta == p.delta);
  CHECK(q.eps == p.eps);
  CHECK(q.eps_prime == p.eps_prime);
  CHECK(q.c_gap == p.c_gap);
  CHECK(q.c_coeff == p.c_coeff);
  CHECK(annulus_width(10'000, 0.35) == doctest::Approx(std::pow(oracle::kFourPiSq * 1e4, 0.35)));
}
