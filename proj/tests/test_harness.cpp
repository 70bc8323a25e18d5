#include <doctest.h>

#include <cmath>
#include <sstream>

#include "toruslab/error.hpp"
#include "toruslab/harness.hpp"

using namespace toruslab;

namespace {

SPrimeParams loose_params() {
  SPrimeParams p;
  p.delta = 0.35;
  p.eps = 0.04;
  p.eps_prime = 0.2;
  p.c_gap = p.c_coeff = 10;
  return p;
}

TrialSpec spec_near(Norm target, int n, std::int64_t trials) {
  const auto t = enumerate_spectrum(2, 2 * target + 2000);
  TrialSpec s;
  s.sprime = loose_params();
  s.m_k = select_interval(t, target, s.sprime).value();
  s.n_scatterers = n;
  s.u = ExtensionParameter::scalar(n, 0.0);
  s.trials = trials;
  s.seed = 42;
  return s;
}

Experiment experiment(const TrialSpec& s) { return Experiment(s, table_for(s)); }

}  // namespace

TEST_CASE("position sampling") {
  const auto a = sample_positions(7, 3, 4, 2);
  CHECK(a == sample_positions(7, 3, 4, 2));
  CHECK(a != sample_positions(7, 4, 4, 2));
  CHECK(a != sample_positions(8, 3, 4, 2));
  for (const auto& p : a) {
    CHECK(p[0] >= 0.0);
    CHECK(p[0] < 1.0);
    CHECK(p[2] == 0.0);
  }
  for (int dim : {2, 3}) {
    std::array<double, 3> mean{};
    const int n = 10'000;
    for (int t = 0; t < n; ++t) {
      const auto p = sample_positions(1, t, 1, dim)[0];
      for (int i = 0; i < dim; ++i) mean[i] += p[i] / n;
    }
    for (int i = 0; i < dim; ++i) CHECK(std::abs(mean[i] - 0.5) <= 0.02);
  }
}

TEST_CASE("synthetic trial equals a direct evaluation") {
  auto s = spec_near(1000, 2, 1);
  s.mode = CoefficientMode::Synthetic;
  s.synthetic_d = Eigen::VectorXcd::Zero(2);
  s.synthetic_d(0) = 1.0;
  const auto gap = table_for(s)->gap_around(s.m_k);
  s.synthetic_lambda_norm = 0.5 * (gap.center + gap.next);
  const auto ex = experiment(s);
  const auto r = ex.run_trial(0);
  REQUIRE(r.ok());
  const auto field = FourierField::assemble(s.synthetic_d, r.positions,
                                            SpectralParameter{s.synthetic_lambda_norm}, ex.ball_ptr());
  const auto rep = evaluate_functionals(field, ex.window(), s.observable);
  CHECK(r.B == rep.B_val);
  CHECK(r.C == rep.C_val);
  CHECK(r.A_weighted == rep.A_weighted);
  CHECK(r.norm_sq == field.norm_sq());
  CHECK(r.annulus_norm_sq == rep.split.annulus_norm_sq);
  CHECK(r.pairing_one == 1.0);
  CHECK(r.d_xi0_sq == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("fixed synthetic coefficients have no variance") {
  auto s = spec_near(1000, 2, 520);
  s.mode = CoefficientMode::Synthetic;
  s.synthetic_d = Eigen::VectorXcd::Zero(2);
  s.synthetic_d(1) = 1.0;
  s.synthetic_lambda_norm = s.m_k + 0.25;
  const auto e = experiment(s);
  const auto results = e.run(1);
  const auto ex = estimate_expectations(e, results);
  CHECK(ex.B.mean == doctest::Approx(results.front().B).epsilon(1e-12));
  CHECK(ex.B.std_error <= 1e-12 * ex.B.mean);
  for (const auto& f : event_frequencies(results, s.markov_constants(), 2)) {
    if (f.name == "B_third") CHECK(f.freq == 1.0);
    CHECK(f.freq >= 0.0);
    CHECK(f.freq <= 1.0);
  }
}

TEST_CASE("single scatterer solver trials") {
  const auto s = spec_near(1000, 1, 40);
  const auto e = experiment(s);
  CHECK(e.sprime_accepted());
  CHECK(e.covers_interval());
  const auto results = e.run(1);
  for (const auto& r : results) {
    REQUIRE(r.ok());
    CHECK(r.root_count == 1);
    CHECK(r.chain_ok());
    CHECK(r.d_xi0_sq == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.lambda_norm > e.window().interval.center);
    CHECK(r.lambda_norm < e.window().interval.next);
  }
  const auto ex = estimate_expectations(e, results);
  CHECK(ex.d_xi0_sq.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ex.theory_B == doctest::Approx(1.0 / std::pow(e.window().interval.double_gap(), 2)));
  CHECK(ex.B.mean == doctest::Approx(ex.theory_B).epsilon(1e-12));
}

TEST_CASE("several scatterers satisfy the chain on every trial") {
  const auto s = spec_near(1000, 4, 40);
  const auto e = experiment(s);
  for (const auto& r : e.run(1)) {
    if (!r.ok()) {
      CHECK(r.status == TrialStatus::NoNewEigenvalue);
      continue;
    }
    CHECK(r.root_count <= 4);
    CHECK(r.chain_ok());
    CHECK(std::abs(r.pairing_one - 1.0) <= 1e-15);
    CHECK(r.err <= 2.0 * s.observable.l1_norm());
    CHECK(r.B <= 4.0 / std::pow(e.window().interval.double_gap(), 2) * (1 + 1e-12));
  }
}

TEST_CASE("too few trials") {
  const auto s = spec_near(1000, 1, 10);
  const auto e = experiment(s);
  const auto results = e.run(1);
  CHECK_THROWS_AS(estimate_expectations(e, results), Error);
  CHECK_THROWS_AS(event_frequencies(results, {2.0}, 1), Error);
}

TEST_CASE("strict mode rejects intervals outside S'") {
  auto s = spec_near(1000, 1, 1);
  s.sprime.c_gap = 1e-3;
  try {
    (void)experiment(s);
    FAIL("expected a rejection");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::NonSPrime);
  }
  s.strict = false;
  CHECK_FALSE(experiment(s).sprime_accepted());
}

TEST_CASE("trial spec JSON round-trip") {
  auto s = spec_near(1000, 3, 17);
  s.events = EventMode::TwoPass;
  s.c0 = {2.0, 4.0};
  s.l0 = 55.0;
  const nlohmann::json j = s;
  const auto back = j.get<TrialSpec>();
  CHECK(nlohmann::json(back) == j);
  auto bad = j;
  bad["nonsense"] = 1;
  CHECK_THROWS_AS(bad.get<TrialSpec>(), Error);
  auto zero = j;
  zero["trials"] = 0;
  CHECK_THROWS_AS(zero.get<TrialSpec>().validate(), Error);
}

TEST_CASE("results do not depend on the thread count") {
  auto s = spec_near(1000, 4, 24);
  s.events = EventMode::TwoPass;
  const auto e = experiment(s);
  const auto one = run_experiment(e, 1);
  const auto three = run_experiment(e, 3);
  std::ostringstream a, b;
  write_trials_csv(e, one, a);
  write_trials_csv(e, three, b);
  CHECK(a.str() == b.str());
  CHECK(report_json(e, one.report).dump() == report_json(e, three.report).dump());
}

TEST_CASE("event flags against running and reference means") {
  std::vector<TrialResult> rs(3);
  rs[0].A_weighted = 1.0;
  rs[0].B = 3.0;
  rs[1].status = TrialStatus::NoNewEigenvalue;
  rs[2].A_weighted = 5.0;
  rs[2].B = 0.5;
  const auto running = event_flags(rs, {2.0}, std::nullopt);
  REQUIRE(running[0].has_value());
  CHECK_FALSE(running[1].has_value());
  CHECK(running[0]->markov.at(2.0));
  CHECK(running[0]->B_third);
  CHECK(running[2]->markov.at(2.0));  // running mean 3 includes the trial itself
  CHECK_FALSE(running[2]->B_third);
  const auto fixed = event_flags(rs, {2.0}, ReferenceMeans{1.0, 3.0});
  CHECK_FALSE(fixed[2]->markov.at(2.0));
  CHECK_FALSE(fixed[2]->B_third);
}

TEST_CASE("estimates and quantiles") {
  const auto e = estimate({1.0, 2.0, 3.0, 4.0});
  CHECK(e.mean == 2.5);
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  std::vector<double> xs;
  for (int i = 1; i <= 101; ++i) xs.push_back(i);
  const auto q = quantiles(xs);
  CHECK(q.median == 51.0);
  CHECK(q.q10 == 11.0);
  CHECK(q.q90 == 91.0);
  CHECK(q.median_lo <= q.median);
  CHECK(q.median_hi >= q.median);
  CHECK(q.median_lo >= 40.0);
  CHECK(q.median_hi <= 62.0);
}
