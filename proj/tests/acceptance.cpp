// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when a
// fatal criterion fails; the trend report is informational.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "quadrature.hpp"
#include "toruslab/harness.hpp"
#include "toruslab/scaling.hpp"

using namespace toruslab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SPrimeParams window_params() {
  SPrimeParams p;
  p.delta = 0.35;
  p.eps = 0.04;
  p.eps_prime = 0.2;
  p.c_gap = p.c_coeff = 10;
  return p;
}

TrialSpec spec_near(const SpectrumTable& t, Norm target, int n, std::int64_t trials) {
  TrialSpec s;
  s.sprime = window_params();
  s.m_k = select_interval(t, target, s.sprime).value();
  s.n_scatterers = n;
  s.u = ExtensionParameter::scalar(n, 0.0);
  s.trials = trials;
  s.seed = 20240611;
  return s;
}

void lattice_oracle() {
  const auto t0 = Clock::now();
  const auto table = enumerate_spectrum(2, 10'000);
  const auto brute = oracle::norm_counts(2, 10'000);
  bool same = table.size() == brute.size();
  std::size_t i = 0;
  for (const auto& [m, r] : brute) {
    if (!same) break;
    same = table.entries()[i].m == m && table.entries()[i].r == r;
    ++i;
  }
  const auto count = circle_count(2, 100.0).count;
  const double secs = seconds_since(t0);
  report(1, same && count == 317 && secs < 5.0, "lattice table matches a brute-force scan",
         fmt("%zu norms, circle_count(100) = %lld, %.2f s", table.size(), static_cast<long long>(count), secs));
}

void single_scatterer_oracle() {
  const auto t0 = Clock::now();
  const auto table = enumerate_spectrum(2, 2000);
  const double pi = std::numbers::pi;
  std::vector<GapTriple> gaps;
  for (const auto& e : table.entries()) {
    if (e.m >= 1000 && gaps.size() < 20) gaps.push_back(table.gap_around(e.m));
  }
  double worst = 0;
  bool counts_ok = true;
  for (const auto& gap : gaps) {
    const Norm R = 4 * gap.next;
    auto ball = std::make_shared<const LatticeBall>(2, R);
    for (double theta : {0.0, pi / 3, -pi / 3, 2 * pi / 3, -2 * pi / 3}) {
      const SecularSystem sys({2, {{0.3, 0.7, 0.0}}, ExtensionParameter::scalar(1, theta)}, ball, gap);
      SolverOptions opt;
      opt.method = RootMethod::SminScan;
      const auto found = find_new_eigenvalues(sys, opt);
      if (found.roots.size() != 1) {
        counts_ok = false;
        continue;
      }
      const double expected = oracle::seba_root(gap.center, gap.next, theta, R);
      worst = std::max(worst, std::abs(found.roots[0].lambda_norm - expected) / expected);
    }
  }
  const double secs = seconds_since(t0);
  report(2, counts_ok && worst <= 1e-8 && secs < 60.0,
         "single-scatterer roots match the closed-form secular equation",
         fmt("%zu gaps x 5 phases, one root each: %s, max rel err %.2e, %.1f s", gaps.size(),
             counts_ok ? "yes" : "no", worst, secs));
}

struct McRun {
  int n = 0;
  double secs = 0;
  std::shared_ptr<Experiment> exp;
  RunOutput out;
};

McRun monte_carlo(const std::shared_ptr<const SpectrumTable>& table, int n) {
  McRun r;
  r.n = n;
  const auto t0 = Clock::now();
  r.exp = std::make_shared<Experiment>(spec_near(*table, 10'000, n, 2000), table);
  r.out = run_experiment(*r.exp, 0);
  r.secs = seconds_since(t0);
  std::printf("  N=%d: m_k %lld, %zu/%zu trials with a new eigenvalue, %.1f s\n", n,
              static_cast<long long>(r.exp->spec().m_k), r.out.report.valid, r.out.report.trials, r.secs);
  std::fflush(stdout);
  return r;
}

void chain(const McRun& run) {
  std::size_t valid = 0, bad = 0;
  for (const auto& t : run.out.results) {
    if (!t.ok()) continue;
    ++valid;
    bad += !t.chain_ok();
  }
  report(3, valid >= 500 && bad == 0 && run.secs < 600.0, "per-trial inequality chain",
         fmt("N=4, m_k %lld, %zu trials, %zu violations, %.1f s",
             static_cast<long long>(run.exp->spec().m_k), valid, bad, run.secs));
}

void markov(const std::vector<McRun>& runs) {
  bool pass = true;
  std::string detail;
  for (const auto& run : runs) {
    for (const auto& e : run.out.report.events) {
      if (e.name == "markov" && e.C0 != 2.0) continue;
      pass = pass && e.pass;
      detail += fmt("%sN=%d %s freq %.3f vs %.3f-3*%.3f", detail.empty() ? "" : "; ", run.n,
                    e.name == "markov" ? "A<=2E" : "B>E/3", e.freq, e.target, e.sigma);
    }
  }
  report(4, pass, "Markov event frequencies", detail);
}

void expectations(const McRun& run) {
  const auto& ex = *run.out.report.expectations;
  const double b = ex.d_xi0_sq.mean;
  bool pass = b >= 0.8 && b <= 1.2;
  std::string detail = fmt("E(B)*gap^2 = %.4f +- %.4f", b, ex.d_xi0_sq.std_error);
  for (const auto& [zeta, est] : ex.A) {
    if (zeta.norm_sq() != 1) continue;
    const double ratio = est.mean / ex.theory_A.at(zeta);
    pass = pass && ratio >= 0.7 && ratio <= 1.3;
    detail += fmt(", E(A_%s)/sigma = %.4f", to_string(zeta).c_str(), ratio);
  }
  report(5, pass && !ex.A.empty(), "expectation asymptotics", detail);
}

void normalization(const std::vector<McRun>& runs) {
  std::size_t trials = 0, off = 0;
  for (const auto& run : runs) {
    for (const auto& t : run.out.results) {
      if (!t.ok()) continue;
      ++trials;
      off += t.pairing_one != 1.0;
    }
  }
  std::mt19937_64 gen(77);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  auto ball = std::make_shared<const LatticeBall>(2, 10);
  for (int probe = 0; probe < 20; ++probe) {
    const int n = 1 + probe % 4;
    Eigen::VectorXcd d(n);
    std::vector<Point> pos(n);
    for (int j = 0; j < n; ++j) {
      d(j) = {g(gen), g(gen)};
      pos[j] = {u(gen), u(gen), 0.0};
    }
    d /= d.norm();
    const auto f = FourierField::assemble(d, pos, SpectralParameter{3.0 + probe % 6 + 0.41}, ball);
    std::map<LatticeVector, std::complex<double>> c{{LatticeVector(0, 0), 0.3}};
    const std::complex<double> v{g(gen), g(gen)};
    c[LatticeVector(1, probe % 3)] = v;
    c[LatticeVector(-1, -(probe % 3))] = std::conj(v);
    const Observable a(2, c);
    worst = std::max(worst, std::abs(pair_with_observable(f, a) - quadrature::pairing(f, a, 512)));
  }
  report(6, off == 0 && worst <= 1e-6, "normalization and Parseval",
         fmt("<1 g, g> = 1 exactly on %zu/%zu trials, max |Fourier - quadrature| = %.2e over 20 probes",
             trials - off, trials, worst));
}

void exponents() {
  const auto g2 = consistency_gamma2(Rational(133, 416));
  const auto t3 = threshold_exponents(Rational(1, 12), 3);
  const bool pass = g2 == Rational(17, 832) && t3.alpha == Rational(1, 56) && t3.beta == Rational(3, 28);
  report(7, pass, "exponent arithmetic",
         "gamma_2 = " + g2.to_string() + ", alpha_3 = " + t3.alpha.to_string() +
             ", beta_3 = " + t3.beta.to_string());
}

void window_recheck(const SpectrumTable& table) {
  const auto p = window_params();
  const auto w = build_window(table, 10'000, 20'000, p);
  std::size_t violations = 0;
  for (Norm m : w.accepted) {
    violations += !oracle::coefficient_recheck(m, table.gap_around(m).next, p.delta, p.eps, p.c_coeff);
  }
  report(8, !w.accepted.empty() && violations == 0, "S' window survives an exhaustive re-check",
         fmt("%zu of %zu norms in [1e4, 2e4] accepted, %zu violations", w.accepted.size(), w.rows.size(),
             violations));
}

void reproducibility(const std::shared_ptr<const SpectrumTable>& table) {
  auto s = spec_near(*table, 10'000, 4, 200);
  s.events = EventMode::TwoPass;
  const Experiment e(s, table);
  std::ostringstream a, b;
  write_trials_csv(e, run_experiment(e, 1), a);
  write_trials_csv(e, run_experiment(e, 4), b);
  report(9, a.str() == b.str() && !a.str().empty(), "thread count does not change results",
         fmt("200 trials, 1 vs 4 threads, %zu bytes, identical: %s", a.str().size(),
             a.str() == b.str() ? "yes" : "no"));
}

void trend(const McRun& at_1e4) {
  struct Row {
    Norm m_k;
    Quantiles q;
  };
  std::vector<Row> rows;
  for (Norm target : {Norm{1000}, Norm{10'000}, Norm{100'000}}) {
    if (target == 10'000) {
      rows.push_back({at_1e4.exp->spec().m_k, at_1e4.out.report.err});
      continue;
    }
    auto table = std::make_shared<const SpectrumTable>(enumerate_spectrum(2, 2 * target + 2000));
    auto s = spec_near(*table, target, 4, target == 1000 ? 400 : 100);
    s.strict = false;
    const Experiment e(s, table_for(s));
    rows.push_back({s.m_k, run_experiment(e, 0).report.err});
  }
  std::string detail;
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& q = rows[i].q;
    std::printf("  m_k %lld: median err %.4e [%.4e, %.4e], q10 %.4e, q90 %.4e, n %zu\n",
                static_cast<long long>(rows[i].m_k), q.median, q.median_lo, q.median_hi, q.q10, q.q90, q.n);
    if (i > 0 && q.median > rows[i - 1].q.median) monotone = false;
  }
  std::printf("%s criterion 10: equidistribution error trend reported (non-fatal; %s)\n", "PASS",
              monotone ? "median decreases with m_k" : "median is not monotone in m_k, logged only");
}

}  // namespace

int main() {
  lattice_oracle();
  single_scatterer_oracle();

  auto table = std::make_shared<const SpectrumTable>(enumerate_spectrum(2, 2'000'000 / 40));
  std::vector<McRun> runs;
  for (int n : {2, 4, 8}) runs.push_back(monte_carlo(table_for(spec_near(*table, 10'000, n, 1)), n));
  const McRun& four = runs[1];
  chain(four);
  markov(runs);
  expectations(four);
  normalization(runs);
  exponents();
  window_recheck(*table);
  reproducibility(table_for(spec_near(*table, 10'000, 4, 1)));
  trend(four);
  return failures == 0 ? 0 : 1;
}
