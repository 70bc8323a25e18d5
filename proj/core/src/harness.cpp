#include "toruslab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "toruslab/error.hpp"
#include "toruslab/rng.hpp"
#include "toruslab/serialize.hpp"

namespace toruslab {

namespace {

constexpr std::uint32_t kRootStream = 0xFFFF0001u;
constexpr std::uint32_t kMaxRedraws = 64;
constexpr std::uint64_t kPilotSalt = 0x70696C6F74ull;  // "pilot"

template <class E>
E enum_from(const std::string& s, std::initializer_list<std::pair<const char*, E>> table,
            const char* what) {
  for (const auto& [name, v] : table) {
    if (s == name) return v;
  }
  fail(ErrorKind::Validation, std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace

const char* to_string(CoefficientMode m) { return m == CoefficientMode::Solver ? "solver" : "synthetic"; }

const char* to_string(RootSelection s) {
  switch (s) {
    case RootSelection::Random: return "random";
    case RootSelection::Lowest: return "lowest";
    case RootSelection::Highest: return "highest";
    case RootSelection::Index: return "index";
  }
  return "random";
}

const char* to_string(EventMode m) { return m == EventMode::Running ? "running" : "two_pass"; }

const char* to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::Ok: return "ok";
    case TrialStatus::NoNewEigenvalue: return "no-new-eigenvalue";
    case TrialStatus::NonSPrime: return "non-sprime";
    case TrialStatus::SolverFailure: return "solver-failure";
  }
  return "ok";
}

// ---------------------------------------------------------------------------
// TrialSpec

void TrialSpec::validate() const {
  check_dimension(dim);
  require(n_scatterers >= 1, "need at least one scatterer");
  require(u.size() == n_scatterers, "extension parameter size must equal the scatterer count");
  u.validate();
  require(m_k >= 1, "m_k must be a positive norm");
  require(trials >= 1, "trials must be at least 1");
  require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 1/2)");
  if (l0) require(*l0 > 0.0, "l0 must be positive");
  sprime.validate();
  require(observable.dim() == dim, "observable dimension must match dim");
  require(observable.real_valued(1e-12), "observable must be real-valued");
  require(radius_factor >= 1.0, "radius_factor must be at least 1");
  require(solver.tol > 0.0 && solver.grid >= 3, "invalid solver options");
  require(root_index >= 0, "root_index must be nonnegative");
  for (double c : c0) require(c > 0.0, "Markov constants must be positive");
  if (mode == CoefficientMode::Synthetic) {
    require(synthetic_d.size() == n_scatterers, "synthetic d needs one entry per scatterer");
    require(std::abs(synthetic_d.norm() - 1.0) <= 1e-12, "synthetic d must have unit norm");
  }
}

std::vector<double> TrialSpec::markov_constants() const {
  if (!c0.empty()) return c0;
  return {2.0, 5.0, 14.0 * n_scatterers};
}

double TrialSpec::annulus_width() const { return l0 ? *l0 : toruslab::annulus_width(m_k, delta); }

void to_json(nlohmann::json& j, const TrialSpec& s) {
  j = nlohmann::json::object();
  j["dim"] = s.dim;
  j["n"] = s.n_scatterers;
  j["u"] = extension_to_json(s.u);
  j["m_k"] = s.m_k;
  j["delta"] = s.delta;
  if (s.l0) j["l0"] = *s.l0;
  j["sprime"] = s.sprime;
  j["strict"] = s.strict;
  j["seed"] = s.seed;
  j["trials"] = s.trials;
  j["observable"] = s.observable;
  j["mode"] = to_string(s.mode);
  if (s.mode == CoefficientMode::Synthetic) {
    auto d = nlohmann::json::array();
    for (Eigen::Index i = 0; i < s.synthetic_d.size(); ++i) {
      d.push_back({s.synthetic_d(i).real(), s.synthetic_d(i).imag()});
    }
    j["synthetic"] = {{"lambda_norm", s.synthetic_lambda_norm}, {"d", d}};
  }
  j["radius_factor"] = s.radius_factor;
  j["solver"] = {{"grid", s.solver.grid},
                 {"tol", s.solver.tol},
                 {"method", to_string(s.solver.method)},
                 {"degeneracy_ratio", s.solver.degeneracy_ratio}};
  j["selection"] = to_string(s.selection);
  j["root_index"] = s.root_index;
  j["c0"] = s.markov_constants();
  j["events"] = to_string(s.events);
  j["gamma"] = s.gamma;
  j["eps_envelope"] = s.eps_envelope;
  j["threads"] = s.threads;
}

void from_json(const nlohmann::json& j, TrialSpec& s) {
  require(j.is_object(), "trial spec must be a JSON object");
  static const char* known[] = {"dim", "n", "u", "m_k", "delta", "l0", "sprime", "strict", "seed",
                                "trials", "observable", "mode", "synthetic", "radius_factor",
                                "solver", "selection", "root_index", "c0", "events", "gamma",
                                "eps_envelope", "threads"};
  for (const auto& [key, _] : j.items()) {
    require(std::find(std::begin(known), std::end(known), key) != std::end(known),
            "unknown trial spec field '" + key + "'");
  }
  s = TrialSpec{};
  s.dim = j.value("dim", 2);
  check_dimension(s.dim);
  s.n_scatterers = j.value("n", 4);
  require(s.n_scatterers >= 1, "need at least one scatterer");
  s.u = j.contains("u") ? extension_from_json(j.at("u"), s.n_scatterers)
                        : ExtensionParameter::scalar(s.n_scatterers, 0.0);
  s.m_k = j.at("m_k").get<Norm>();
  s.delta = j.value("delta", 0.35);
  if (j.contains("l0")) s.l0 = j.at("l0").get<double>();
  if (j.contains("sprime")) {
    s.sprime = j.at("sprime").get<SPrimeParams>();
  }
  s.strict = j.value("strict", true);
  s.seed = j.value("seed", std::uint64_t{1});
  s.trials = j.value("trials", std::int64_t{100});
  s.observable = j.contains("observable") ? observable_from_json(j.at("observable"), s.dim)
                                          : Observable::cosine(s.dim, 0);
  s.mode = enum_from<CoefficientMode>(j.value("mode", std::string("solver")),
                                      {{"solver", CoefficientMode::Solver},
                                       {"synthetic", CoefficientMode::Synthetic}},
                                      "coefficient mode");
  if (s.mode == CoefficientMode::Synthetic) {
    const auto& syn = j.at("synthetic");
    s.synthetic_lambda_norm = syn.at("lambda_norm").get<double>();
    const auto& d = syn.at("d");
    s.synthetic_d.resize(static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto& e = d[i];
      s.synthetic_d(static_cast<Eigen::Index>(i)) =
          e.is_number() ? std::complex<double>(e.get<double>(), 0.0)
                        : std::complex<double>(e.at(0).get<double>(), e.at(1).get<double>());
    }
  }
  s.radius_factor = j.value("radius_factor", 4.0);
  if (j.contains("solver")) {
    const auto& so = j.at("solver");
    s.solver.grid = so.value("grid", 256);
    s.solver.tol = so.value("tol", 1e-8);
    s.solver.method = root_method_from_string(so.value("method", std::string("auto")));
    s.solver.degeneracy_ratio = so.value("degeneracy_ratio", 1e3);
  }
  s.selection = enum_from<RootSelection>(j.value("selection", std::string("random")),
                                         {{"random", RootSelection::Random},
                                          {"lowest", RootSelection::Lowest},
                                          {"highest", RootSelection::Highest},
                                          {"index", RootSelection::Index}},
                                         "root selection");
  s.root_index = j.value("root_index", 0);
  if (j.contains("c0")) s.c0 = j.at("c0").get<std::vector<double>>();
  s.events = enum_from<EventMode>(j.value("events", std::string("running")),
                                  {{"running", EventMode::Running}, {"two_pass", EventMode::TwoPass}},
                                  "event mode");
  s.gamma = j.value("gamma", s.dim == 2 ? 17.0 / 832.0 : 1.0 / 12.0);
  s.eps_envelope = j.value("eps_envelope", 0.0);
  s.threads = j.value("threads", 0);
  s.validate();
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<Point> sample_positions(std::uint64_t seed, std::uint64_t trial_index, int n, int dim) {
  check_dimension(dim);
  require(n >= 1, "need at least one scatterer");
  const std::uint32_t blocks = dim == 2 ? 1 : 2;
  for (std::uint32_t attempt = 0; attempt < kMaxRedraws; ++attempt) {
    const CounterRng rng(seed, trial_index, attempt);
    std::vector<Point> pts(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const auto base = static_cast<std::uint32_t>(j) * blocks;
      const auto u0 = rng.uniforms(base);
      Point p{u0[0], u0[1], 0.0};
      if (dim == 3) p[2] = rng.uniforms(base + 1)[0];
      pts[static_cast<std::size_t>(j)] = p;
    }
    if (n == 1 || min_pair_distance(pts, dim) >= 1e-9) return pts;
  }
  fail(ErrorKind::Numeric, "could not draw separated scatterer positions");
}

// ---------------------------------------------------------------------------
// Experiment

Norm table_limit(const TrialSpec& spec) {
  check_dimension(spec.dim);
  const double L0 = spec.annulus_width();
  const Norm reach = static_cast<Norm>(std::ceil(L0 / kFourPiSq)) + 1;
  const Norm shift = shift_radius_sq(spec.m_k, spec.sprime.eps);
  const Norm cross = 2 * static_cast<Norm>(std::ceil(std::sqrt(static_cast<double>(shift) *
                                                             static_cast<double>(spec.m_k + reach))));
  return spec.m_k + std::max<Norm>(1000, reach + shift + cross + 1);
}

std::shared_ptr<const SpectrumTable> table_for(const TrialSpec& spec) {
  return std::make_shared<const SpectrumTable>(enumerate_spectrum(spec.dim, table_limit(spec)));
}

Experiment::Experiment(TrialSpec spec, std::shared_ptr<const SpectrumTable> table)
    : spec_(std::move(spec)), table_(std::move(table)) {
  spec_.validate();
  if (!table_) table_ = table_for(spec_);
  require(table_->dim() == spec_.dim, "spectrum table dimension does not match the spec");
  if (!table_->contains(spec_.m_k)) {
    fail(ErrorKind::Validation, "m_k = " + std::to_string(spec_.m_k) + " is not a lattice norm");
  }
  window_.interval = table_->gap_around(spec_.m_k);
  window_.L0 = spec_.annulus_width();
  covers_ = annulus_covers_interval(window_.interval.center, window_.interval.next, window_.L0);
  sprime_ok_ = gap_condition(*table_, spec_.m_k, spec_.sprime) &&
               coeff_condition(*table_, spec_.m_k, spec_.sprime);
  if (spec_.strict && !sprime_ok_) {
    fail(ErrorKind::NonSPrime, "m_k = " + std::to_string(spec_.m_k) +
                                   " fails the subsequence conditions (set strict=false to override)");
  }
  if (spec_.mode == CoefficientMode::Synthetic) {
    require(spec_.synthetic_lambda_norm > static_cast<double>(window_.interval.center) &&
                spec_.synthetic_lambda_norm < static_cast<double>(window_.interval.next),
            "synthetic lambda must lie inside the gap (m_k, m_{k+1})");
  }
  Norm reach = 0;
  while (physical(reach + 1) <= window_.L0) ++reach;
  const Norm R = std::max({static_cast<Norm>(std::ceil(spec_.radius_factor *
                                                       static_cast<double>(window_.interval.next))),
                           window_.interval.next + 1, spec_.m_k + reach});
  ball_ = std::make_shared<const LatticeBall>(spec_.dim, R);
}

TrialResult Experiment::run_trial(std::uint64_t seed, std::uint64_t trial_index) const {
  TrialResult r;
  r.trial_index = trial_index;
  r.positions = sample_positions(seed, trial_index, spec_.n_scatterers, spec_.dim);
  Eigen::VectorXcd d;
  double lam = 0.0;
  if (spec_.mode == CoefficientMode::Solver) {
    RootSearch search;
    try {
      ScattererConfig cfg{spec_.dim, r.positions, spec_.u};
      const SecularSystem sys(std::move(cfg), ball_, window_.interval);
      search = find_new_eigenvalues(sys, spec_.solver);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numeric && e.kind() != ErrorKind::Degenerate) throw;
      r.status = TrialStatus::SolverFailure;
      r.message = e.what();
      return r;
    }
    r.root_count = static_cast<int>(search.roots.size());
    r.unresolved = static_cast<int>(search.unresolved.size());
    if (search.roots.empty()) {
      r.status = TrialStatus::NoNewEigenvalue;
      return r;
    }
    std::size_t pick = 0;
    switch (spec_.selection) {
      case RootSelection::Random:
        pick = CounterRng(seed, trial_index, kRootStream).below(search.roots.size(), 0);
        break;
      case RootSelection::Lowest: pick = 0; break;
      case RootSelection::Highest: pick = search.roots.size() - 1; break;
      case RootSelection::Index:
        if (static_cast<std::size_t>(spec_.root_index) >= search.roots.size()) {
          r.status = TrialStatus::NoNewEigenvalue;
          r.message = "fewer roots than root_index + 1";
          return r;
        }
        pick = static_cast<std::size_t>(spec_.root_index);
        break;
    }
    const auto& root = search.roots[pick];
    r.root_chosen = static_cast<int>(pick);
    r.residual = root.residual;
    r.near_degenerate = root.near_degenerate;
    d = root.d;
    lam = root.lambda_norm;
  } else {
    d = spec_.synthetic_d;
    lam = spec_.synthetic_lambda_norm;
  }
  r.lambda_norm = lam;
  r.max_abs_coeff = d.cwiseAbs().maxCoeff();

  const auto field = FourierField::assemble(d, r.positions, SpectralParameter{lam}, ball_);
  FunctionalReport rep;
  try {
    rep = evaluate_functionals(field, window_, spec_.observable);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonSPrime) throw;
    r.status = TrialStatus::NonSPrime;
    r.message = e.what();
    return r;
  }
  r.A = rep.A_vals;
  r.A_weighted = rep.A_weighted;
  r.B = rep.B_val;
  r.C = rep.C_val;
  r.norm_sq = field.norm_sq();
  r.annulus_norm_sq = rep.split.annulus_norm_sq;
  r.remainder_norm_sq = rep.split.remainder_norm_sq;
  const double gap = window_.interval.double_gap();
  r.d_xi0_sq = r.B * gap * gap;
  r.chain_C = r.remainder_norm_sq <= r.C;
  r.chain_B = r.annulus_norm_sq >= r.B;
  r.chain_ratio = r.B > 0.0 ? r.remainder_norm_sq / r.norm_sq <= r.C / r.B : true;
  r.pairing_one = pair_with_observable(field, Observable::constant(spec_.dim)).real();
  const auto eq = equidistribution_error(field, spec_.observable, spec_.gamma, spec_.eps_envelope,
                                         static_cast<std::size_t>(spec_.n_scatterers));
  r.err = eq.err;
  r.envelope = eq.envelope;
  return r;
}

std::vector<TrialResult> Experiment::run(std::uint64_t seed, int threads) const {
  if (threads < 0) threads = spec_.threads;
  if (threads == 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto n = static_cast<std::size_t>(spec_.trials);
  std::vector<TrialResult> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= n || failed.load()) return;
      try {
        out[t] = run_trial(seed, t);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), n));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double Experiment::theory_B() const {
  const double gap = window_.interval.double_gap();
  return 1.0 / (gap * gap);
}

double Experiment::theory_C() const { return complement_sum(*ball_, window_); }

std::map<LatticeVector, double> Experiment::theory_A() const {
  std::map<LatticeVector, double> out;
  for (const auto& [zeta, c] : spec_.observable.coeffs()) {
    if (!zeta.is_zero()) out[zeta] = sigma_sum(spec_.dim, window_, zeta).value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

Estimate estimate(const std::vector<double>& xs) {
  Estimate e;
  e.n = xs.size();
  if (xs.empty()) return e;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  e.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum v;
    for (double x : xs) v.add((x - e.mean) * (x - e.mean));
    e.std_error = std::sqrt(v.value() / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return e;
}

namespace {

std::vector<const TrialResult*> valid_trials(const std::vector<TrialResult>& results) {
  std::vector<const TrialResult*> v;
  for (const auto& r : results) {
    if (r.ok()) v.push_back(&r);
  }
  return v;
}

template <class F>
std::vector<double> column(const std::vector<const TrialResult*>& v, F f) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto* r : v) out.push_back(f(*r));
  return out;
}

Expectations expectations_unchecked(const Experiment& exp, const std::vector<const TrialResult*>& v) {
  Expectations e;
  e.B = estimate(column(v, [](const TrialResult& r) { return r.B; }));
  e.C = estimate(column(v, [](const TrialResult& r) { return r.C; }));
  e.A_weighted = estimate(column(v, [](const TrialResult& r) { return r.A_weighted; }));
  e.d_xi0_sq = estimate(column(v, [](const TrialResult& r) { return r.d_xi0_sq; }));
  e.theory_A = exp.theory_A();
  for (const auto& [zeta, _] : e.theory_A) {
    e.A[zeta] = estimate(column(v, [&](const TrialResult& r) { return r.A.at(zeta); }));
  }
  e.theory_B = exp.theory_B();
  e.theory_C = exp.theory_C();
  CompensatedSum w;
  for (const auto& [zeta, c] : exp.spec().observable.coeffs()) {
    if (!zeta.is_zero()) w.add(std::abs(c) * e.theory_A.at(zeta));
  }
  e.theory_A_weighted = w.value();
  return e;
}

std::vector<EventFrequency> frequencies_unchecked(const std::vector<TrialResult>& results,
                                                  const std::vector<double>& c0, int n_scatterers,
                                                  const std::optional<ReferenceMeans>& reference) {
  const auto flags = event_flags(results, c0, reference);
  std::size_t n = 0, b_hits = 0;
  std::map<double, std::size_t> hits;
  for (const auto& f : flags) {
    if (!f) continue;
    ++n;
    b_hits += f->B_third;
    for (const auto& [c, hit] : f->markov) hits[c] += hit;
  }
  std::vector<EventFrequency> out;
  if (n == 0) return out;
  const double dn = static_cast<double>(n);
  for (double c : c0) {
    EventFrequency e;
    e.name = "markov";
    e.C0 = c;
    e.freq = static_cast<double>(hits[c]) / dn;
    e.target = std::max(0.0, 1.0 - 1.0 / c);
    e.sigma = std::sqrt(e.target * (1.0 - e.target) / dn);
    e.pass = e.freq >= e.target - 3.0 * e.sigma;
    out.push_back(e);
  }
  EventFrequency e;
  e.name = "B_third";
  e.freq = static_cast<double>(b_hits) / dn;
  e.target = 9.0 / (14.0 * n_scatterers);
  e.sigma = std::sqrt(e.target * (1.0 - e.target) / dn);
  e.pass = e.freq >= e.target - 3.0 * e.sigma;
  out.push_back(e);
  return out;
}

}  // namespace

Expectations estimate_expectations(const Experiment& exp, const std::vector<TrialResult>& results) {
  const auto v = valid_trials(results);
  if (v.size() < 30) {
    fail(ErrorKind::Validation, "expectations need at least 30 trials with a new eigenvalue, got " +
                                    std::to_string(v.size()));
  }
  return expectations_unchecked(exp, v);
}

std::vector<std::optional<EventFlags>> event_flags(const std::vector<TrialResult>& results,
                                                   const std::vector<double>& c0,
                                                   const std::optional<ReferenceMeans>& reference) {
  std::vector<std::optional<EventFlags>> out(results.size());
  CompensatedSum sum_a, sum_b;
  std::size_t n = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.ok()) continue;
    ++n;
    sum_a.add(r.A_weighted);
    sum_b.add(r.B);
    const double mean_a = reference ? reference->A_weighted : sum_a.value() / static_cast<double>(n);
    const double mean_b = reference ? reference->B : sum_b.value() / static_cast<double>(n);
    EventFlags f;
    for (double c : c0) f.markov[c] = r.A_weighted <= c * mean_a;
    f.B_third = r.B > mean_b / 3.0;
    out[i] = f;
  }
  return out;
}

std::vector<EventFrequency> event_frequencies(const std::vector<TrialResult>& results,
                                              const std::vector<double>& c0, int n_scatterers,
                                              const std::optional<ReferenceMeans>& reference) {
  const auto v = valid_trials(results);
  if (v.size() < 500) {
    fail(ErrorKind::Validation, "event frequencies need at least 500 trials with a new eigenvalue, got " +
                                    std::to_string(v.size()));
  }
  return frequencies_unchecked(results, c0, n_scatterers, reference);
}

Quantiles quantiles(std::vector<double> xs) {
  Quantiles q;
  q.n = xs.size();
  if (xs.empty()) return q;
  std::sort(xs.begin(), xs.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
  };
  q.median = at(0.5);
  q.q10 = at(0.1);
  q.q90 = at(0.9);
  const double n = static_cast<double>(xs.size());
  const double half = 1.96 * std::sqrt(n) / 2.0;
  const auto lo = static_cast<std::ptrdiff_t>(std::floor(n / 2.0 - half));
  const auto hi = static_cast<std::ptrdiff_t>(std::ceil(n / 2.0 + half));
  q.median_lo = xs[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(lo, 0, static_cast<std::ptrdiff_t>(xs.size()) - 1))];
  q.median_hi = xs[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(hi, 0, static_cast<std::ptrdiff_t>(xs.size()) - 1))];
  return q;
}

RunOutput run_experiment(const Experiment& exp, int threads) {
  RunOutput out;
  const auto& spec = exp.spec();
  const auto c0 = spec.markov_constants();
  if (spec.events == EventMode::TwoPass) {
    const auto pilot = exp.run(mix64(spec.seed ^ kPilotSalt), threads < 0 ? spec.threads : threads);
    const auto v = valid_trials(pilot);
    if (!v.empty()) {
      ReferenceMeans ref;
      ref.A_weighted = estimate(column(v, [](const TrialResult& r) { return r.A_weighted; })).mean;
      ref.B = estimate(column(v, [](const TrialResult& r) { return r.B; })).mean;
      out.report.reference = ref;
    }
  }
  out.results = exp.run(threads);
  out.flags = event_flags(out.results, c0, out.report.reference);

  auto& rep = out.report;
  rep.trials = out.results.size();
  for (const auto& r : out.results) {
    switch (r.status) {
      case TrialStatus::Ok: ++rep.valid; break;
      case TrialStatus::NoNewEigenvalue: ++rep.no_root; break;
      case TrialStatus::NonSPrime: ++rep.non_sprime; break;
      case TrialStatus::SolverFailure: ++rep.failures; break;
    }
    if (!r.ok()) continue;
    rep.near_degenerate += r.near_degenerate;
    rep.chain_failures += !r.chain_ok();
    rep.pairing_failures += r.pairing_one != 1.0;
  }
  const auto v = valid_trials(out.results);
  if (!v.empty()) {
    rep.expectations = expectations_unchecked(exp, v);
    rep.events = frequencies_unchecked(out.results, c0, spec.n_scatterers, rep.reference);
    rep.err = quantiles(column(v, [](const TrialResult& r) { return r.err; }));
  }

  nlohmann::json spec_json = spec;
  spec_json.erase("threads");
  auto& m = rep.manifest;
  m["tool"] = "toruslab";
  m["spec"] = spec_json;
  m["spec_hash"] = json_hash(spec_json);
  m["seed"] = spec.seed;
  m["trials"] = spec.trials;
  m["rng"] = "philox4x32-10 keyed by (seed, trial, stream, block)";
  m["window"] = {{"m_prev", exp.window().interval.prev},
                 {"m_k", exp.window().interval.center},
                 {"m_next", exp.window().interval.next},
                 {"L0", exp.window().L0},
                 {"sprime_accepted", exp.sprime_accepted()},
                 {"covers_interval", exp.covers_interval()}};
  m["truncation_radius_sq"] = exp.ball().radius_sq();
  return out;
}

void write_trials_csv(const Experiment& exp, const RunOutput& out, std::ostream& os) {
  const auto& spec = exp.spec();
  const auto c0 = spec.markov_constants();
  std::vector<LatticeVector> zetas;
  for (const auto& [zeta, _] : spec.observable.coeffs()) {
    if (!zeta.is_zero()) zetas.push_back(zeta);
  }
  os << "trial_index,status,lambda_norm,root_count,root_chosen,residual,near_degenerate,B,C";
  for (const auto& z : zetas) os << ",A_" << to_string(z);
  os << ",A_weighted,norm_sq,annulus_norm_sq,remainder_norm_sq,d_xi0_sq,err,envelope,chain_ok";
  for (double c : c0) os << ",event_markov_" << fmt17(c);
  os << ",event_B_third\n";
  for (std::size_t i = 0; i < out.results.size(); ++i) {
    const auto& r = out.results[i];
    os << r.trial_index << ',' << to_string(r.status);
    if (!r.ok()) {
      os << ",," << r.root_count;
      const std::size_t blanks = 4 + zetas.size() + 8 + c0.size() + 1;
      for (std::size_t b = 0; b < blanks; ++b) os << ',';
      os << '\n';
      continue;
    }
    os << ',' << fmt17(r.lambda_norm) << ',' << r.root_count << ',' << r.root_chosen << ','
       << fmt17(r.residual) << ',' << int(r.near_degenerate) << ',' << fmt17(r.B) << ',' << fmt17(r.C);
    for (const auto& z : zetas) os << ',' << fmt17(r.A.at(z));
    os << ',' << fmt17(r.A_weighted) << ',' << fmt17(r.norm_sq) << ',' << fmt17(r.annulus_norm_sq)
       << ',' << fmt17(r.remainder_norm_sq) << ',' << fmt17(r.d_xi0_sq) << ',' << fmt17(r.err) << ','
       << fmt17(r.envelope) << ',' << int(r.chain_ok());
    const auto& f = out.flags[i];
    for (double c : c0) os << ',' << int(f->markov.at(c));
    os << ',' << int(f->B_third) << '\n';
  }
}

nlohmann::json report_json(const Experiment& exp, const AggregateReport& r) {
  nlohmann::json j;
  j["counts"] = {{"trials", r.trials},
                 {"valid", r.valid},
                 {"no_new_eigenvalue", r.no_root},
                 {"non_sprime", r.non_sprime},
                 {"solver_failure", r.failures},
                 {"near_degenerate", r.near_degenerate},
                 {"chain_failures", r.chain_failures},
                 {"pairing_failures", r.pairing_failures}};
  auto est = [](const Estimate& e, double theory) {
    nlohmann::json o{{"mean", e.mean}, {"stderr", e.std_error}, {"n", e.n}, {"theory", theory}};
    o["ratio"] = theory > 0.0 ? e.mean / theory : std::numeric_limits<double>::quiet_NaN();
    return o;
  };
  if (r.expectations) {
    const auto& e = *r.expectations;
    auto& means = j["means"];
    means["B"] = est(e.B, e.theory_B);
    means["C"] = est(e.C, e.theory_C);
    means["A_weighted"] = est(e.A_weighted, e.theory_A_weighted);
    means["d_xi0_sq"] = est(e.d_xi0_sq, 1.0);
    for (const auto& [zeta, v] : e.A) means["A"][to_string(zeta)] = est(v, e.theory_A.at(zeta));
    j["expectations_sufficient"] = r.valid >= 30;
  }
  auto events = nlohmann::json::array();
  for (const auto& e : r.events) {
    nlohmann::json o{{"event", e.name}, {"freq", e.freq}, {"target", e.target},
                     {"sigma", e.sigma}, {"pass", e.pass}};
    if (e.name == "markov") o["C0"] = e.C0;
    events.push_back(o);
  }
  j["events"] = events;
  j["events_sufficient"] = r.valid >= 500;
  if (r.reference) j["reference_means"] = {{"A_weighted", r.reference->A_weighted}, {"B", r.reference->B}};
  j["err"] = {{"median", r.err.median}, {"q10", r.err.q10}, {"q90", r.err.q90},
              {"median_lo", r.err.median_lo}, {"median_hi", r.err.median_hi}, {"n", r.err.n}};
  j["manifest"] = r.manifest;
  (void)exp;
  return j;
}

}  // namespace toruslab
