#include "toruslab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "toruslab/error.hpp"
#include "toruslab/lattice.hpp"
#include "toruslab/measure.hpp"
#include "toruslab/scaling.hpp"
#include "toruslab/scatterer.hpp"
#include "toruslab/serialize.hpp"

namespace toruslab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string params_file;
  std::string out = "runs";
  std::string cache;
  bool physical = false;
  int threads = 0;
};

struct Context {
  const std::vector<std::string>& args;
  Globals g;
  std::ostream& out;

  fs::path cache_dir() const { return g.cache.empty() ? default_cache_dir() : fs::path(g.cache); }

  SpectrumTable table(int dim, Norm m_max, json& cache_ids) const {
    bool hit = false;
    auto t = load_or_build_spectrum(cache_dir(), dim, m_max, &hit);
    cache_ids.push_back({{"file", t.cache_file_name()}, {"hit", hit}});
    return t;
  }

  json manifest(const std::string& cmd, const json& params) const {
    return {{"tool", "toruslab"},
            {"version", TORUSLAB_VERSION},
            {"subcommand", cmd},
            {"command_line", args},
            {"params", params},
            {"params_hash", json_hash({{"subcommand", cmd}, {"params", params}})}};
  }

  Artifact artifact(const std::string& cmd, const json& params) const {
    return Artifact(g.out, cmd + "-" + json_hash({{"subcommand", cmd}, {"params", params}}));
  }

  int up_to_date(const Artifact& a) const {
    out << json{{"artifact", a.path().string()}, {"status", "up-to-date"}}.dump() << '\n';
    return 0;
  }

  int done(const Artifact& a, json summary) const {
    summary["artifact"] = a.path().string();
    summary["status"] = "written";
    out << summary.dump() << '\n';
    return 0;
  }
};

std::string csv_string(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

// Values from a --params JSON file become command-line tokens for every key
// not already given explicitly, so flags win over the file.
std::vector<std::string> with_params(std::vector<std::string> args) {
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--params" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--params=", 0) == 0) file = args[i].substr(9);
  }
  if (file.empty()) return args;
  const json params = read_json(file);
  require(params.is_object(), "--params file must hold a JSON object");
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : params.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (given(flag)) continue;
    auto token = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        extra.push_back(flag);
        extra.push_back(token(v));
      }
    } else {
      extra.push_back(flag);
      extra.push_back(token(value));
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

double to_norm_units(double v, bool physical) { return physical ? v / kFourPiSq : v; }

std::optional<Rational> parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  try {
    std::size_t pos = 0;
    if (slash == std::string::npos) {
      const long long n = std::stoll(s, &pos);
      if (pos == s.size()) return Rational(n);
      return std::nullopt;
    }
    const long long n = std::stoll(s.substr(0, slash), &pos);
    if (pos != slash) return std::nullopt;
    const std::string den = s.substr(slash + 1);
    const long long d = std::stoll(den, &pos);
    if (pos != den.size() || d == 0) return std::nullopt;
    return Rational(n, d);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

double parse_number(const std::string& s, const std::string& what) {
  if (auto r = parse_rational(s)) return r->to_double();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Validation, what + " must be a number or a fraction a/b, got '" + s + "'");
}

// "N" names the spectrum norm N; "N-window" the first spectrum norm ≥ N.
Norm resolve_mk(const SpectrumTable& table, const std::string& spec) {
  const bool window = spec.size() > 7 && spec.ends_with("-window");
  const std::string digits = window ? spec.substr(0, spec.size() - 7) : spec;
  Norm m = 0;
  try {
    std::size_t pos = 0;
    m = std::stoll(digits, &pos);
    require(pos == digits.size(), "");
  } catch (const std::exception&) {
    fail(ErrorKind::Validation, "--mk must be an integer norm or N-window, got '" + spec + "'");
  }
  if (!window) {
    if (!table.contains(m)) fail(ErrorKind::Validation, std::to_string(m) + " is not a lattice norm");
    return m;
  }
  for (const auto& e : table.entries()) {
    if (e.m >= m && e.m > 0) return e.m;
  }
  fail(ErrorKind::OutOfRange, "no lattice norm at or above " + std::to_string(m));
}

Norm parse_mk_floor(const std::string& spec) {
  const std::string digits = spec.ends_with("-window") ? spec.substr(0, spec.size() - 7) : spec;
  try {
    return std::stoll(digits);
  } catch (const std::exception&) {
    fail(ErrorKind::Validation, "--mk must be an integer norm or N-window, got '" + spec + "'");
  }
}

ScattererConfig read_config(const std::string& path, json& raw) {
  raw = read_json(path);
  ScattererConfig cfg = raw.get<ScattererConfig>();
  cfg.validate();
  return cfg;
}

json complex_array(const Eigen::VectorXcd& v) {
  auto a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

// ---------------------------------------------------------------------------

struct SpectrumOpts {
  int dim = 2;
  Norm mmax = 0;
};

int run_spectrum(Context& ctx, const SpectrumOpts& o, bool out_given) {
  const fs::path dir = out_given ? fs::path(ctx.g.out) : ctx.cache_dir();
  require(o.mmax >= 1, "--mmax must be positive");
  bool hit = false;
  const auto table = load_or_build_spectrum(dir, o.dim, o.mmax, &hit);
  const json params{{"dim", o.dim}, {"mmax", o.mmax}};
  const auto manifest_path = dir / (table.cache_file_name() + ".manifest.json");
  std::error_code ec;
  if (!hit || !fs::exists(manifest_path, ec)) {
    auto m = ctx.manifest("spectrum", params);
    m["outputs"] = json::array({{{"file", table.cache_file_name()}}});
    write_file_atomic(manifest_path, m.dump(2) + "\n");
  }
  ctx.out << json{{"artifact", (dir / table.cache_file_name()).string()},
                  {"status", hit ? "cache-hit" : "written"},
                  {"norms", table.size()},
                  {"lattice_points", table.lattice_count(o.mmax)}}
                 .dump()
          << '\n';
  return 0;
}

struct SPrimeOpts {
  int dim = 2;
  double from = 0, to = 0;
  double delta = 0.1;
  std::optional<double> eps, eps_prime, theta;
  double c_gap = 10, c_coeff = 10;
};

int run_sprime(Context& ctx, const SPrimeOpts& o) {
  const Norm lo = static_cast<Norm>(std::ceil(to_norm_units(o.from, ctx.g.physical)));
  const Norm hi = static_cast<Norm>(std::floor(to_norm_units(o.to, ctx.g.physical)));
  require(lo >= 1 && lo < hi, "need 1 ≤ --from < --to");
  SPrimeParams p;
  p.delta = o.delta;
  p.theta = o.theta.value_or(kHuxleyTheta);
  if (o.eps) {
    p.eps = *o.eps;
  } else {
    p.eps = epsilon_from_delta(p.theta, p.delta);
  }
  p.eps_prime = o.eps_prime.value_or(p.eps);
  p.c_gap = o.c_gap;
  p.c_coeff = o.c_coeff;
  p.validate();

  const json params{{"dim", o.dim}, {"from", lo}, {"to", hi}, {"sprime", p}};
  Artifact art = ctx.artifact("sprime", params);
  if (art.up_to_date()) return ctx.up_to_date(art);

  json cache = json::array();
  const auto reach = static_cast<Norm>(std::ceil(annulus_width(hi, p.delta) / kFourPiSq)) + 1;
  const auto shift = shift_radius_sq(hi, p.eps);
  const Norm m_max = hi + reach + shift +
                     2 * static_cast<Norm>(std::ceil(std::sqrt(double(shift) * double(hi + reach)))) + 1000;
  const auto table = ctx.table(o.dim, m_max, cache);
  const auto w = build_window(table, lo, hi, p);

  PlotInputs plot;
  plot.window = w;
  art.add("window.csv", csv_string([&](std::ostream& os) { write_window_csv(w, os); }));
  art.add("summary.json", window_summary(w).dump(2) + "\n");
  art.add("density_vs_window.csv",
          csv_string([&](std::ostream& os) { emit_plotdata("density_vs_window", plot, os); }));
  auto m = ctx.manifest("sprime", params);
  m["cache"] = cache;
  art.commit(m);
  return ctx.done(art, {{"accepted", w.accepted.size()}, {"members", w.rows.size()}, {"density", w.density}});
}

struct SolveOpts {
  std::string config;
  std::string mk;
  SolverOptions solver;
  std::string method = "auto";
  double radius_factor = 4.0;
};

int run_solve(Context& ctx, SolveOpts o) {
  json raw;
  const ScattererConfig cfg = read_config(o.config, raw);
  o.solver.method = root_method_from_string(o.method);
  require(o.radius_factor >= 1.0, "--radius-factor must be at least 1");
  const json params{{"config", raw},
                    {"mk", o.mk},
                    {"tol", o.solver.tol},
                    {"grid", o.solver.grid},
                    {"method", o.method},
                    {"radius_factor", o.radius_factor},
                    {"physical", ctx.g.physical}};
  Artifact art = ctx.artifact("solve", params);
  if (art.up_to_date()) return ctx.up_to_date(art);

  json cache = json::array();
  const auto table = ctx.table(cfg.dim, parse_mk_floor(o.mk) + 1000, cache);
  const GapTriple gap = table.gap_around(resolve_mk(table, o.mk));
  const Norm R = std::max(static_cast<Norm>(std::ceil(o.radius_factor * static_cast<double>(gap.next))),
                          gap.next + 1);
  const SecularSystem sys(cfg, std::make_shared<const LatticeBall>(cfg.dim, R), gap);
  const RootSearch search = find_new_eigenvalues(sys, o.solver);

  std::ostringstream csv;
  csv << "root," << (ctx.g.physical ? "lambda_physical" : "lambda_norm")
      << ",residual,bracket_width,near_degenerate";
  for (std::size_t j = 0; j < cfg.size(); ++j) csv << ",d" << j << "_re,d" << j << "_im";
  csv << '\n';
  for (std::size_t i = 0; i < search.roots.size(); ++i) {
    const auto& r = search.roots[i];
    csv << i << ',' << fmt17(ctx.g.physical ? kFourPiSq * r.lambda_norm : r.lambda_norm)
        << ',' << fmt17(r.residual) << ',' << fmt17(r.bracket_width) << ',' << int(r.near_degenerate);
    for (Eigen::Index j = 0; j < r.d.size(); ++j) csv << ',' << fmt17(r.d(j).real()) << ',' << fmt17(r.d(j).imag());
    csv << '\n';
  }
  json summary{{"interval", {gap.prev, gap.center, gap.next}},
               {"truncation_radius_sq", R},
               {"method", to_string(search.method)},
               {"roots", search.roots.size()},
               {"unresolved", search.unresolved},
               {"evaluations", search.evaluations}};
  art.add("roots.csv", csv.str());
  art.add("summary.json", summary.dump(2) + "\n");
  auto m = ctx.manifest("solve", params);
  m["cache"] = cache;
  art.commit(m);
  return ctx.done(art, summary);
}

struct MeasureOpts {
  std::string config;
  std::string mk;
  std::optional<double> lambda;
  int root = 0;
  std::string observable;
  double delta = 0.35;
  std::optional<double> l0;
  double radius_factor = 4.0;
  std::string gamma;
  double eps_envelope = 0.0;
  double tol = 1e-8;
};

int run_measure(Context& ctx, const MeasureOpts& o) {
  json raw;
  const ScattererConfig cfg = read_config(o.config, raw);
  Observable obs = Observable::cosine(cfg.dim, 0);
  json obs_json = obs;
  if (!o.observable.empty()) {
    obs_json = o.observable.front() == '{' ? json::parse(o.observable) : read_json(o.observable);
    obs = observable_from_json(obs_json, cfg.dim);
  }
  const double gamma = o.gamma.empty() ? (cfg.dim == 2 ? kGamma2.to_double() : kGamma3.to_double())
                                       : parse_number(o.gamma, "--gamma");
  std::optional<double> lam_in;
  if (o.lambda) lam_in = to_norm_units(*o.lambda, ctx.g.physical);
  json params{{"config", raw},       {"mk", o.mk},       {"root", o.root},
              {"observable", obs_json}, {"delta", o.delta}, {"radius_factor", o.radius_factor},
              {"gamma", gamma},      {"eps_envelope", o.eps_envelope}, {"tol", o.tol}};
  if (lam_in) params["lambda_norm"] = *lam_in;
  if (o.l0) params["l0"] = *o.l0;
  Artifact art = ctx.artifact("measure", params);
  if (art.up_to_date()) return ctx.up_to_date(art);

  json cache = json::array();
  const auto table = ctx.table(cfg.dim, parse_mk_floor(o.mk) + 1000, cache);
  const Norm m_k = resolve_mk(table, o.mk);
  const Window window{table.gap_around(m_k), o.l0 ? *o.l0 : annulus_width(m_k, o.delta)};
  Norm reach = 0;
  while (physical(reach + 1) <= window.L0) ++reach;
  const Norm R = std::max({static_cast<Norm>(std::ceil(o.radius_factor * static_cast<double>(window.interval.next))),
                           window.interval.next + 1, m_k + reach});
  auto ball = std::make_shared<const LatticeBall>(cfg.dim, R);

  Eigen::VectorXcd d;
  double lam = 0.0;
  json source;
  if (lam_in) {
    require(raw.contains("d"), "--lambda needs coefficients \"d\" in the config");
    const auto& dj = raw.at("d");
    require(dj.size() == cfg.size(), "\"d\" needs one entry per scatterer");
    d.resize(static_cast<Eigen::Index>(cfg.size()));
    for (std::size_t j = 0; j < dj.size(); ++j) {
      d(static_cast<Eigen::Index>(j)) = dj[j].is_number()
                                            ? std::complex<double>(dj[j].get<double>(), 0.0)
                                            : std::complex<double>(dj[j].at(0).get<double>(), dj[j].at(1).get<double>());
    }
    require(d.norm() > 0.0, "\"d\" must be nonzero");
    d /= d.norm();
    lam = *lam_in;
    require(lam > static_cast<double>(window.interval.center) && lam < static_cast<double>(window.interval.next),
            "lambda must lie inside the gap (m_k, m_{k+1})");
    source = "synthetic";
  } else {
    SolverOptions so;
    so.tol = o.tol;
    const SecularSystem sys(cfg, ball, window.interval);
    const auto search = find_new_eigenvalues(sys, so);
    if (search.roots.empty()) fail(ErrorKind::Numeric, "no new eigenvalue in the gap");
    require(o.root >= 0 && static_cast<std::size_t>(o.root) < search.roots.size(),
            "--root out of range (" + std::to_string(search.roots.size()) + " roots)");
    const auto& r = search.roots[static_cast<std::size_t>(o.root)];
    d = r.d;
    lam = r.lambda_norm;
    source = "solver";
  }
  const auto field = FourierField::assemble(d, cfg.positions, SpectralParameter{lam}, ball);
  const auto rep = evaluate_functionals(field, window, obs);
  const auto eq = equidistribution_error(field, obs, gamma, o.eps_envelope, cfg.size());
  json result = to_json(rep);
  result["source"] = source;
  result["lambda_norm"] = lam;
  result["lambda_physical"] = kFourPiSq * lam;
  result["d"] = complex_array(d);
  result["norm_sq"] = field.norm_sq();
  result["pairing_one"] = pair_with_observable(field, Observable::constant(cfg.dim)).real();
  result["err"] = eq.err;
  result["envelope"] = eq.envelope;
  result["window"] = {{"m_prev", window.interval.prev}, {"m_k", m_k}, {"m_next", window.interval.next},
                      {"L0", window.L0}, {"truncation_radius_sq", R}};
  art.add("functionals.json", result.dump(2) + "\n");
  auto m = ctx.manifest("measure", params);
  m["cache"] = cache;
  art.commit(m);
  return ctx.done(art, {{"lambda_norm", lam}, {"B", rep.B_val}, {"C", rep.C_val}, {"err", eq.err}});
}

struct McOpts {
  std::string spec;
  std::optional<std::int64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<Norm> mk;
  std::optional<int> n;
  std::optional<std::string> events;
  std::vector<Norm> sweep;
};

int run_mc(Context& ctx, const McOpts& o) {
  json raw = read_json(o.spec);
  require(raw.is_object(), "trial spec must be a JSON object");
  if (o.trials) raw["trials"] = *o.trials;
  if (o.seed) raw["seed"] = *o.seed;
  if (o.mk) raw["m_k"] = *o.mk;
  if (o.n) raw["n"] = *o.n;
  if (o.events) raw["events"] = *o.events;
  raw.erase("threads");
  if (!o.sweep.empty() && !raw.contains("m_k")) raw["m_k"] = o.sweep.front();
  const TrialSpec base = raw.get<TrialSpec>();
  json params = base;
  params.erase("threads");
  if (!o.sweep.empty()) params["sweep"] = o.sweep;

  Artifact art = ctx.artifact("mc", params);
  if (art.up_to_date()) return ctx.up_to_date(art);
  json cache = json::array();
  auto m = ctx.manifest("mc", params);

  if (o.sweep.empty()) {
    TrialSpec spec = base;
    auto table = std::make_shared<const SpectrumTable>(ctx.table(spec.dim, table_limit(spec), cache));
    const Experiment exp(spec, table);
    const auto run = run_experiment(exp, ctx.g.threads);
    PlotInputs plot;
    plot.events = run.report.events;
    art.add("trials.csv", csv_string([&](std::ostream& os) { write_trials_csv(exp, run, os); }));
    art.add("report.json", report_json(exp, run.report).dump(2) + "\n");
    art.add("freq_vs_c0.csv", csv_string([&](std::ostream& os) { emit_plotdata("freq_vs_c0", plot, os); }));
    m["cache"] = cache;
    m["run"] = run.report.manifest;
    art.commit(m);
    return ctx.done(art, {{"trials", run.report.trials}, {"valid", run.report.valid},
                          {"chain_failures", run.report.chain_failures}});
  }

  PlotInputs plot;
  auto runs = json::array();
  for (Norm target : o.sweep) {
    TrialSpec probe = base;
    probe.m_k = target;
    const Norm limit = table_limit(probe) + 2000;
    auto table = std::make_shared<const SpectrumTable>(ctx.table(base.dim, limit, cache));
    const auto mk = select_interval(*table, target, base.sprime);
    if (!mk) fail(ErrorKind::EmptyWindow, "no accepted interval near " + std::to_string(target));
    TrialSpec spec = base;
    spec.m_k = *mk;
    if (table_limit(spec) > table->m_max()) {
      table = std::make_shared<const SpectrumTable>(ctx.table(base.dim, table_limit(spec), cache));
    }
    const Experiment exp(spec, table);
    const auto run = run_experiment(exp, ctx.g.threads);
    const std::string tag = std::to_string(*mk);
    art.add("trials_" + tag + ".csv", csv_string([&](std::ostream& os) { write_trials_csv(exp, run, os); }));
    art.add("report_" + tag + ".json", report_json(exp, run.report).dump(2) + "\n");
    plot.err.push_back({*mk, run.report.err});
    runs.push_back({{"target", target}, {"m_k", *mk}, {"valid", run.report.valid}});
  }
  std::vector<std::string> notes;
  for (std::size_t i = 1; i < plot.err.size(); ++i) {
    if (plot.err[i].err.median > plot.err[i - 1].err.median) {
      notes.push_back("median error increases from m_k=" + std::to_string(plot.err[i - 1].m_k) +
                      " to m_k=" + std::to_string(plot.err[i].m_k));
    }
  }
  art.add("err_vs_lambda.csv", csv_string([&](std::ostream& os) { emit_plotdata("err_vs_lambda", plot, os); }));
  m["cache"] = cache;
  m["sweep"] = runs;
  m["trend_notes"] = notes;
  art.commit(m);
  return ctx.done(art, {{"sweep", runs}, {"trend_notes", notes}});
}

struct ScaleOpts {
  std::optional<double> E, L, lambda;
  double rho = 1.0;
  std::string gamma;
  int dim = 2;
  std::string eps = "0";
};

int run_scale(Context& ctx, const ScaleOpts& o) {
  check_dimension(o.dim);
  const std::string gamma_s = o.gamma.empty() ? (o.dim == 2 ? kGamma2.to_string() : kGamma3.to_string()) : o.gamma;
  const double gamma = parse_number(gamma_s, "--gamma");
  const double eps = parse_number(o.eps, "--eps");
  double E = 0, L = 1, lam = 0;
  if (o.lambda) {
    lam = ctx.g.physical ? *o.lambda : kFourPiSq * *o.lambda;
    L = o.L.value_or(1.0);
    E = energy_from_lambda(lam, L);
  } else {
    require(o.E.has_value(), "give --E (with --L) or --lambda");
    E = *o.E;
    L = o.L.value_or(1.0);
    lam = scaling_map(E, L);
  }
  const auto t = threshold_arithmetic(E, o.rho, gamma, o.dim, eps);
  const json params{{"E", E}, {"L", L}, {"rho", o.rho}, {"gamma", gamma_s}, {"dim", o.dim}, {"eps", o.eps}};
  json result{{"lambda_physical", lam}, {"lambda_norm", lam / kFourPiSq}, {"E", E}, {"L", L},
              {"rho", o.rho}, {"alpha", t.alpha}, {"beta", t.beta}, {"L_max", t.L_max},
              {"localization_length_lower_bound", t.L_max}};
  const auto g_exact = parse_rational(gamma_s);
  const auto e_exact = parse_rational(o.eps);
  if (g_exact && e_exact) {
    const auto ex = threshold_exponents(*g_exact, o.dim, *e_exact);
    result["alpha_exact"] = ex.alpha.to_string();
    result["beta_exact"] = ex.beta.to_string();
  }
  Artifact art = ctx.artifact("scale", params);
  if (art.up_to_date()) return ctx.up_to_date(art);
  art.add("result.json", result.dump(2) + "\n");
  art.commit(ctx.manifest("scale", params));
  return ctx.done(art, result);
}

void error_record(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  try {
    const auto args = with_params(args_in);
    Context ctx{args_in, {}, out};

    CLI::App app{"toruslab: point scatterers on flat tori"};
    app.name("toruslab");
    app.require_subcommand(1);
    app.set_version_flag("--version", TORUSLAB_VERSION);
    app.add_option("--params", ctx.g.params_file, "JSON file of option defaults (flags take precedence)");
    auto* out_opt = app.add_option("--out", ctx.g.out, "Artifact root directory")->capture_default_str();
    app.add_option("--cache", ctx.g.cache, "Spectrum cache directory (default $TORUSLAB_CACHE or .toruslab-cache)");
    app.add_flag("--physical", ctx.g.physical, "Spectral values in physical units 4π²m instead of norms");
    app.add_option("--threads", ctx.g.threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);

    SpectrumOpts so;
    auto* spectrum = app.add_subcommand("spectrum", "Enumerate lattice norms and multiplicities");
    spectrum->add_option("--dim", so.dim)->check(CLI::IsMember({2, 3}));
    spectrum->add_option("--mmax", so.mmax)->required();

    SPrimeOpts sp;
    auto* sprime = app.add_subcommand("sprime", "Check the subsequence conditions over a window of norms");
    sprime->add_option("--dim", sp.dim)->check(CLI::IsMember({2, 3}));
    sprime->add_option("--from", sp.from)->required();
    sprime->add_option("--to", sp.to)->required();
    sprime->add_option("--delta", sp.delta);
    sprime->add_option("--eps", sp.eps);
    sprime->add_option("--eps-prime", sp.eps_prime);
    sprime->add_option("--theta", sp.theta);
    sprime->add_option("--c-gap", sp.c_gap);
    sprime->add_option("--c-coeff", sp.c_coeff);

    SolveOpts sv;
    auto* solve = app.add_subcommand("solve", "New eigenvalues of a scatterer configuration in one gap");
    solve->add_option("--config", sv.config, "Scatterer configuration JSON")->required()->check(CLI::ExistingFile);
    solve->add_option("--mk", sv.mk, "Gap start: a norm, or N-window for the first norm ≥ N")->required();
    solve->add_option("--tol", sv.solver.tol);
    solve->add_option("--grid", sv.solver.grid);
    solve->add_option("--method", sv.method)->check(CLI::IsMember({"auto", "smin", "inertia"}));
    solve->add_option("--radius-factor", sv.radius_factor);

    MeasureOpts mo;
    auto* measure = app.add_subcommand("measure", "Fourier functionals of one eigenfunction");
    measure->add_option("--config", mo.config, "Scatterer configuration JSON")->required()->check(CLI::ExistingFile);
    measure->add_option("--mk", mo.mk)->required();
    measure->add_option("--lambda", mo.lambda, "Spectral parameter; uses \"d\" from the config");
    measure->add_option("--root", mo.root);
    measure->add_option("--observable", mo.observable, "Observable JSON (inline or file)");
    measure->add_option("--delta", mo.delta);
    measure->add_option("--l0", mo.l0);
    measure->add_option("--radius-factor", mo.radius_factor);
    measure->add_option("--gamma", mo.gamma);
    measure->add_option("--eps-envelope", mo.eps_envelope);
    measure->add_option("--tol", mo.tol);

    McOpts mc;
    auto* mcc = app.add_subcommand("mc", "Monte Carlo over random scatterer positions");
    mcc->add_option("--spec", mc.spec, "Trial spec JSON")->required()->check(CLI::ExistingFile);
    mcc->add_option("--trials", mc.trials);
    mcc->add_option("--seed", mc.seed);
    mcc->add_option("--mk", mc.mk);
    mcc->add_option("--n", mc.n);
    mcc->add_option("--events", mc.events)->check(CLI::IsMember({"running", "two_pass"}));
    mcc->add_option("--sweep", mc.sweep, "Target norms; runs the first accepted gap at or above each")
        ->delimiter(',');

    ScaleOpts sc;
    auto* scale = app.add_subcommand("scale", "Energy scaling and localization-length exponents");
    scale->add_option("--E", sc.E);
    scale->add_option("--L", sc.L);
    scale->add_option("--lambda", sc.lambda);
    scale->add_option("--rho", sc.rho);
    scale->add_option("--gamma", sc.gamma, "Exponent, decimal or a/b");
    scale->add_option("--dim", sc.dim)->check(CLI::IsMember({2, 3}));
    scale->add_option("--eps", sc.eps, "Decimal or a/b");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
      std::vector<std::string> rev(args.rbegin(), args.rend());
      app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp& e) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::CallForVersion& e) {
      out << TORUSLAB_VERSION << '\n';
      return 0;
    } catch (const CLI::ParseError& e) {
      error_record(err, "usage", e.what(), 2);
      return 2;
    }

    if (*spectrum) return run_spectrum(ctx, so, out_opt->count() > 0);
    if (*sprime) return run_sprime(ctx, sp);
    if (*solve) return run_solve(ctx, sv);
    if (*measure) return run_measure(ctx, mo);
    if (*mcc) return run_mc(ctx, mc);
    if (*scale) return run_scale(ctx, sc);
    return 2;
  } catch (const Error& e) {
    error_record(err, to_string(e.kind()), e.what(), exit_code(e.kind()));
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    error_record(err, "io", e.what(), 4);
    return 4;
  } catch (const json::exception& e) {
    error_record(err, "validation", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    error_record(err, "numeric", e.what(), 3);
    return 3;
  }
}

}  // namespace toruslab::cli
