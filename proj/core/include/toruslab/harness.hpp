#pragma once

// Seeded Monte Carlo over scatterer configurations.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "toruslab/lattice.hpp"
#include "toruslab/measure.hpp"
#include "toruslab/scatterer.hpp"
#include "toruslab/sprime.hpp"

namespace toruslab {

enum class CoefficientMode { Solver, Synthetic };
enum class RootSelection { Random, Lowest, Highest, Index };
enum class EventMode { Running, TwoPass };

struct TrialSpec {
  int dim = 2;
  int n_scatterers = 4;
  ExtensionParameter u = ExtensionParameter::scalar(4, 0.0);
  Norm m_k = 0;                    // gap center; the gap is (m_k, m_{k+1})
  double delta = 0.35;             // L_0 = (4π² m_k)^δ unless l0 is set
  std::optional<double> l0;
  SPrimeParams sprime = SPrimeParams::from_delta(0.1);
  bool strict = true;              // require m_k to pass both S' conditions
  std::uint64_t seed = 1;
  std::int64_t trials = 100;
  Observable observable = Observable::cosine(2, 0);
  CoefficientMode mode = CoefficientMode::Solver;
  double synthetic_lambda_norm = 0.0;
  Eigen::VectorXcd synthetic_d;
  double radius_factor = 4.0;      // truncation |ξ|² ≤ radius_factor · m_{k+1}
  SolverOptions solver;
  RootSelection selection = RootSelection::Random;
  int root_index = 0;
  std::vector<double> c0;          // Markov constants; empty means {2, 5, 14N}
  EventMode events = EventMode::Running;
  double gamma = 17.0 / 832.0;
  double eps_envelope = 0.0;
  int threads = 0;                 // 0 = hardware concurrency

  void validate() const;
  std::vector<double> markov_constants() const;
  double annulus_width() const;
};

void to_json(nlohmann::json& j, const TrialSpec& s);
void from_json(const nlohmann::json& j, TrialSpec& s);

/// N uniform points in [0,1)^d keyed by (seed, trial, j); redrawn when two
/// points are closer than 1e-9.
std::vector<Point> sample_positions(std::uint64_t seed, std::uint64_t trial_index, int n, int dim);

enum class TrialStatus { Ok, NoNewEigenvalue, NonSPrime, SolverFailure };
const char* to_string(TrialStatus s);

struct TrialResult {
  std::uint64_t trial_index = 0;
  TrialStatus status = TrialStatus::Ok;
  std::string message;
  std::vector<Point> positions;
  int root_count = 0;
  int root_chosen = -1;
  int unresolved = 0;
  double lambda_norm = 0.0;
  double residual = 0.0;
  bool near_degenerate = false;
  std::map<LatticeVector, double> A;
  double A_weighted = 0.0;
  double B = 0.0;
  double C = 0.0;
  double norm_sq = 0.0;
  double annulus_norm_sq = 0.0;
  double remainder_norm_sq = 0.0;
  double d_xi0_sq = 0.0;        // |d(ξ_0)|² = ℬ·(n_{k+1} - n_{k-1})²
  double max_abs_coeff = 0.0;   // max_j |d_j|
  double pairing_one = 0.0;     // <1·g, g>, exactly 1 by construction
  double err = 0.0;
  double envelope = 0.0;
  bool chain_C = false;         // Σ_{A^c}|D|² ≤ 𝒞
  bool chain_B = false;         // Σ_A|D|² ≥ ℬ
  bool chain_ratio = false;     // ‖g_R‖² ≤ 𝒞/ℬ

  bool ok() const { return status == TrialStatus::Ok; }
  bool chain_ok() const { return chain_C && chain_B && chain_ratio; }
};

/// Everything shared by the trials of one spec: table, window, truncation set.
class Experiment {
 public:
  Experiment(TrialSpec spec, std::shared_ptr<const SpectrumTable> table);

  const TrialSpec& spec() const { return spec_; }
  const Window& window() const { return window_; }
  const LatticeBall& ball() const { return *ball_; }
  std::shared_ptr<const LatticeBall> ball_ptr() const { return ball_; }
  bool sprime_accepted() const { return sprime_ok_; }
  bool covers_interval() const { return covers_; }

  TrialResult run_trial(std::uint64_t trial_index) const { return run_trial(spec_.seed, trial_index); }
  TrialResult run_trial(std::uint64_t seed, std::uint64_t trial_index) const;
  /// All trials, in trial-index order regardless of scheduling. threads < 0
  /// uses the spec's setting, 0 the hardware concurrency.
  std::vector<TrialResult> run(int threads = -1) const { return run(spec_.seed, threads); }
  std::vector<TrialResult> run(std::uint64_t seed, int threads) const;

  /// Closed-form asymptotic values for 𝔼(ℬ), 𝔼(𝒞), 𝔼(𝒜_ζ).
  double theory_B() const;
  double theory_C() const;
  std::map<LatticeVector, double> theory_A() const;

 private:
  TrialSpec spec_;
  std::shared_ptr<const SpectrumTable> table_;
  Window window_;
  std::shared_ptr<const LatticeBall> ball_;
  bool sprime_ok_ = false;
  bool covers_ = false;
};

/// Largest norm an Experiment for this spec needs from its spectrum table.
Norm table_limit(const TrialSpec& spec);
/// Spectrum table large enough for a spec's truncation set.
std::shared_ptr<const SpectrumTable> table_for(const TrialSpec& spec);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

Estimate estimate(const std::vector<double>& xs);

struct Expectations {
  Estimate B, C, A_weighted, d_xi0_sq;
  std::map<LatticeVector, Estimate> A;
  double theory_B = 0.0, theory_C = 0.0, theory_A_weighted = 0.0;
  std::map<LatticeVector, double> theory_A;
};

/// Needs ≥ 30 trials with a new eigenvalue.
Expectations estimate_expectations(const Experiment& exp, const std::vector<TrialResult>& results);

struct EventFlags {
  std::map<double, bool> markov;  // C_0 → 𝒜_a ≤ C_0·𝔼̂(𝒜_a)
  bool B_third = false;           // ℬ > 𝔼̂(ℬ)/3
};

struct EventFrequency {
  std::string name;
  double C0 = 0.0;
  double freq = 0.0;
  double target = 0.0;
  double sigma = 0.0;
  bool pass = false;  // freq ≥ target - 3σ
};

struct ReferenceMeans {
  double A_weighted = 0.0;
  double B = 0.0;
};

/// Per-trial event flags (aligned with results; invalid trials get no flags)
/// against running means, or against fixed reference means when given.
std::vector<std::optional<EventFlags>> event_flags(const std::vector<TrialResult>& results,
                                                   const std::vector<double>& c0,
                                                   const std::optional<ReferenceMeans>& reference);

/// Needs ≥ 500 trials with a new eigenvalue.
std::vector<EventFrequency> event_frequencies(const std::vector<TrialResult>& results,
                                              const std::vector<double>& c0, int n_scatterers,
                                              const std::optional<ReferenceMeans>& reference = {});

struct Quantiles {
  double median = 0.0, q10 = 0.0, q90 = 0.0;
  double median_lo = 0.0, median_hi = 0.0;  // 95% order-statistic band
  std::size_t n = 0;
};

Quantiles quantiles(std::vector<double> xs);

struct AggregateReport {
  std::size_t trials = 0, valid = 0, no_root = 0, non_sprime = 0, failures = 0;
  std::size_t near_degenerate = 0, chain_failures = 0, pairing_failures = 0;
  std::optional<Expectations> expectations;
  std::vector<EventFrequency> events;
  std::optional<ReferenceMeans> reference;  // pilot means in two-pass mode
  Quantiles err;
  nlohmann::json manifest;
};

struct RunOutput {
  std::vector<TrialResult> results;
  std::vector<std::optional<EventFlags>> flags;
  AggregateReport report;
};

/// Runs the spec (and a pilot in two-pass mode) and aggregates.
RunOutput run_experiment(const Experiment& exp, int threads = -1);

void write_trials_csv(const Experiment& exp, const RunOutput& out, std::ostream& os);
nlohmann::json report_json(const Experiment& exp, const AggregateReport& r);

const char* to_string(CoefficientMode m);
const char* to_string(RootSelection s);
const char* to_string(EventMode m);

}  // namespace toruslab
