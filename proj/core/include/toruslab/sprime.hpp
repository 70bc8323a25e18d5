#pragma once

// Finite windows of the density-one subsequence of "good" spectrum members:
// small double gaps, and shifted coefficients |c_λ(ξ+ζ)| uniformly below
// c_coeff / L_0 for ξ in the annulus around m_k and short shifts ζ.

#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "toruslab/lattice.hpp"

namespace toruslab {

inline constexpr double kHuxleyTheta = 133.0 / 416.0;

/// (1/2 - θ - δ) / 2; throws when the result is not positive.
double epsilon_from_delta(double theta, double delta);

struct SPrimeParams {
  double delta = 0.1;
  double eps = 0.0;        // shift radius exponent: |ζ| ≤ (4π²m_k)^eps
  double eps_prime = 0.0;  // gap exponent
  double c_gap = 10.0;
  double c_coeff = 10.0;
  double theta = kHuxleyTheta;

  /// eps derived from delta, eps_prime = eps.
  static SPrimeParams from_delta(double delta, double theta = kHuxleyTheta);

  /// Hard checks (positivity, 0 < delta < 1/2); throws Validation.
  void validate() const;
  /// Whether delta lies in the admissible open range (θ/2, 1/2 - θ).
  bool delta_in_range() const;
};

void to_json(nlohmann::json& j, const SPrimeParams& p);
void from_json(const nlohmann::json& j, SPrimeParams& p);

/// Annulus width L_0 = (4π² m_k)^δ in physical units.
double annulus_width(Norm m_k, double delta);

/// Largest |ζ|² allowed by the shift radius (4π² m_k)^eps.
Norm shift_radius_sq(Norm m_k, double eps);

/// Nonzero shifts with |ζ|² ≤ radius_sq, lexicographic.
std::vector<LatticeVector> shift_vectors(int dim, Norm radius_sq);

/// 4π²(m_{k+1} - m_{k-1}) ≤ c_gap · (4π² m_k)^{ε'}.
bool gap_condition(const SpectrumTable& table, Norm m_k, const SPrimeParams& params);

struct CoeffViolation {
  LatticeVector xi;
  LatticeVector zeta;
  Norm shifted_norm = 0;
  double distance = 0.0;  // physical distance to [n_k, n_{k+1}]
};

struct CoeffCheck {
  bool ok = true;
  std::size_t annulus_size = 0;
  std::size_t shift_count = 0;
  double min_distance = 0.0;  // over all tested (ξ, ζ); +inf when vacuous
  std::optional<CoeffViolation> first_violation;
};

/// Exhaustive check that every ξ in A(m_k, L_0) and every short ζ ≠ 0 keep
/// 4π²|ξ+ζ|² at distance ≥ L_0/c_coeff from [4π²m_k, 4π²m_{k+1}].
CoeffCheck check_coeff_condition(const SpectrumTable& table, Norm m_k, const SPrimeParams& params);
bool coeff_condition(const SpectrumTable& table, Norm m_k, const SPrimeParams& params);

/// Physical distance from 4π²·shifted to the closed interval [4π²m_k, 4π²m_next].
double interval_distance(Norm shifted, Norm m_k, Norm m_next);

struct WindowRow {
  Norm m_k = 0;
  bool gap_ok = false;
  bool coeff_ok = false;
  bool accepted() const { return gap_ok && coeff_ok; }
};

struct SPrimeWindow {
  SPrimeParams params;
  int dim = 2;
  Norm m_lo = 0;
  Norm m_hi = 0;
  std::vector<WindowRow> rows;
  std::vector<Norm> accepted;
  double density = 0.0;
  bool heuristic = false;  // d = 3 windows use the planar conditions unchanged
};

/// Scans S ∩ [m_lo, m_hi]. Every member needs both table neighbours.
SPrimeWindow build_window(const SpectrumTable& table, Norm m_lo, Norm m_hi,
                          const SPrimeParams& params);

void write_window_csv(const SPrimeWindow& w, std::ostream& out);
nlohmann::json window_summary(const SPrimeWindow& w);

/// First member ≥ m_target that passes both conditions and whose annulus
/// covers the closed interval [m_k, m_{k+1}] (needed for the remainder bound).
std::optional<Norm> select_interval(const SpectrumTable& table, Norm m_target,
                                    const SPrimeParams& params, Norm search_limit = 0);

/// Whether A(m_k, L_0) contains the whole shell m_{k+1}.
bool annulus_covers_interval(Norm m_k, Norm m_next, double L0);

}  // namespace toruslab
