#pragma once

// Torus Green's functions as truncated Fourier lattice sums.
//
//   G_λ(x, y) = Σ_ξ c_λ(ξ) e_ξ(x - y),   c_λ(ξ) = (4π²|ξ|² - λ)^{-1},
//
// with e_ξ(x) = exp(2πi<ξ,x>). The raw sum is only conditionally convergent
// for d ≥ 2; the regularized differences G_λ - G_{±i} decay like |ξ|^{-4}.

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "toruslab/lattice.hpp"

namespace toruslab {

using Point = std::array<double, 3>;

struct SpectralParameter {
  double lambda_norm = 0.0;  // λ / 4π²

  static SpectralParameter normalized(double lambda_norm) { return {lambda_norm}; }
  static SpectralParameter from_physical(double lambda) { return {lambda / kFourPiSq}; }
  double physical() const { return kFourPiSq * lambda_norm; }
};

enum class TruncationMode { ByRadius, ByTolerance };

struct TruncationPolicy {
  TruncationMode mode = TruncationMode::ByTolerance;
  Norm radius_sq = 0;   // by-radius: include |ξ|² ≤ radius_sq
  double tol = 1e-8;    // by-tolerance: target for the omitted-tail bound
  Norm max_radius_sq = 1'000'000;  // by-tolerance never exceeds this cutoff

  static TruncationPolicy by_radius(Norm r) { return {TruncationMode::ByRadius, r, 1e-8, r}; }
  static TruncationPolicy by_tolerance(double tol, Norm cap = 1'000'000) {
    return {TruncationMode::ByTolerance, 0, tol, cap};
  }
};

struct ResolvedTruncation {
  Norm radius_sq = 0;
  double tail_bound = 0.0;  // bound on the regularized tail at radius_sq
  bool clamped = false;     // tolerance not reachable below max_radius_sq
};

/// Cutoff implied by a policy at a spectral parameter.
ResolvedTruncation resolve(const TruncationPolicy& policy, SpectralParameter lam, int dim);

/// (4π²|ξ|² - λ)^{-1}; throws OnSpectrum at a pole.
double coefficient(const LatticeVector& xi, SpectralParameter lam);
double coefficient(Norm m, SpectralParameter lam);

/// Upper bound on Σ_{|ξ|²>R} |c_λ(ξ) - (4π²|ξ|² ∓ i)^{-1}|.
///
/// For 4π²|ξ|² ≥ 2λ the summand is at most 2√(λ²+1)/(4π²|ξ|²)², and
/// Σ_{|ξ|²>R} |ξ|^{-4} ≤ K_d R^{-(4-d)/2} by comparing each lattice point with
/// the unit cube it anchors. Needs R > 2·lambda_norm and R ≥ 1.
double tail_estimate(Norm radius_sq, SpectralParameter lam, int dim);
double tail_estimate(const TruncationPolicy& policy, SpectralParameter lam, int dim);

/// Lattice constant K_d in the tail bound above.
double tail_constant(int dim);

struct GreenValue {
  double value = 0.0;
  double imag_residual = 0.0;  // |Im| of the unpaired assembly, for diagnostics
  double abs_sum = 0.0;        // Σ |c_λ(ξ)| over the truncation set
  double tail_bound = 0.0;
  Norm radius_sq = 0;
};

/// Truncated Σ_{|ξ|²≤R} c_λ(ξ) e_ξ(x - y). The raw sum converges only
/// conditionally, so tail_bound is a heuristic for it (it is rigorous for the
/// regularized sum).
GreenValue green_sum(const Point& x, const Point& y, SpectralParameter lam,
                     const TruncationPolicy& policy, int dim);
GreenValue green_sum(const LatticeBall& ball, const Point& x, const Point& y,
                     SpectralParameter lam);

enum class DeficiencySign { Plus, Minus };  // subtract G_{+i} or G_{-i}

struct RegularizedValue {
  std::complex<double> value;
  double tail_bound = 0.0;
  Norm radius_sq = 0;
};

/// Truncated Σ_ξ [c_λ(ξ) - (4π²|ξ|² ∓ i)^{-1}] e_ξ(x - y).
RegularizedValue regularized_pair(const Point& x, const Point& y, SpectralParameter lam,
                                  DeficiencySign sign, const TruncationPolicy& policy, int dim);
RegularizedValue regularized_pair(const LatticeBall& ball, const Point& x, const Point& y,
                                  SpectralParameter lam, DeficiencySign sign);

/// Per-shell cosine sums S_m(Δ) = Σ_{|ξ|²=m} cos(2π<ξ,Δ>) for every shell of
/// a ball, evaluated with ±ξ pairing so the result is real by construction.
std::vector<double> shell_cosine_sums(const LatticeBall& ball, const Point& delta);

/// Same for several displacements at once; result is laid out [shell][k].
std::vector<double> shell_cosine_sums(const LatticeBall& ball, std::span<const Point> deltas);

/// Torus displacement x - y reduced to [-1/2, 1/2)^d.
Point torus_delta(const Point& x, const Point& y, int dim);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace toruslab
