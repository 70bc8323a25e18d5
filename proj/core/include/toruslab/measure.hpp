#pragma once

// Eigenfunction Fourier data and the functionals built from it.
//
// The eigenfunction G(x) = Σ_j d_j G_λ(x, x_j) has Fourier coefficients
// D(ξ) = c_λ(ξ)·d(ξ) with d(ξ) = Σ_j d_j e_ξ(-x_j).

#include <complex>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "toruslab/greens.hpp"
#include "toruslab/lattice.hpp"

namespace toruslab {

/// Annulus A(m_k, L_0) attached to the gap (m_{k-1}, m_k, m_{k+1}).
struct Window {
  GapTriple interval;
  double L0 = 0.0;
};

class FourierField {
 public:
  /// D(ξ) = c_λ(ξ) Σ_j d_j e_ξ(-x_j) on every point of the ball.
  static FourierField assemble(const Eigen::VectorXcd& d, const std::vector<Point>& positions,
                               SpectralParameter lam, std::shared_ptr<const LatticeBall> ball);
  /// Field with prescribed phase sums d(ξ), one per ball point.
  static FourierField from_phase_sums(std::vector<std::complex<double>> phase_sums,
                                      SpectralParameter lam,
                                      std::shared_ptr<const LatticeBall> ball);

  const LatticeBall& ball() const { return *ball_; }
  SpectralParameter lam() const { return lam_; }
  std::span<const std::complex<double>> values() const { return values_; }
  std::span<const std::complex<double>> phase_sums() const { return phase_sums_; }
  double norm_sq() const { return norm_sq_; }

  /// D(ξ), zero outside the truncation set.
  std::complex<double> value_at(const LatticeVector& xi) const;
  /// d(ξ) for ξ in the truncation set; throws OutOfRange otherwise.
  std::complex<double> phase_sum_at(const LatticeVector& xi) const;

 private:
  FourierField() = default;
  void finish();

  std::shared_ptr<const LatticeBall> ball_;
  SpectralParameter lam_;
  std::vector<std::complex<double>> phase_sums_;
  std::vector<std::complex<double>> values_;
  double norm_sq_ = 0.0;
};

FourierField assemble_field(const Eigen::VectorXcd& d, const std::vector<Point>& positions,
                            int dim, SpectralParameter lam, const TruncationPolicy& policy);

/// Trigonometric polynomial a = Σ_ζ â(ζ) e_ζ.
class Observable {
 public:
  Observable() = default;
  Observable(int dim, std::map<LatticeVector, std::complex<double>> coeffs);

  static Observable constant(int dim, double value = 1.0);
  /// cos(2π x_axis).
  static Observable cosine(int dim, int axis);

  int dim() const { return dim_; }
  const std::map<LatticeVector, std::complex<double>>& coeffs() const { return coeffs_; }
  double l1_norm() const { return l1_; }
  std::complex<double> mean() const;  // â(0)
  bool real_valued(double tol = 1e-14) const;
  /// Σ_{ζ≠0} |â(ζ)|.
  double l1_nonzero() const;

  std::complex<double> operator()(const Point& x) const;

 private:
  int dim_ = 2;
  std::map<LatticeVector, std::complex<double>> coeffs_;
  double l1_ = 0.0;
};

void to_json(nlohmann::json& j, const Observable& a);
Observable observable_from_json(const nlohmann::json& j, int dim);

/// Σ_ξ D(ξ) conj(D(ξ+ζ)); the ζ = 0 term is the stored norm_sq.
std::complex<double> correlation(const FourierField& field, const LatticeVector& zeta);

/// Σ_ζ â(ζ) Σ_ξ D(ξ) conj(D(ξ+ζ)) / norm_sq.
std::complex<double> pair_with_observable(const FourierField& field, const Observable& a);

struct Split {
  double annulus_norm_sq = 0.0;
  double remainder_norm_sq = 0.0;
};

Split split_annulus(const FourierField& field, const Window& window);

/// Two-branch weight: c_{n_k}(η)² below m_k, c_{n_{k+1}}(η)² above m_{k+1}, zero
/// inside the closed gap.
double branch_weight(Norm eta_norm, const GapTriple& interval);

double functional_A(const FourierField& field, const LatticeVector& zeta, const Window& window);
double functional_B(const FourierField& field, const Window& window);
double functional_C(const FourierField& field, const Window& window);

/// ξ_0: lexicographically first vector of norm m_k.
LatticeVector xi_zero(int dim, Norm m_k);

struct SigmaValue {
  double value = 0.0;
  double bound = 0.0;  // #A(m_k, L_0) / L_0²
  std::size_t annulus_size = 0;
};

SigmaValue sigma_sum(int dim, const Window& window, const LatticeVector& zeta);

/// Σ over the complement of the annulus in the ball with unit weights.
double complement_sum(const LatticeBall& ball, const Window& window);

struct EquidistributionError {
  double err = 0.0;
  double envelope = 0.0;
  double ratio() const { return envelope > 0.0 ? err / envelope : 0.0; }
};

EquidistributionError equidistribution_error(const FourierField& field, const Observable& a,
                                             double gamma_d, double eps, std::size_t n_scatterers);

struct FunctionalReport {
  std::map<LatticeVector, double> A_vals;
  double A_weighted = 0.0;  // Σ_{ζ≠0} |â(ζ)| 𝒜_ζ
  double B_val = 0.0;
  double C_val = 0.0;
  std::map<LatticeVector, double> sigma;
  Split split;
};

FunctionalReport evaluate_functionals(const FourierField& field, const Window& window,
                                      const Observable& a);

nlohmann::json to_json(const FunctionalReport& r);

}  // namespace toruslab
