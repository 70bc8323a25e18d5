#pragma once

// N point scatterers on the torus: the spectral matrix M_λ, its roots in a
// gap (n_k, n_{k+1}) of the unperturbed spectrum, and eigenfunction
// coefficients.
//
// With S_m(k, j) = Σ_{|ξ|²=m} cos(2π<ξ, x_k - x_j>) and n = 4π²m,
//
//   A(λ) = Σ_m S_m (1 + λn) / ((n - λ)(n² + 1)),    B = Σ_m S_m / (n² + 1),
//
// both real symmetric. The regularized pairs are (G_λ - G_{±i})(x_k, x_j) =
// A ∓ iB, so M_λ = (A - iB) + (A + iB)·conj(U). For U = e^{iθ}·Id this is
// (1 + e^{-iθ})·(A + tan(θ/2)·B), a real symmetric pencil increasing in λ.

#include <complex>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "toruslab/greens.hpp"
#include "toruslab/lattice.hpp"

namespace toruslab {

class ExtensionParameter {
 public:
  ExtensionParameter() = default;

  static ExtensionParameter diagonal(std::vector<double> phases);
  static ExtensionParameter scalar(int n, double theta);
  static ExtensionParameter from_matrix(Eigen::MatrixXcd u);

  int size() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  const std::optional<std::vector<double>>& phases() const { return phases_; }

  /// θ when U = e^{iθ}·Id (within 1e-14), θ ∈ (-π, π].
  std::optional<double> scalar_phase() const;

  /// ‖U*U - Id‖ ≤ 1e-10 and -1 not in the spectrum; throws otherwise.
  void validate() const;

 private:
  Eigen::MatrixXcd matrix_;
  std::optional<std::vector<double>> phases_;
};

struct ScattererConfig {
  int dim = 2;
  std::vector<Point> positions;
  ExtensionParameter u;

  std::size_t size() const { return positions.size(); }
  void validate() const;
};

/// {"phases": [...]}, {"phase": θ} (θ·Id of size n) or {"matrix": [[[re, im], ...], ...]}.
ExtensionParameter extension_from_json(const nlohmann::json& u, int n);
nlohmann::json extension_to_json(const ExtensionParameter& u);

void to_json(nlohmann::json& j, const ScattererConfig& c);
void from_json(const nlohmann::json& j, ScattererConfig& c);

/// Smallest torus distance between two scatterers.
double min_pair_distance(const std::vector<Point>& positions, int dim);

/// Reference assembly entry by entry through regularized_pair.
Eigen::MatrixXcd build_matrix(const ScattererConfig& config, SpectralParameter lam,
                              const TruncationPolicy& policy);
Eigen::MatrixXcd build_matrix(const ScattererConfig& config, const LatticeBall& ball,
                              SpectralParameter lam);

/// M from its real parts: (A - iB) + (A + iB)·conj(U).
Eigen::MatrixXcd assemble_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXcd& U);

struct SecularValue {
  std::complex<double> det;
  double smin = 0.0;
  double smax = 0.0;
  double sigma2 = 0.0;  // second smallest singular value (smax when N = 1)
};

SecularValue secular_value(const Eigen::MatrixXcd& M);
SecularValue secular_value(const ScattererConfig& config, SpectralParameter lam,
                           const TruncationPolicy& policy);

/// Precomputed secular data for one configuration and one spectral gap.
///
/// Shells far from the gap enter through a Taylor expansion of 1/(n - λ)
/// about the gap midpoint, so each evaluation costs O(near shells + order).
class SecularSystem {
 public:
  SecularSystem(ScattererConfig config, std::shared_ptr<const LatticeBall> ball,
                GapTriple interval);

  const ScattererConfig& config() const { return config_; }
  const GapTriple& interval() const { return interval_; }
  const LatticeBall& ball() const { return *ball_; }
  std::size_t size() const { return config_.size(); }

  /// A(λ) for lambda_norm in [m_k, m_{k+1}] (poles excluded).
  Eigen::MatrixXd regular_part(double lambda_norm) const;
  const Eigen::MatrixXd& deficiency_part() const { return B_; }
  /// dA/dλ in physical units, positive semidefinite.
  Eigen::MatrixXd regular_derivative(double lambda_norm) const;

  Eigen::MatrixXcd matrix(double lambda_norm) const;
  SecularValue value(double lambda_norm) const;

  /// Σ_m r_m (|a_m(λ)| + b_m): the size of the secular sum before cancellation,
  /// used to judge residuals on an absolute scale.
  double magnitude(double lambda_norm) const;

  /// Shell sums for one pair; S_m(k, j) per shell of the ball.
  double shell_sum(std::size_t shell, std::size_t k, std::size_t j) const;

 private:
  std::size_t pair_index(std::size_t k, std::size_t j) const;

  ScattererConfig config_;
  std::shared_ptr<const LatticeBall> ball_;
  GapTriple interval_;
  std::size_t pairs_ = 0;
  std::vector<double> sums_;  // [shell][pair]
  Eigen::MatrixXd B_;
  std::vector<std::size_t> near_;  // shells treated exactly
  double center_ = 0.0;            // expansion point, normalized
  std::vector<std::vector<double>> moments_;  // [order][pair]
};

enum class RootMethod { Auto, SminScan, Inertia };

const char* to_string(RootMethod m);
RootMethod root_method_from_string(const std::string& s);

struct SolverOptions {
  int grid = 256;
  double tol = 1e-8;               // relative residual and bracket tolerance
  RootMethod method = RootMethod::Auto;
  double degeneracy_ratio = 1e3;   // flag when sigma2 < ratio · smin
};

struct NewEigenvalue {
  double lambda_norm = 0.0;
  GapTriple interval;
  Eigen::VectorXcd v;  // null vector, M v = 0
  Eigen::VectorXcd d;  // eigenfunction coefficients, Σ|d_j|² = 1
  double residual = 0.0;       // smin / (2 · magnitude) at the root
  double bracket_width = 0.0;  // normalized units
  bool near_degenerate = false;
};

struct RootSearch {
  std::vector<NewEigenvalue> roots;
  std::vector<double> unresolved;  // local minima of smin that did not converge to a root
  RootMethod method = RootMethod::Auto;
  int evaluations = 0;
};

RootSearch find_new_eigenvalues(const SecularSystem& system, const SolverOptions& options = {});
RootSearch find_new_eigenvalues(const ScattererConfig& config, const GapTriple& interval,
                                const TruncationPolicy& policy, const SolverOptions& options = {});

/// (Id + U) v rescaled to unit length; throws Degenerate when it vanishes.
Eigen::VectorXcd coefficient_vector(const Eigen::MatrixXcd& U, const Eigen::VectorXcd& v);

/// Coefficients of the eigenfunction Σ_j d_j G_λ(·, x_j) for a null vector w.
Eigen::VectorXcd eigenfunction_coefficients(const ExtensionParameter& u, const Eigen::VectorXcd& w);

}  // namespace toruslab
