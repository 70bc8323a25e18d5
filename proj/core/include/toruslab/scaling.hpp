#pragma once

// Exponent bookkeeping: energy scaling on a torus of side L and the
// localization-length threshold E^α ρ^{-β}.

#include <cstdint>
#include <string>

namespace toruslab {

/// Exact rational with normalized sign and lowest terms.
class Rational {
 public:
  Rational(std::int64_t num = 0, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend bool operator<(const Rational& a, const Rational& b);

 private:
  std::int64_t num_;
  std::int64_t den_;
};

/// λ = E L².
double scaling_map(double E, double L);
/// E = λ / L².
double energy_from_lambda(double lambda, double L);
/// L = sqrt(λ / E).
double side_from_lambda(double lambda, double E);

struct Threshold {
  double alpha = 0.0;
  double beta = 0.0;
  double L_max = 0.0;  // E^α ρ^{-β}, also the localization-length lower bound
};

/// α_d = (2γ - ε)/(3d + 4γ - ε), β_d = 1/(3d + 4γ - ε).
Threshold threshold_arithmetic(double E, double rho, double gamma_d, int d, double eps);

/// Exact α_d, β_d for rational inputs.
struct RationalThreshold {
  Rational alpha;
  Rational beta;
};
RationalThreshold threshold_exponents(const Rational& gamma_d, int d, const Rational& eps = Rational(0));

/// δ - θ/2 at δ = 1/2 - θ, the best equidistribution exponent for circle-law exponent θ.
Rational consistency_gamma2(const Rational& theta);
double consistency_gamma2(double theta);

inline const Rational kGamma2(17, 832);
inline const Rational kGamma3(1, 12);

}  // namespace toruslab
