#include "toruslab/scaling.hpp"

#include <cmath>
#include <numeric>

#include "toruslab/error.hpp"

namespace toruslab {

Rational::Rational(std::int64_t num, std::int64_t den) {
  require(den != 0, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g ? num / g : 0;
  den_ = g ? den / g : 1;
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

namespace {

std::int64_t checked(__int128 v) {
  if (v > INT64_MAX || v < INT64_MIN) fail(ErrorKind::Numeric, "rational overflow");
  return static_cast<std::int64_t>(v);
}

Rational make(__int128 num, __int128 den) {
  // Reduce in 128 bits before narrowing.
  __int128 a = num < 0 ? -num : num, b = den < 0 ? -den : den;
  while (b) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(checked(num), checked(den));
}

}  // namespace

Rational operator+(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
              static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num_, b.den_); }

Rational operator*(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  require(b.num_ != 0, "rational division by zero");
  return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
}

bool operator<(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
}

double scaling_map(double E, double L) {
  require(E > 0.0 && L > 0.0, "scaling needs E > 0 and L > 0");
  return E * L * L;
}

double energy_from_lambda(double lambda, double L) {
  require(lambda > 0.0 && L > 0.0, "scaling needs lambda > 0 and L > 0");
  return lambda / (L * L);
}

double side_from_lambda(double lambda, double E) {
  require(lambda > 0.0 && E > 0.0, "scaling needs lambda > 0 and E > 0");
  return std::sqrt(lambda / E);
}

Threshold threshold_arithmetic(double E, double rho, double gamma_d, int d, double eps) {
  require(d == 2 || d == 3, "dimension must be 2 or 3");
  require(E > 0.0 && rho > 0.0, "threshold needs E > 0 and rho > 0");
  require(std::isfinite(gamma_d) && std::isfinite(eps), "exponents must be finite");
  const double den = 3.0 * d + 4.0 * gamma_d - eps;
  require(den > 0.0, "threshold denominator 3d + 4gamma - eps must be positive");
  Threshold t;
  t.alpha = (2.0 * gamma_d - eps) / den;
  t.beta = 1.0 / den;
  t.L_max = std::pow(E, t.alpha) * std::pow(rho, -t.beta);
  return t;
}

RationalThreshold threshold_exponents(const Rational& gamma_d, int d, const Rational& eps) {
  require(d == 2 || d == 3, "dimension must be 2 or 3");
  const Rational den = Rational(3 * d) + Rational(4) * gamma_d - eps;
  require(Rational(0) < den, "threshold denominator 3d + 4gamma - eps must be positive");
  return {(Rational(2) * gamma_d - eps) / den, Rational(1) / den};
}

Rational consistency_gamma2(const Rational& theta) {
  const Rational delta = Rational(1, 2) - theta;
  return delta - theta / Rational(2);
}

double consistency_gamma2(double theta) {
  const double delta = 0.5 - theta;
  return delta - theta / 2.0;
}

}  // namespace toruslab
