#include "toruslab/greens.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "toruslab/error.hpp"

namespace toruslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// exp(2πi t a) for t in [-M, M], stored at index t + M.
std::vector<std::complex<double>> phase_table(double a, std::int32_t M) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(2 * M + 1));
  for (std::int32_t t = -M; t <= M; ++t) {
    const double x = static_cast<double>(t) * a;
    const double frac = x - std::nearbyint(x);
    out[static_cast<std::size_t>(t + M)] = std::polar(1.0, kTwoPi * frac);
  }
  return out;
}

struct PhaseTables {
  std::int32_t M;
  int dim;
  std::vector<std::complex<double>> axis[3];

  PhaseTables(const Point& delta, std::int32_t max_coord, int d) : M(max_coord), dim(d) {
    for (int i = 0; i < d; ++i) axis[i] = phase_table(delta[i], M);
  }

  std::complex<double> operator()(const LatticeVector& xi) const {
    auto e = axis[0][static_cast<std::size_t>(xi.coords[0] + M)] *
             axis[1][static_cast<std::size_t>(xi.coords[1] + M)];
    if (dim == 3) e *= axis[2][static_cast<std::size_t>(xi.coords[2] + M)];
    return e;
  }
};

void check_point(const Point& p, int dim) {
  for (int i = 0; i < dim; ++i) {
    require(std::isfinite(p[i]), "point coordinates must be finite");
  }
}

void check_off_spectrum(const LatticeBall& ball, SpectralParameter lam) {
  require(std::isfinite(lam.lambda_norm), "spectral parameter must be finite");
  const double r = std::round(lam.lambda_norm);
  if (r == lam.lambda_norm && r >= 0 && ball.shell_index(static_cast<Norm>(r))) {
    fail(ErrorKind::OnSpectrum, "spectral parameter sits on the eigenvalue of norm " +
                                    std::to_string(static_cast<Norm>(r)));
  }
}

// (4π²m - λ) evaluated from the normalized difference.
double pole_distance(Norm m, SpectralParameter lam) {
  return kFourPiSq * (static_cast<double>(m) - lam.lambda_norm);
}

}  // namespace

double tail_constant(int dim) {
  check_dimension(dim);
  constexpr double pi = std::numbers::pi;
  if (dim == 2) {
    const double s = std::sqrt(2.0) / 2.0;
    return 2.0 * pi + 8.0 * pi * s / 3.0 + pi * s * s;
  }
  const double s = std::sqrt(3.0) / 2.0;
  return 16.0 * pi / 3.0 * (1.0 + 1.5 * s + s * s + s * s * s / 4.0);
}

double tail_estimate(Norm radius_sq, SpectralParameter lam, int dim) {
  check_dimension(dim);
  if (radius_sq < 1 || static_cast<double>(radius_sq) <= 2.0 * lam.lambda_norm) {
    fail(ErrorKind::Validation, "tail bound needs radius_sq > 2*lambda_norm and radius_sq >= 1");
  }
  const double lambda = lam.physical();
  const double pre = 2.0 * std::sqrt(lambda * lambda + 1.0) / (kFourPiSq * kFourPiSq);
  const double R = static_cast<double>(radius_sq);
  const double decay = dim == 2 ? 1.0 / R : 1.0 / std::sqrt(R);
  return pre * tail_constant(dim) * decay;
}

double tail_estimate(const TruncationPolicy& policy, SpectralParameter lam, int dim) {
  return tail_estimate(resolve(policy, lam, dim).radius_sq, lam, dim);
}

ResolvedTruncation resolve(const TruncationPolicy& policy, SpectralParameter lam, int dim) {
  check_dimension(dim);
  require(std::isfinite(lam.lambda_norm), "spectral parameter must be finite");
  ResolvedTruncation out;
  const auto floor_r = static_cast<Norm>(std::floor(2.0 * std::max(lam.lambda_norm, 0.0))) + 1;
  if (policy.mode == TruncationMode::ByRadius) {
    require(static_cast<double>(policy.radius_sq) >= lam.lambda_norm + 1.0,
            "truncation radius_sq must be at least lambda_norm + 1");
    out.radius_sq = policy.radius_sq;
    out.tail_bound = policy.radius_sq >= floor_r ? tail_estimate(policy.radius_sq, lam, dim)
                                                 : std::numeric_limits<double>::infinity();
    return out;
  }
  require(policy.tol > 0.0 && std::isfinite(policy.tol), "truncation tolerance must be positive");
  require(policy.max_radius_sq >= 1, "max_radius_sq must be positive");
  const double unit = tail_estimate(Norm{1}, SpectralParameter{0.0}, dim) *
                      std::sqrt(lam.physical() * lam.physical() + 1.0);
  const double ratio = unit / policy.tol;
  const double want = dim == 2 ? ratio : ratio * ratio;
  Norm R = floor_r;
  if (want > static_cast<double>(policy.max_radius_sq)) {
    R = std::max(R, policy.max_radius_sq);
  } else {
    R = std::max(R, static_cast<Norm>(std::ceil(want)));
  }
  // Guard against rounding in the inversion.
  while (R < policy.max_radius_sq && tail_estimate(R, lam, dim) > policy.tol) ++R;
  out.radius_sq = R;
  out.tail_bound = tail_estimate(R, lam, dim);
  out.clamped = out.tail_bound > policy.tol;
  return out;
}

double coefficient(Norm m, SpectralParameter lam) {
  if (static_cast<double>(m) == lam.lambda_norm) {
    fail(ErrorKind::OnSpectrum, "coefficient pole at norm " + std::to_string(m));
  }
  return 1.0 / pole_distance(m, lam);
}

double coefficient(const LatticeVector& xi, SpectralParameter lam) {
  return coefficient(xi.norm_sq(), lam);
}

Point torus_delta(const Point& x, const Point& y, int dim) {
  Point d{};
  for (int i = 0; i < dim; ++i) {
    double v = x[i] - y[i];
    v -= std::floor(v + 0.5);
    d[i] = v;
  }
  return d;
}

std::vector<double> shell_cosine_sums(const LatticeBall& ball, const Point& delta) {
  return shell_cosine_sums(ball, std::span<const Point>(&delta, 1));
}

std::vector<double> shell_cosine_sums(const LatticeBall& ball, std::span<const Point> deltas) {
  const std::size_t K = deltas.size();
  const auto shells = ball.shells();
  const auto points = ball.points();
  std::vector<double> out(shells.size() * K, 0.0);
  if (K == 0) return out;
  std::vector<PhaseTables> tables;
  tables.reserve(K);
  for (const auto& d : deltas) tables.emplace_back(torus_delta(d, Point{}, ball.dim()), ball.max_coord(), ball.dim());
  std::vector<double> acc(K);
  for (std::size_t s = 0; s < shells.size(); ++s) {
    const auto& sh = shells[s];
    double* row = out.data() + s * K;
    if (sh.m == 0) {
      for (std::size_t k = 0; k < K; ++k) row[k] = 1.0;
      continue;
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    const std::uint32_t half = sh.size() / 2;
    for (std::uint32_t i = 0; i < half; ++i) {
      const auto& xi = points[sh.begin + i];
      for (std::size_t k = 0; k < K; ++k) acc[k] += tables[k](xi).real();
    }
    for (std::size_t k = 0; k < K; ++k) row[k] = 2.0 * acc[k];
  }
  return out;
}

GreenValue green_sum(const LatticeBall& ball, const Point& x, const Point& y,
                     SpectralParameter lam) {
  check_point(x, ball.dim());
  check_point(y, ball.dim());
  check_off_spectrum(ball, lam);
  require(static_cast<double>(ball.radius_sq()) >= lam.lambda_norm + 1.0,
          "truncation radius below the spectral parameter");
  const Point delta = torus_delta(x, y, ball.dim());
  const auto sums = shell_cosine_sums(ball, delta);
  const PhaseTables table(delta, ball.max_coord(), ball.dim());
  CompensatedSum re, im, abs;
  for (std::size_t s = 0; s < ball.shells().size(); ++s) {
    const auto& sh = ball.shells()[s];
    const double c = 1.0 / pole_distance(sh.m, lam);
    re.add(c * sums[s]);
    abs.add(std::abs(c) * sh.size());
    double shell_im = 0.0;
    for (std::uint32_t i = sh.begin; i < sh.end; ++i) shell_im += table(ball.points()[i]).imag();
    im.add(c * shell_im);
  }
  GreenValue out;
  out.value = re.value();
  out.imag_residual = std::abs(im.value());
  out.abs_sum = abs.value();
  out.radius_sq = ball.radius_sq();
  out.tail_bound = static_cast<double>(ball.radius_sq()) > 2.0 * lam.lambda_norm
                       ? tail_estimate(ball.radius_sq(), lam, ball.dim())
                       : std::numeric_limits<double>::infinity();
  return out;
}

GreenValue green_sum(const Point& x, const Point& y, SpectralParameter lam,
                     const TruncationPolicy& policy, int dim) {
  const auto res = resolve(policy, lam, dim);
  const LatticeBall ball(dim, res.radius_sq);
  return green_sum(ball, x, y, lam);
}

RegularizedValue regularized_pair(const LatticeBall& ball, const Point& x, const Point& y,
                                  SpectralParameter lam, DeficiencySign sign) {
  check_point(x, ball.dim());
  check_point(y, ball.dim());
  check_off_spectrum(ball, lam);
  const auto sums = shell_cosine_sums(ball, torus_delta(x, y, ball.dim()));
  const double lambda = lam.physical();
  CompensatedSum re, im;
  for (std::size_t s = 0; s < ball.shells().size(); ++s) {
    const double n = physical(ball.shells()[s].m);
    const double q = n * n + 1.0;
    // c_λ - Re (n ∓ i)^{-1} = (1 + λn) / ((n - λ)(n² + 1))
    re.add(sums[s] * (1.0 + lambda * n) / (pole_distance(ball.shells()[s].m, lam) * q));
    im.add(sums[s] / q);
  }
  RegularizedValue out;
  const double b = im.value();
  out.value = {re.value(), sign == DeficiencySign::Plus ? -b : b};
  out.radius_sq = ball.radius_sq();
  out.tail_bound = static_cast<double>(ball.radius_sq()) > 2.0 * lam.lambda_norm && ball.radius_sq() >= 1
                       ? tail_estimate(ball.radius_sq(), lam, ball.dim())
                       : std::numeric_limits<double>::infinity();
  return out;
}

RegularizedValue regularized_pair(const Point& x, const Point& y, SpectralParameter lam,
                                  DeficiencySign sign, const TruncationPolicy& policy, int dim) {
  const auto res = resolve(policy, lam, dim);
  const LatticeBall ball(dim, res.radius_sq);
  return regularized_pair(ball, x, y, lam, sign);
}

}  // namespace toruslab
