#include "toruslab/scatterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "toruslab/error.hpp"

namespace toruslab {

namespace {

constexpr int kTaylorOrder = 16;
constexpr double kNearFactor = 8.0;

std::complex<double> unit_phase(double theta) { return std::polar(1.0, theta); }

}  // namespace

// ---------------------------------------------------------------------------
// ExtensionParameter

ExtensionParameter ExtensionParameter::diagonal(std::vector<double> phases) {
  require(!phases.empty(), "extension parameter needs at least one phase");
  ExtensionParameter u;
  const auto n = static_cast<Eigen::Index>(phases.size());
  u.matrix_ = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(std::isfinite(phases[static_cast<std::size_t>(i)]), "phases must be finite");
    u.matrix_(i, i) = unit_phase(phases[static_cast<std::size_t>(i)]);
  }
  u.phases_ = std::move(phases);
  return u;
}

ExtensionParameter ExtensionParameter::scalar(int n, double theta) {
  require(n >= 1, "extension parameter size must be positive");
  return diagonal(std::vector<double>(static_cast<std::size_t>(n), theta));
}

ExtensionParameter ExtensionParameter::from_matrix(Eigen::MatrixXcd u) {
  require(u.rows() == u.cols() && u.rows() >= 1, "extension matrix must be square");
  require(u.allFinite(), "extension matrix must be finite");
  ExtensionParameter out;
  out.matrix_ = std::move(u);
  return out;
}

std::optional<double> ExtensionParameter::scalar_phase() const {
  if (matrix_.size() == 0) return std::nullopt;
  const auto u0 = matrix_(0, 0);
  const auto diff = matrix_ - u0 * Eigen::MatrixXcd::Identity(matrix_.rows(), matrix_.cols());
  if (diff.cwiseAbs().maxCoeff() > 1e-14) return std::nullopt;
  return std::arg(u0);
}

void ExtensionParameter::validate() const {
  require(matrix_.size() > 0, "extension parameter is empty");
  const auto n = matrix_.rows();
  const double defect =
      (matrix_.adjoint() * matrix_ - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  require(defect <= 1e-10, "extension matrix is not unitary (defect " + std::to_string(defect) + ")");
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(matrix_, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(es.eigenvalues()(i) + 1.0) <= 1e-12) {
      fail(ErrorKind::Degenerate, "extension parameter has eigenvalue -1");
    }
  }
}

// ---------------------------------------------------------------------------
// ScattererConfig

double min_pair_distance(const std::vector<Point>& positions, int dim) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < positions.size(); ++a) {
    for (std::size_t b = a + 1; b < positions.size(); ++b) {
      const auto d = torus_delta(positions[a], positions[b], dim);
      double s = 0.0;
      for (int i = 0; i < dim; ++i) s += d[i] * d[i];
      best = std::min(best, std::sqrt(s));
    }
  }
  return best;
}

void ScattererConfig::validate() const {
  check_dimension(dim);
  require(!positions.empty(), "configuration needs at least one scatterer");
  for (const auto& p : positions) {
    for (int i = 0; i < dim; ++i) {
      require(std::isfinite(p[i]) && p[i] >= 0.0 && p[i] < 1.0,
              "scatterer positions must lie in [0, 1)^d");
    }
    for (int i = dim; i < 3; ++i) require(p[i] == 0.0, "unused coordinates must be zero");
  }
  require(!(min_pair_distance(positions, dim) <= 0.0), "scatterer positions must be distinct");
  require(u.size() == static_cast<int>(positions.size()),
          "extension parameter size must match the number of scatterers");
  u.validate();
}

nlohmann::json extension_to_json(const ExtensionParameter& u) {
  if (u.phases()) return {{"phases", *u.phases()}};
  auto m = nlohmann::json::array();
  for (Eigen::Index r = 0; r < u.matrix().rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < u.matrix().cols(); ++k) {
      row.push_back({u.matrix()(r, k).real(), u.matrix()(r, k).imag()});
    }
    m.push_back(row);
  }
  return {{"matrix", m}};
}

ExtensionParameter extension_from_json(const nlohmann::json& u, int n) {
  require(u.is_object(), "u must be an object");
  if (u.contains("phases")) return ExtensionParameter::diagonal(u.at("phases").get<std::vector<double>>());
  if (u.contains("phase")) return ExtensionParameter::scalar(n, u.at("phase").get<double>());
  if (u.contains("matrix")) {
    const auto& m = u.at("matrix");
    require(m.is_array() && !m.empty(), "extension matrix must be a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXcd U(rows, rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = m.at(static_cast<std::size_t>(r));
      require(row.is_array() && static_cast<Eigen::Index>(row.size()) == rows,
              "extension matrix must be square");
      for (Eigen::Index k = 0; k < rows; ++k) {
        const auto& e = row.at(static_cast<std::size_t>(k));
        require(e.is_array() && e.size() == 2, "matrix entries are [re, im] pairs");
        U(r, k) = {e.at(0).get<double>(), e.at(1).get<double>()};
      }
    }
    return ExtensionParameter::from_matrix(U);
  }
  fail(ErrorKind::Validation, "u must hold 'phases', 'phase' or 'matrix'");
}

void to_json(nlohmann::json& j, const ScattererConfig& c) {
  j = nlohmann::json::object();
  j["dim"] = c.dim;
  auto pos = nlohmann::json::array();
  for (const auto& p : c.positions) {
    auto row = nlohmann::json::array();
    for (int i = 0; i < c.dim; ++i) row.push_back(p[i]);
    pos.push_back(row);
  }
  j["positions"] = pos;
  j["u"] = extension_to_json(c.u);
}

void from_json(const nlohmann::json& j, ScattererConfig& c) {
  c.dim = j.at("dim").get<int>();
  check_dimension(c.dim);
  c.positions.clear();
  for (const auto& row : j.at("positions")) {
    require(row.is_array() && static_cast<int>(row.size()) == c.dim,
            "each position needs exactly dim coordinates");
    Point p{};
    for (int i = 0; i < c.dim; ++i) p[i] = row[static_cast<std::size_t>(i)].get<double>();
    c.positions.push_back(p);
  }
  c.u = extension_from_json(j.at("u"), static_cast<int>(c.positions.size()));
}

// ---------------------------------------------------------------------------
// Matrix assembly

Eigen::MatrixXcd assemble_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXcd& U) {
  const std::complex<double> I(0.0, 1.0);
  const Eigen::MatrixXcd P = A.cast<std::complex<double>>() - I * B.cast<std::complex<double>>();
  const Eigen::MatrixXcd Q = A.cast<std::complex<double>>() + I * B.cast<std::complex<double>>();
  return P + Q * U.conjugate();
}

Eigen::MatrixXcd build_matrix(const ScattererConfig& config, const LatticeBall& ball,
                              SpectralParameter lam) {
  config.validate();
  require(ball.dim() == config.dim, "ball dimension does not match the configuration");
  const auto n = static_cast<Eigen::Index>(config.size());
  Eigen::MatrixXcd P(n, n), Q(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& xk = config.positions[static_cast<std::size_t>(k)];
      const auto& xj = config.positions[static_cast<std::size_t>(j)];
      P(k, j) = regularized_pair(ball, xk, xj, lam, DeficiencySign::Plus).value;
      Q(k, j) = regularized_pair(ball, xk, xj, lam, DeficiencySign::Minus).value;
    }
  }
  return P + Q * config.u.matrix().conjugate();
}

Eigen::MatrixXcd build_matrix(const ScattererConfig& config, SpectralParameter lam,
                              const TruncationPolicy& policy) {
  const auto res = resolve(policy, lam, config.dim);
  const LatticeBall ball(config.dim, res.radius_sq);
  return build_matrix(config, ball, lam);
}

SecularValue secular_value(const Eigen::MatrixXcd& M) {
  SecularValue out;
  if (!M.allFinite()) fail(ErrorKind::Numeric, "spectral matrix has non-finite entries");
  out.det = M.determinant();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  const auto n = s.size();
  out.smax = s(0);
  out.smin = s(n - 1);
  out.sigma2 = n > 1 ? s(n - 2) : s(0);
  return out;
}

SecularValue secular_value(const ScattererConfig& config, SpectralParameter lam,
                           const TruncationPolicy& policy) {
  return secular_value(build_matrix(config, lam, policy));
}

// ---------------------------------------------------------------------------
// SecularSystem

SecularSystem::SecularSystem(ScattererConfig config, std::shared_ptr<const LatticeBall> ball,
                             GapTriple interval)
    : config_(std::move(config)), ball_(std::move(ball)), interval_(interval) {
  config_.validate();
  require(ball_ != nullptr, "secular system needs a lattice ball");
  require(ball_->dim() == config_.dim, "ball dimension does not match the configuration");
  require(interval_.prev < interval_.center && interval_.center < interval_.next,
          "gap triple must be strictly increasing");
  require(ball_->radius_sq() > interval_.next, "truncation radius must exceed m_{k+1}");
  require(ball_->shell_index(interval_.center) && ball_->shell_index(interval_.next),
          "gap endpoints must be lattice norms");

  const std::size_t N = config_.size();
  pairs_ = N * (N + 1) / 2;
  const auto shells = ball_->shells();
  sums_.assign(shells.size() * pairs_, 0.0);

  std::vector<Point> deltas;
  std::vector<std::size_t> slots;
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t j = k + 1; j < N; ++j) {
      deltas.push_back(torus_delta(config_.positions[k], config_.positions[j], config_.dim));
      slots.push_back(pair_index(k, j));
    }
  }
  const auto off = shell_cosine_sums(*ball_, deltas);
  for (std::size_t s = 0; s < shells.size(); ++s) {
    double* row = sums_.data() + s * pairs_;
    for (std::size_t k = 0; k < N; ++k) row[pair_index(k, k)] = shells[s].size();
    for (std::size_t q = 0; q < deltas.size(); ++q) row[slots[q]] = off[s * deltas.size() + q];
  }

  center_ = 0.5 * (static_cast<double>(interval_.center) + static_cast<double>(interval_.next));
  const double reach = kNearFactor * static_cast<double>(interval_.next - interval_.center);
  const double lambda0 = kFourPiSq * center_;

  std::vector<CompensatedSum> b(pairs_);
  std::vector<std::vector<CompensatedSum>> mom(kTaylorOrder + 1, std::vector<CompensatedSum>(pairs_));
  for (std::size_t s = 0; s < shells.size(); ++s) {
    const double n = physical(shells[s].m);
    const double q = n * n + 1.0;
    const double* row = sums_.data() + s * pairs_;
    for (std::size_t p = 0; p < pairs_; ++p) b[p].add(row[p] / q);
    const double gap = static_cast<double>(shells[s].m) - center_;
    if (std::abs(gap) <= reach) {
      near_.push_back(s);
      continue;
    }
    const double inv = 1.0 / (kFourPiSq * gap);  // 1/(n - λ0)
    const double head = (1.0 + lambda0 * n) * inv / q;
    for (std::size_t p = 0; p < pairs_; ++p) mom[0][p].add(row[p] * head);
    double power = inv;
    for (int o = 1; o <= kTaylorOrder; ++o) {
      power *= inv;
      for (std::size_t p = 0; p < pairs_; ++p) mom[static_cast<std::size_t>(o)][p].add(row[p] * power);
    }
  }
  B_.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t j = 0; j < N; ++j) {
      B_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = b[pair_index(k, j)].value();
    }
  }
  moments_.assign(kTaylorOrder + 1, std::vector<double>(pairs_));
  for (int o = 0; o <= kTaylorOrder; ++o) {
    for (std::size_t p = 0; p < pairs_; ++p) {
      moments_[static_cast<std::size_t>(o)][p] = mom[static_cast<std::size_t>(o)][p].value();
    }
  }
}

std::size_t SecularSystem::pair_index(std::size_t k, std::size_t j) const {
  if (k > j) std::swap(k, j);
  const std::size_t N = config_.size();
  return k * N - k * (k - 1) / 2 + (j - k);
}

double SecularSystem::shell_sum(std::size_t shell, std::size_t k, std::size_t j) const {
  return sums_.at(shell * pairs_ + pair_index(k, j));
}

Eigen::MatrixXd SecularSystem::regular_part(double lambda_norm) const {
  require(lambda_norm > static_cast<double>(interval_.center) &&
              lambda_norm < static_cast<double>(interval_.next),
          "spectral parameter must lie strictly inside the gap");
  const double lambda = kFourPiSq * lambda_norm;
  const double t = kFourPiSq * (lambda_norm - center_);
  std::vector<double> acc(pairs_, 0.0);
  // Far shells: Horner in t, highest order first.
  for (int o = kTaylorOrder; o >= 1; --o) {
    for (std::size_t p = 0; p < pairs_; ++p) acc[p] = (acc[p] + moments_[static_cast<std::size_t>(o)][p]) * t;
  }
  std::vector<CompensatedSum> sum(pairs_);
  for (std::size_t p = 0; p < pairs_; ++p) {
    sum[p].add(moments_[0][p]);
    sum[p].add(acc[p]);
  }
  const auto shells = ball_->shells();
  for (std::size_t s : near_) {
    const double n = physical(shells[s].m);
    const double w = (1.0 + lambda * n) /
                     (kFourPiSq * (static_cast<double>(shells[s].m) - lambda_norm) * (n * n + 1.0));
    const double* row = sums_.data() + s * pairs_;
    for (std::size_t p = 0; p < pairs_; ++p) sum[p].add(row[p] * w);
  }
  const auto N = static_cast<Eigen::Index>(config_.size());
  Eigen::MatrixXd A(N, N);
  for (Eigen::Index k = 0; k < N; ++k) {
    for (Eigen::Index j = 0; j < N; ++j) {
      A(k, j) = sum[pair_index(static_cast<std::size_t>(k), static_cast<std::size_t>(j))].value();
    }
  }
  return A;
}

Eigen::MatrixXd SecularSystem::regular_derivative(double lambda_norm) const {
  require(lambda_norm > static_cast<double>(interval_.center) &&
              lambda_norm < static_cast<double>(interval_.next),
          "spectral parameter must lie strictly inside the gap");
  const double t = kFourPiSq * (lambda_norm - center_);
  std::vector<double> acc(pairs_, 0.0);
  for (int o = kTaylorOrder; o >= 2; --o) {
    for (std::size_t p = 0; p < pairs_; ++p) {
      acc[p] = (acc[p] + o * moments_[static_cast<std::size_t>(o)][p]) * t;
    }
  }
  for (std::size_t p = 0; p < pairs_; ++p) acc[p] += moments_[1][p];
  const auto shells = ball_->shells();
  for (std::size_t s : near_) {
    const double c = 1.0 / (kFourPiSq * (static_cast<double>(shells[s].m) - lambda_norm));
    const double* row = sums_.data() + s * pairs_;
    for (std::size_t p = 0; p < pairs_; ++p) acc[p] += row[p] * c * c;
  }
  const auto N = static_cast<Eigen::Index>(config_.size());
  Eigen::MatrixXd D(N, N);
  for (Eigen::Index k = 0; k < N; ++k) {
    for (Eigen::Index j = 0; j < N; ++j) {
      D(k, j) = acc[pair_index(static_cast<std::size_t>(k), static_cast<std::size_t>(j))];
    }
  }
  return D;
}

double SecularSystem::magnitude(double lambda_norm) const {
  require(lambda_norm > static_cast<double>(interval_.center) &&
              lambda_norm < static_cast<double>(interval_.next),
          "spectral parameter must lie strictly inside the gap");
  const double lambda = kFourPiSq * lambda_norm;
  CompensatedSum sum;
  for (const auto& shell : ball_->shells()) {
    const double n = physical(shell.m);
    const double q = n * n + 1.0;
    const double a = (1.0 + lambda * n) / (kFourPiSq * (static_cast<double>(shell.m) - lambda_norm) * q);
    sum.add(shell.size() * (std::abs(a) + 1.0 / q));
  }
  return sum.value();
}

Eigen::MatrixXcd SecularSystem::matrix(double lambda_norm) const {
  return assemble_matrix(regular_part(lambda_norm), B_, config_.u.matrix());
}

SecularValue SecularSystem::value(double lambda_norm) const {
  return secular_value(matrix(lambda_norm));
}

// ---------------------------------------------------------------------------
// Root finding

const char* to_string(RootMethod m) {
  switch (m) {
    case RootMethod::Auto: return "auto";
    case RootMethod::SminScan: return "smin";
    case RootMethod::Inertia: return "inertia";
  }
  return "auto";
}

RootMethod root_method_from_string(const std::string& s) {
  if (s == "auto") return RootMethod::Auto;
  if (s == "smin") return RootMethod::SminScan;
  if (s == "inertia") return RootMethod::Inertia;
  fail(ErrorKind::Validation, "unknown root method '" + s + "' (auto, smin, inertia)");
}

namespace {

NewEigenvalue make_root(const SecularSystem& sys, double lambda_norm, double bracket,
                        const SolverOptions& opt) {
  const Eigen::MatrixXcd M = sys.matrix(lambda_norm);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const auto n = s.size();
  NewEigenvalue r;
  r.lambda_norm = lambda_norm;
  r.interval = sys.interval();
  r.v = svd.matrixV().col(n - 1);
  r.residual = s(n - 1) / (2.0 * sys.magnitude(lambda_norm));
  r.bracket_width = bracket;
  r.near_degenerate = n > 1 && s(n - 2) < opt.degeneracy_ratio * s(n - 1);
  r.d = eigenfunction_coefficients(sys.config().u, r.v);
  return r;
}

int negative_count(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  int c = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) c += es.eigenvalues()(i) < 0.0;
  return c;
}

RootSearch inertia_search(const SecularSystem& sys, double theta, const SolverOptions& opt) {
  RootSearch out;
  out.method = RootMethod::Inertia;
  const double t = std::tan(theta / 2.0);
  const auto& B = sys.deficiency_part();
  auto neg = [&](double x) {
    ++out.evaluations;
    return negative_count(sys.regular_part(x) + t * B);
  };
  const double a = static_cast<double>(sys.interval().center);
  const double b = static_cast<double>(sys.interval().next);
  const double eta = std::max((b - a) * 1e-12, 8.0 * std::numeric_limits<double>::epsilon() * b);
  const double left = a + eta;
  const double right = b - eta;
  const int n_left = neg(left);
  const int n_right = neg(right);
  if (n_right > n_left) fail(ErrorKind::Numeric, "inertia increased across the gap");
  for (int i = 0; i < n_left - n_right; ++i) {
    const int target = n_left - i - 1;
    double lo = left, hi = right;
    for (int it = 0; it < 200; ++it) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid <= lo || mid >= hi) break;
      if (neg(mid) <= target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    auto root = make_root(sys, lo + 0.5 * (hi - lo), hi - lo, opt);
    if (root.residual <= opt.tol) {
      out.roots.push_back(std::move(root));
    } else {
      out.unresolved.push_back(root.lambda_norm);
    }
  }
  return out;
}

RootSearch smin_search(const SecularSystem& sys, const SolverOptions& opt) {
  RootSearch out;
  out.method = RootMethod::SminScan;
  const double a = static_cast<double>(sys.interval().center);
  const double b = static_cast<double>(sys.interval().next);
  const double eta = std::max((b - a) * 1e-12, 8.0 * std::numeric_limits<double>::epsilon() * b);
  const int G = opt.grid;
  auto smin = [&](double x) {
    ++out.evaluations;
    return sys.value(x).smin;
  };
  std::vector<double> xs(static_cast<std::size_t>(G)), ss(static_cast<std::size_t>(G));
  for (int i = 0; i < G; ++i) {
    xs[static_cast<std::size_t>(i)] = a + (b - a) * (i + 0.5) / G;
    ss[static_cast<std::size_t>(i)] = smin(xs[static_cast<std::size_t>(i)]);
  }
  const bool scalar_one = sys.size() == 1;
  const auto u0 = sys.config().u.matrix()(0, 0);
  // Real normalized secular value for N = 1: M / (1 + conj(u)).
  auto normalized = [&](double x) {
    ++out.evaluations;
    return (sys.matrix(x)(0, 0) / (1.0 + std::conj(u0))).real();
  };

  for (int i = 0; i < G; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double left_val = i > 0 ? ss[k - 1] : std::numeric_limits<double>::infinity();
    const double right_val = i + 1 < G ? ss[k + 1] : std::numeric_limits<double>::infinity();
    if (!(ss[k] < left_val && ss[k] <= right_val)) continue;
    double lo = i > 0 ? xs[k - 1] : a + eta;
    double hi = i + 1 < G ? xs[k + 1] : b - eta;
    const double lo0 = lo, hi0 = hi;
    // Golden-section search on smin.
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = smin(c), fd = smin(d);
    for (int it = 0; it < 300; ++it) {
      if (!(hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi))) break;
      if (fc < fd) {
        hi = d; d = c; fd = fc;
        c = hi - g * (hi - lo);
        fc = smin(c);
      } else {
        lo = c; c = d; fc = fd;
        d = lo + g * (hi - lo);
        fd = smin(d);
      }
    }
    double x = 0.5 * (lo + hi);
    double width = hi - lo;
    bool sign_ok = true;
    if (scalar_one) {
      // Expand a bracket around x until the normalized value changes sign,
      // then bisect on the sign.
      double w = std::max(width, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x));
      double l = x, r = x, fl = 0.0, fr = 0.0;
      sign_ok = false;
      while (w <= hi0 - lo0) {
        l = std::max(lo0, x - w);
        r = std::min(hi0, x + w);
        fl = normalized(l);
        fr = normalized(r);
        if ((fl < 0.0) != (fr < 0.0)) {
          sign_ok = true;
          break;
        }
        w *= 2.0;
      }
      if (sign_ok) {
        for (int it = 0; it < 200; ++it) {
          const double mid = l + 0.5 * (r - l);
          if (mid <= l || mid >= r) break;
          const double fm = normalized(mid);
          if ((fm < 0.0) == (fl < 0.0)) {
            l = mid; fl = fm;
          } else {
            r = mid; fr = fm;
          }
        }
        x = l + 0.5 * (r - l);
        width = r - l;
      }
    }
    const bool at_edge = (i == 0 && x - (a + eta) <= 2.0 * width) ||
                         (i + 1 == G && (b - eta) - x <= 2.0 * width);
    auto root = make_root(sys, x, width, opt);
    if (root.residual <= opt.tol && sign_ok && !at_edge &&
        width <= opt.tol * (b - a)) {
      const bool duplicate = !out.roots.empty() &&
                             std::abs(out.roots.back().lambda_norm - x) <= opt.tol * (b - a);
      if (!duplicate) out.roots.push_back(std::move(root));
    } else {
      out.unresolved.push_back(x);
    }
  }
  return out;
}

}  // namespace

RootSearch find_new_eigenvalues(const SecularSystem& system, const SolverOptions& options) {
  require(options.tol > 0.0, "solver tolerance must be positive");
  require(options.grid >= 3, "root scan needs at least three grid points");
  const auto theta = system.config().u.scalar_phase();
  RootMethod method = options.method;
  if (method == RootMethod::Auto) method = theta ? RootMethod::Inertia : RootMethod::SminScan;
  if (method == RootMethod::Inertia) {
    if (!theta) fail(ErrorKind::Validation, "inertia root method needs U = e^{i theta} Id");
    return inertia_search(system, *theta, options);
  }
  return smin_search(system, options);
}

RootSearch find_new_eigenvalues(const ScattererConfig& config, const GapTriple& interval,
                                const TruncationPolicy& policy, const SolverOptions& options) {
  const SpectralParameter mid{0.5 * (static_cast<double>(interval.center) +
                                     static_cast<double>(interval.next))};
  auto res = resolve(policy, mid, config.dim);
  if (res.radius_sq <= interval.next) res.radius_sq = interval.next + 1;
  auto ball = std::make_shared<const LatticeBall>(config.dim, res.radius_sq);
  const SecularSystem sys(config, std::move(ball), interval);
  return find_new_eigenvalues(sys, options);
}

Eigen::VectorXcd coefficient_vector(const Eigen::MatrixXcd& U, const Eigen::VectorXcd& v) {
  require(U.rows() == U.cols() && U.cols() == v.size(), "coefficient_vector size mismatch");
  require(v.norm() > 0.0, "null vector must be nonzero");
  Eigen::VectorXcd d = v + U * v;
  const double n = d.norm();
  if (!(n > 1e-12 * v.norm())) {
    fail(ErrorKind::Degenerate, "(Id + U) annihilates the null vector");
  }
  return d / n;
}

Eigen::VectorXcd eigenfunction_coefficients(const ExtensionParameter& u, const Eigen::VectorXcd& w) {
  Eigen::VectorXcd d = coefficient_vector(u.matrix().conjugate(), w);
  // Fix the global phase: the largest entry becomes real positive.
  Eigen::Index big = 0;
  d.cwiseAbs().maxCoeff(&big);
  const auto phase = d(big) / std::abs(d(big));
  d /= phase;
  d /= d.norm();
  return d;
}

}  // namespace toruslab
