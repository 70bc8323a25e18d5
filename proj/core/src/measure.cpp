#include "toruslab/measure.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "toruslab/error.hpp"

namespace toruslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ComplexSum {
  CompensatedSum re, im;
  void add(std::complex<double> z) {
    re.add(z.real());
    im.add(z.imag());
  }
  std::complex<double> value() const { return {re.value(), im.value()}; }
};

// Largest integer offset k with 4π²k ≤ width.
Norm annulus_reach(double width) {
  auto k = static_cast<Norm>(std::floor(width / kFourPiSq));
  while (k > 0 && physical(k) > width) --k;
  while (physical(k + 1) <= width) ++k;
  return k;
}

void check_covers(const LatticeBall& ball, const Window& w) {
  if (ball.radius_sq() < w.interval.center + annulus_reach(w.L0)) {
    fail(ErrorKind::Validation, "truncation radius is smaller than the annulus outer edge");
  }
  if (ball.radius_sq() <= w.interval.next) {
    fail(ErrorKind::Validation, "truncation radius must exceed m_{k+1}");
  }
}

double inv_sq(Norm diff) {
  const double c = 1.0 / physical(diff);
  return c * c;
}

}  // namespace

// ---------------------------------------------------------------------------
// FourierField

void FourierField::finish() {
  const auto shells = ball_->shells();
  values_.resize(phase_sums_.size());
  CompensatedSum norm;
  for (const auto& sh : shells) {
    const double c = coefficient(sh.m, lam_);
    for (std::uint32_t i = sh.begin; i < sh.end; ++i) {
      values_[i] = c * phase_sums_[i];
      norm.add(std::norm(values_[i]));
    }
  }
  norm_sq_ = norm.value();
}

FourierField FourierField::assemble(const Eigen::VectorXcd& d, const std::vector<Point>& positions,
                                    SpectralParameter lam, std::shared_ptr<const LatticeBall> ball) {
  require(ball != nullptr, "field needs a truncation set");
  require(ball->size() > 0, "empty truncation set");
  require(d.size() == static_cast<Eigen::Index>(positions.size()) && d.size() > 0,
          "coefficient count must match the number of scatterers");
  const int dim = ball->dim();
  const std::int32_t M = ball->max_coord();
  const std::size_t span = static_cast<std::size_t>(2 * M + 1);
  // tables[j][axis][t + M] = d_j-free phase exp(-2πi t x_j[axis])
  std::vector<std::vector<std::complex<double>>> tables(positions.size() * 3);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    for (int a = 0; a < dim; ++a) {
      auto& tab = tables[j * 3 + static_cast<std::size_t>(a)];
      tab.resize(span);
      for (std::int32_t t = -M; t <= M; ++t) {
        const double x = static_cast<double>(t) * positions[j][a];
        tab[static_cast<std::size_t>(t + M)] = std::polar(1.0, -kTwoPi * (x - std::nearbyint(x)));
      }
    }
  }
  FourierField f;
  f.ball_ = std::move(ball);
  f.lam_ = lam;
  const auto pts = f.ball_->points();
  f.phase_sums_.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& xi = pts[i];
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < positions.size(); ++j) {
      auto e = tables[j * 3][static_cast<std::size_t>(xi.coords[0] + M)] *
               tables[j * 3 + 1][static_cast<std::size_t>(xi.coords[1] + M)];
      if (dim == 3) e *= tables[j * 3 + 2][static_cast<std::size_t>(xi.coords[2] + M)];
      s += d(static_cast<Eigen::Index>(j)) * e;
    }
    f.phase_sums_[i] = s;
  }
  f.finish();
  return f;
}

FourierField FourierField::from_phase_sums(std::vector<std::complex<double>> phase_sums,
                                           SpectralParameter lam,
                                           std::shared_ptr<const LatticeBall> ball) {
  require(ball != nullptr && ball->size() > 0, "field needs a nonempty truncation set");
  require(phase_sums.size() == ball->size(), "one phase sum per truncation point");
  FourierField f;
  f.ball_ = std::move(ball);
  f.lam_ = lam;
  f.phase_sums_ = std::move(phase_sums);
  f.finish();
  return f;
}

std::complex<double> FourierField::value_at(const LatticeVector& xi) const {
  const auto i = ball_->find(xi);
  return i ? values_[*i] : std::complex<double>{};
}

std::complex<double> FourierField::phase_sum_at(const LatticeVector& xi) const {
  const auto i = ball_->find(xi);
  if (!i) fail(ErrorKind::OutOfRange, to_string(xi) + " is outside the truncation set");
  return phase_sums_[*i];
}

FourierField assemble_field(const Eigen::VectorXcd& d, const std::vector<Point>& positions,
                            int dim, SpectralParameter lam, const TruncationPolicy& policy) {
  const auto res = resolve(policy, lam, dim);
  return FourierField::assemble(d, positions, lam, std::make_shared<const LatticeBall>(dim, res.radius_sq));
}

// ---------------------------------------------------------------------------
// Observable

Observable::Observable(int dim, std::map<LatticeVector, std::complex<double>> coeffs)
    : dim_(dim), coeffs_(std::move(coeffs)) {
  check_dimension(dim);
  CompensatedSum l1;
  for (auto& [zeta, c] : coeffs_) {
    require(zeta.dim == dim, "observable frequency has the wrong dimension");
    require(std::isfinite(c.real()) && std::isfinite(c.imag()), "observable coefficients must be finite");
    l1.add(std::abs(c));
  }
  l1_ = l1.value();
}

Observable Observable::constant(int dim, double value) {
  return Observable(dim, {{LatticeVector::zero(dim), value}});
}

Observable Observable::cosine(int dim, int axis) {
  require(axis >= 0 && axis < dim, "cosine axis out of range");
  auto e = LatticeVector::zero(dim);
  e.coords[static_cast<std::size_t>(axis)] = 1;
  return Observable(dim, {{e, 0.5}, {-e, 0.5}});
}

std::complex<double> Observable::mean() const {
  auto it = coeffs_.find(LatticeVector::zero(dim_));
  return it == coeffs_.end() ? std::complex<double>{} : it->second;
}

double Observable::l1_nonzero() const {
  CompensatedSum s;
  for (const auto& [zeta, c] : coeffs_) {
    if (!zeta.is_zero()) s.add(std::abs(c));
  }
  return s.value();
}

bool Observable::real_valued(double tol) const {
  for (const auto& [zeta, c] : coeffs_) {
    auto it = coeffs_.find(-zeta);
    const auto partner = it == coeffs_.end() ? std::complex<double>{} : it->second;
    if (std::abs(partner - std::conj(c)) > tol) return false;
  }
  return true;
}

std::complex<double> Observable::operator()(const Point& x) const {
  std::complex<double> s = 0.0;
  for (const auto& [zeta, c] : coeffs_) {
    double arg = 0.0;
    for (int i = 0; i < dim_; ++i) arg += zeta.coords[static_cast<std::size_t>(i)] * x[i];
    s += c * std::polar(1.0, kTwoPi * arg);
  }
  return s;
}

void to_json(nlohmann::json& j, const Observable& a) {
  j = nlohmann::json::object();
  for (const auto& [zeta, c] : a.coeffs()) {
    std::string key = std::to_string(zeta.coords[0]) + "," + std::to_string(zeta.coords[1]);
    if (a.dim() == 3) key += "," + std::to_string(zeta.coords[2]);
    j[key] = {c.real(), c.imag()};
  }
}

Observable observable_from_json(const nlohmann::json& j, int dim) {
  require(j.is_object(), "observable must be a JSON object mapping frequencies to [re, im]");
  std::map<LatticeVector, std::complex<double>> coeffs;
  for (const auto& [key, val] : j.items()) {
    std::string cleaned;
    for (char ch : key) {
      if (ch == '(' || ch == ')' || ch == '[' || ch == ']' || ch == ' ') continue;
      cleaned.push_back(ch);
    }
    std::vector<std::int32_t> parts;
    std::stringstream ss(cleaned);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        parts.push_back(static_cast<std::int32_t>(std::stol(item, &used)));
        require(used == item.size(), "bad frequency key '" + key + "'");
      } catch (const std::logic_error&) {
        fail(ErrorKind::Validation, "bad frequency key '" + key + "'");
      }
    }
    require(static_cast<int>(parts.size()) == dim, "frequency key '" + key + "' has the wrong dimension");
    const LatticeVector zeta = dim == 2 ? LatticeVector(parts[0], parts[1])
                                        : LatticeVector(parts[0], parts[1], parts[2]);
    std::complex<double> c;
    if (val.is_number()) {
      c = val.get<double>();
    } else {
      require(val.is_array() && val.size() == 2, "coefficient must be [re, im]");
      c = {val[0].get<double>(), val[1].get<double>()};
    }
    coeffs[zeta] += c;
  }
  return Observable(dim, std::move(coeffs));
}

// ---------------------------------------------------------------------------
// Pairings

std::complex<double> correlation(const FourierField& field, const LatticeVector& zeta) {
  if (zeta.is_zero()) return field.norm_sq();
  const auto& ball = field.ball();
  const auto pts = ball.points();
  const auto vals = field.values();
  ComplexSum s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto j = ball.find(pts[i] + zeta);
    if (j) s.add(vals[i] * std::conj(vals[*j]));
  }
  return s.value();
}

std::complex<double> pair_with_observable(const FourierField& field, const Observable& a) {
  require(a.dim() == field.ball().dim(), "observable dimension does not match the field");
  const double norm = field.norm_sq();
  if (!(norm > 0.0)) fail(ErrorKind::Numeric, "field has zero norm");
  ComplexSum s;
  for (const auto& [zeta, c] : a.coeffs()) s.add(c * (correlation(field, zeta) / norm));
  return s.value();
}

Split split_annulus(const FourierField& field, const Window& window) {
  check_covers(field.ball(), window);
  CompensatedSum in, out;
  const auto vals = field.values();
  for (const auto& sh : field.ball().shells()) {
    const bool inside = annulus_contains(sh.m, window.interval.center, window.L0);
    auto& acc = inside ? in : out;
    for (std::uint32_t i = sh.begin; i < sh.end; ++i) acc.add(std::norm(vals[i]));
  }
  return {in.value(), out.value()};
}

double branch_weight(Norm eta_norm, const GapTriple& interval) {
  if (eta_norm < interval.center) return inv_sq(interval.center - eta_norm);
  if (eta_norm > interval.next) return inv_sq(eta_norm - interval.next);
  return 0.0;
}

double functional_A(const FourierField& field, const LatticeVector& zeta, const Window& window) {
  require(!zeta.is_zero(), "functional A needs a nonzero shift");
  check_covers(field.ball(), window);
  const auto pts = field.ball().points();
  const auto phases = field.phase_sums();
  CompensatedSum s;
  for (const auto& sh : field.ball().shells()) {
    if (!annulus_contains(sh.m, window.interval.center, window.L0)) continue;
    for (std::uint32_t i = sh.begin; i < sh.end; ++i) {
      const Norm eta = (pts[i] + zeta).norm_sq();
      if (eta == window.interval.center || eta == window.interval.next) {
        fail(ErrorKind::NonSPrime, "shift " + to_string(zeta) + " moves " + to_string(pts[i]) +
                                       " onto an endpoint shell of the gap");
      }
      s.add(branch_weight(eta, window.interval) * std::norm(phases[i]));
    }
  }
  return s.value();
}

LatticeVector xi_zero(int dim, Norm m_k) {
  const auto shell = shell_vectors(dim, m_k);
  require(!shell.empty(), "norm " + std::to_string(m_k) + " is not representable");
  return shell.front();
}

double functional_B(const FourierField& field, const Window& window) {
  const auto xi0 = xi_zero(field.ball().dim(), window.interval.center);
  const double gap = window.interval.double_gap();
  return std::norm(field.phase_sum_at(xi0)) / (gap * gap);
}

double functional_C(const FourierField& field, const Window& window) {
  check_covers(field.ball(), window);
  const auto phases = field.phase_sums();
  CompensatedSum s;
  for (const auto& sh : field.ball().shells()) {
    if (annulus_contains(sh.m, window.interval.center, window.L0)) continue;
    const double w = branch_weight(sh.m, window.interval);
    if (w == 0.0) continue;
    for (std::uint32_t i = sh.begin; i < sh.end; ++i) s.add(w * std::norm(phases[i]));
  }
  return s.value();
}

SigmaValue sigma_sum(int dim, const Window& window, const LatticeVector& zeta) {
  require(!zeta.is_zero(), "sigma sum needs a nonzero shift");
  SigmaValue out;
  CompensatedSum s;
  for (Norm n : annulus_norms(dim, window.interval.center, window.L0)) {
    for (const auto& xi : shell_vectors(dim, n)) {
      s.add(branch_weight((xi + zeta).norm_sq(), window.interval));
      ++out.annulus_size;
    }
  }
  out.value = s.value();
  out.bound = static_cast<double>(out.annulus_size) / (window.L0 * window.L0);
  return out;
}

double complement_sum(const LatticeBall& ball, const Window& window) {
  CompensatedSum s;
  for (const auto& sh : ball.shells()) {
    if (annulus_contains(sh.m, window.interval.center, window.L0)) continue;
    s.add(branch_weight(sh.m, window.interval) * sh.size());
  }
  return s.value();
}

EquidistributionError equidistribution_error(const FourierField& field, const Observable& a,
                                             double gamma_d, double eps, std::size_t n_scatterers) {
  require(a.real_valued(1e-12), "equidistribution error needs a real-valued observable");
  require(n_scatterers >= 1, "scatterer count must be positive");
  EquidistributionError out;
  out.err = std::abs(pair_with_observable(field, a) - a.mean());
  out.envelope = a.l1_norm() * std::sqrt(static_cast<double>(n_scatterers)) *
                 std::pow(field.lam().physical(), -gamma_d + eps);
  return out;
}

FunctionalReport evaluate_functionals(const FourierField& field, const Window& window,
                                      const Observable& a) {
  FunctionalReport r;
  CompensatedSum weighted;
  for (const auto& [zeta, c] : a.coeffs()) {
    if (zeta.is_zero()) continue;
    const double v = functional_A(field, zeta, window);
    r.A_vals[zeta] = v;
    r.sigma[zeta] = sigma_sum(field.ball().dim(), window, zeta).value;
    weighted.add(std::abs(c) * v);
  }
  r.A_weighted = weighted.value();
  r.B_val = functional_B(field, window);
  r.C_val = functional_C(field, window);
  r.split = split_annulus(field, window);
  return r;
}

nlohmann::json to_json(const FunctionalReport& r) {
  nlohmann::json j;
  auto amap = nlohmann::json::object();
  auto smap = nlohmann::json::object();
  for (const auto& [z, v] : r.A_vals) amap[to_string(z)] = v;
  for (const auto& [z, v] : r.sigma) smap[to_string(z)] = v;
  j["A"] = amap;
  j["A_weighted"] = r.A_weighted;
  j["B"] = r.B_val;
  j["C"] = r.C_val;
  j["sigma"] = smap;
  j["annulus_norm_sq"] = r.split.annulus_norm_sq;
  j["remainder_norm_sq"] = r.split.remainder_norm_sq;
  return j;
}

}  // namespace toruslab
