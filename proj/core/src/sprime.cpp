#include "toruslab/sprime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "toruslab/error.hpp"

namespace toruslab {

double epsilon_from_delta(double theta, double delta) {
  const double eps = (0.5 - theta - delta) / 2.0;
  if (!(eps > 0.0)) {
    fail(ErrorKind::Validation, "delta must be below 1/2 - theta for a positive epsilon");
  }
  return eps;
}

SPrimeParams SPrimeParams::from_delta(double delta, double theta) {
  SPrimeParams p;
  p.delta = delta;
  p.theta = theta;
  p.eps = epsilon_from_delta(theta, delta);
  p.eps_prime = p.eps;
  return p;
}

void SPrimeParams::validate() const {
  require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 1/2)");
  require(eps > 0.0, "eps must be positive");
  require(eps_prime > 0.0, "eps_prime must be positive");
  require(c_gap > 0.0, "c_gap must be positive");
  require(c_coeff > 0.0, "c_coeff must be positive");
  require(theta > 0.0 && theta < 0.5, "theta must lie in (0, 1/2)");
}

bool SPrimeParams::delta_in_range() const {
  return delta > theta / 2.0 && delta < 0.5 - theta;
}

void to_json(nlohmann::json& j, const SPrimeParams& p) {
  j = nlohmann::json{{"delta", p.delta},     {"eps", p.eps},         {"eps_prime", p.eps_prime},
                     {"c_gap", p.c_gap},     {"c_coeff", p.c_coeff}, {"theta", p.theta}};
}

void from_json(const nlohmann::json& j, SPrimeParams& p) {
  p.theta = j.value("theta", kHuxleyTheta);
  p.delta = j.at("delta").get<double>();
  p.eps = j.contains("eps") ? j.at("eps").get<double>() : epsilon_from_delta(p.theta, p.delta);
  p.eps_prime = j.value("eps_prime", p.eps);
  p.c_gap = j.value("c_gap", 10.0);
  p.c_coeff = j.value("c_coeff", 10.0);
}

double annulus_width(Norm m_k, double delta) { return std::pow(physical(m_k), delta); }

Norm shift_radius_sq(Norm m_k, double eps) {
  const double r = std::pow(physical(m_k), eps);
  return static_cast<Norm>(std::floor(r * r));
}

std::vector<LatticeVector> shift_vectors(int dim, Norm radius_sq) {
  std::vector<LatticeVector> out;
  for (Norm m = 1; m <= radius_sq; ++m) {
    for (const auto& v : shell_vectors(dim, m)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool gap_condition(const SpectrumTable& table, Norm m_k, const SPrimeParams& params) {
  const auto g = table.gap_around(m_k);
  if (std::isinf(params.c_gap)) return true;
  return g.double_gap() <= params.c_gap * std::pow(physical(m_k), params.eps_prime);
}

double interval_distance(Norm shifted, Norm m_k, Norm m_next) {
  if (shifted < m_k) return physical(m_k - shifted);
  if (shifted > m_next) return physical(shifted - m_next);
  return 0.0;
}

CoeffCheck check_coeff_condition(const SpectrumTable& table, Norm m_k, const SPrimeParams& params) {
  params.validate();
  const auto k = table.index_of(m_k);
  if (k + 1 >= table.size()) {
    fail(ErrorKind::OutOfRange, "norm " + std::to_string(m_k) + " has no successor in the table");
  }
  const Norm m_next = table.entries()[k + 1].m;
  const double L0 = annulus_width(m_k, params.delta);
  const double threshold = L0 / params.c_coeff;
  const auto annulus = annulus_points(table, AnnulusSpec{m_k, L0, std::nullopt});
  const auto shifts = shift_vectors(table.dim(), shift_radius_sq(m_k, params.eps));
  CoeffCheck out;
  out.annulus_size = annulus.size();
  out.shift_count = shifts.size();
  out.min_distance = std::numeric_limits<double>::infinity();
  for (const auto& zeta : shifts) {
    for (const auto& xi : annulus) {
      const Norm shifted = (xi + zeta).norm_sq();
      const double dist = interval_distance(shifted, m_k, m_next);
      out.min_distance = std::min(out.min_distance, dist);
      if (!(dist >= threshold) && out.ok) {
        out.ok = false;
        out.first_violation = CoeffViolation{xi, zeta, shifted, dist};
      }
    }
  }
  return out;
}

bool coeff_condition(const SpectrumTable& table, Norm m_k, const SPrimeParams& params) {
  return check_coeff_condition(table, m_k, params).ok;
}

SPrimeWindow build_window(const SpectrumTable& table, Norm m_lo, Norm m_hi,
                          const SPrimeParams& params) {
  params.validate();
  require(m_lo < m_hi, "window needs m_lo < m_hi");
  if (m_hi > table.m_max()) fail(ErrorKind::OutOfRange, "window exceeds the table limit");
  SPrimeWindow w;
  w.params = params;
  w.dim = table.dim();
  w.m_lo = m_lo;
  w.m_hi = m_hi;
  w.heuristic = table.dim() == 3;
  for (const auto& e : table.entries()) {
    if (e.m < m_lo) continue;
    if (e.m > m_hi) break;
    WindowRow row;
    row.m_k = e.m;
    row.gap_ok = gap_condition(table, e.m, params);
    row.coeff_ok = coeff_condition(table, e.m, params);
    if (row.accepted()) w.accepted.push_back(e.m);
    w.rows.push_back(row);
  }
  if (w.rows.empty()) {
    fail(ErrorKind::EmptyWindow, "no spectrum members in [" + std::to_string(m_lo) + ", " +
                                     std::to_string(m_hi) + "]");
  }
  w.density = static_cast<double>(w.accepted.size()) / static_cast<double>(w.rows.size());
  return w;
}

void write_window_csv(const SPrimeWindow& w, std::ostream& out) {
  out << "m_k,gap_ok,coeff_ok,accepted\n";
  for (const auto& r : w.rows) {
    out << r.m_k << ',' << int(r.gap_ok) << ',' << int(r.coeff_ok) << ',' << int(r.accepted()) << '\n';
  }
}

nlohmann::json window_summary(const SPrimeWindow& w) {
  nlohmann::json j;
  j["params"] = w.params;
  j["params"]["delta_in_range"] = w.params.delta_in_range();
  j["dim"] = w.dim;
  j["range"] = {w.m_lo, w.m_hi};
  j["members"] = w.rows.size();
  j["accepted"] = w.accepted.size();
  j["density"] = w.density;
  if (w.heuristic) j["note"] = "heuristic for d=3";
  return j;
}

bool annulus_covers_interval(Norm m_k, Norm m_next, double L0) {
  return annulus_contains(m_next, m_k, L0);
}

std::optional<Norm> select_interval(const SpectrumTable& table, Norm m_target,
                                    const SPrimeParams& params, Norm search_limit) {
  params.validate();
  const auto entries = table.entries();
  const Norm limit = search_limit > 0 ? search_limit : table.m_max();
  for (std::size_t k = 1; k + 1 < entries.size(); ++k) {
    const Norm m = entries[k].m;
    if (m < m_target) continue;
    if (m > limit) break;
    if (!annulus_covers_interval(m, entries[k + 1].m, annulus_width(m, params.delta))) continue;
    if (gap_condition(table, m, params) && coeff_condition(table, m, params)) return m;
  }
  return std::nullopt;
}

}  // namespace toruslab
