#include "toruslab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "toruslab/error.hpp"

namespace toruslab {

namespace {

std::int64_t isqrt(std::int64_t n) {
  if (n <= 0) return 0;
  auto s = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (s * s > n) --s;
  while ((s + 1) * (s + 1) <= n) ++s;
  return s;
}

bool is_square(std::int64_t n, std::int64_t* root = nullptr) {
  if (n < 0) return false;
  const auto s = isqrt(n);
  if (root) *root = s;
  return s * s == n;
}

bool is_representable(int dim, Norm n) {
  if (n < 0) return false;
  if (n == 0) return true;
  if (dim == 3) {
    // Legendre: n is a sum of three squares unless n = 4^a (8b + 7).
    Norm t = n;
    while (t % 4 == 0) t /= 4;
    return t % 8 != 7;
  }
  for (std::int64_t a = 0; 2 * a * a <= n; ++a) {
    if (is_square(n - a * a)) return true;
  }
  return false;
}

LatticeVector make_vector(int dim, std::int64_t a, std::int64_t b, std::int64_t c) {
  if (dim == 2) return {static_cast<std::int32_t>(a), static_cast<std::int32_t>(b)};
  return {static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
          static_cast<std::int32_t>(c)};
}

// Calls f(a, b, c) for every lattice point with norm ≤ R in lexicographic order.
template <class F>
void for_each_in_ball(int dim, Norm R, F&& f) {
  const auto s = isqrt(R);
  for (std::int64_t a = -s; a <= s; ++a) {
    const Norm ra = R - a * a;
    const auto t = isqrt(ra);
    for (std::int64_t b = -t; b <= t; ++b) {
      if (dim == 2) {
        f(a, b, std::int64_t{0});
        continue;
      }
      const auto u = isqrt(ra - b * b);
      for (std::int64_t c = -u; c <= u; ++c) f(a, b, c);
    }
  }
}

}  // namespace

void check_dimension(int dim) {
  if (dim != 2 && dim != 3) {
    fail(ErrorKind::Validation, "dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

LatticeVector LatticeVector::zero(int dim) {
  check_dimension(dim);
  return dim == 2 ? LatticeVector(0, 0) : LatticeVector(0, 0, 0);
}

LatticeVector LatticeVector::operator+(const LatticeVector& o) const {
  LatticeVector r = *this;
  for (int i = 0; i < 3; ++i) r.coords[i] += o.coords[i];
  return r;
}

LatticeVector LatticeVector::operator-(const LatticeVector& o) const {
  LatticeVector r = *this;
  for (int i = 0; i < 3; ++i) r.coords[i] -= o.coords[i];
  return r;
}

LatticeVector LatticeVector::operator-() const {
  LatticeVector r = *this;
  for (auto& c : r.coords) c = -c;
  return r;
}

std::int64_t dot(const LatticeVector& a, const LatticeVector& b) {
  std::int64_t s = 0;
  for (int i = 0; i < 3; ++i) s += std::int64_t{a.coords[i]} * b.coords[i];
  return s;
}

std::string to_string(const LatticeVector& v) {
  std::ostringstream os;
  os << '(' << v.coords[0] << ',' << v.coords[1];
  if (v.dim == 3) os << ',' << v.coords[2];
  os << ')';
  return os.str();
}

// ---------------------------------------------------------------------------
// SpectrumTable

SpectrumTable::SpectrumTable(int dim, Norm m_max, std::vector<SpectrumEntry> entries)
    : dim_(dim), m_max_(m_max), entries_(std::move(entries)) {
  check_dimension(dim);
  require(m_max >= 0, "m_max must be nonnegative");
  require(!entries_.empty() && entries_.front().m == 0 && entries_.front().r == 1,
          "spectrum table must start with (0, 1)");
  cumulative_.reserve(entries_.size());
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    require(e.r >= 1, "multiplicities must be positive");
    require(e.m <= m_max, "entry exceeds m_max");
    if (i > 0) require(e.m > entries_[i - 1].m, "entries must be strictly ascending");
    acc += e.r;
    cumulative_.push_back(acc);
  }
}

bool SpectrumTable::contains(Norm m) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), m,
                             [](const SpectrumEntry& e, Norm v) { return e.m < v; });
  return it != entries_.end() && it->m == m;
}

std::int64_t SpectrumTable::multiplicity(Norm m) const {
  if (m > m_max_) {
    fail(ErrorKind::OutOfRange,
         "norm " + std::to_string(m) + " exceeds table limit " + std::to_string(m_max_));
  }
  if (m < 0) return 0;
  auto it = std::lower_bound(entries_.begin(), entries_.end(), m,
                             [](const SpectrumEntry& e, Norm v) { return e.m < v; });
  return (it != entries_.end() && it->m == m) ? it->r : 0;
}

std::size_t SpectrumTable::index_of(Norm m) const {
  if (m > m_max_) fail(ErrorKind::OutOfRange, "norm " + std::to_string(m) + " beyond m_max");
  auto it = std::lower_bound(entries_.begin(), entries_.end(), m,
                             [](const SpectrumEntry& e, Norm v) { return e.m < v; });
  if (it == entries_.end() || it->m != m) {
    fail(ErrorKind::Validation, "norm " + std::to_string(m) + " is not representable");
  }
  return static_cast<std::size_t>(it - entries_.begin());
}

std::int64_t SpectrumTable::lattice_count(Norm X) const {
  if (X > m_max_) fail(ErrorKind::OutOfRange, "count bound exceeds m_max");
  if (X < 0) return 0;
  auto it = std::upper_bound(entries_.begin(), entries_.end(), X,
                             [](Norm v, const SpectrumEntry& e) { return v < e.m; });
  const auto idx = it - entries_.begin();
  return cumulative_[static_cast<std::size_t>(idx - 1)];
}

std::size_t SpectrumTable::norm_count(Norm X) const {
  if (X > m_max_) fail(ErrorKind::OutOfRange, "count bound exceeds m_max");
  if (X < 0) return 0;
  auto it = std::upper_bound(entries_.begin(), entries_.end(), X,
                             [](Norm v, const SpectrumEntry& e) { return v < e.m; });
  return static_cast<std::size_t>(it - entries_.begin());
}

GapTriple SpectrumTable::gap_around(Norm m_k) const {
  const auto k = index_of(m_k);
  if (k == 0 || k + 1 >= entries_.size()) {
    fail(ErrorKind::OutOfRange, "norm " + std::to_string(m_k) + " lacks a neighbour in the table");
  }
  return {entries_[k - 1].m, entries_[k].m, entries_[k + 1].m};
}

std::string SpectrumTable::cache_file_name() const {
  return "spectrum_d" + std::to_string(dim_) + "_m" + std::to_string(m_max_) + ".csv";
}

void SpectrumTable::write_csv(std::ostream& out) const {
  out << "m,r\n";
  for (const auto& e : entries_) out << e.m << ',' << e.r << '\n';
}

SpectrumTable SpectrumTable::read_csv(std::istream& in, int dim, Norm m_max) {
  std::string line;
  if (!std::getline(in, line) || line != "m,r") {
    fail(ErrorKind::Io, "spectrum CSV must start with header 'm,r'");
  }
  std::vector<SpectrumEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorKind::Io, "malformed spectrum row: " + line);
    try {
      entries.push_back({std::stoll(line.substr(0, comma)), std::stoll(line.substr(comma + 1))});
    } catch (const std::exception&) {
      fail(ErrorKind::Io, "malformed spectrum row: " + line);
    }
  }
  return SpectrumTable(dim, m_max, std::move(entries));
}

SpectrumTable enumerate_spectrum(int dim, Norm m_max) {
  check_dimension(dim);
  require(m_max >= 0, "m_max must be nonnegative");
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(m_max) + 1, 0);
  // Nonnegative octant with sign weights: each nonzero coordinate doubles.
  const auto s = isqrt(m_max);
  for (std::int64_t a = 0; a <= s; ++a) {
    const std::uint32_t wa = a > 0 ? 2 : 1;
    const Norm ra = m_max - a * a;
    const auto t = isqrt(ra);
    for (std::int64_t b = 0; b <= t; ++b) {
      const std::uint32_t wb = wa * (b > 0 ? 2 : 1);
      if (dim == 2) {
        counts[static_cast<std::size_t>(a * a + b * b)] += wb;
        continue;
      }
      const Norm rb = ra - b * b;
      const auto u = isqrt(rb);
      const Norm base = a * a + b * b;
      counts[static_cast<std::size_t>(base)] += wb;
      for (std::int64_t c = 1; c <= u; ++c) counts[static_cast<std::size_t>(base + c * c)] += 2 * wb;
    }
  }
  std::vector<SpectrumEntry> entries;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m] != 0) entries.push_back({static_cast<Norm>(m), counts[m]});
  }
  return SpectrumTable(dim, m_max, std::move(entries));
}

SpectrumTable load_or_build_spectrum(const std::filesystem::path& dir, int dim, Norm m_max,
                                     bool* cache_hit) {
  check_dimension(dim);
  const std::string name =
      "spectrum_d" + std::to_string(dim) + "_m" + std::to_string(m_max) + ".csv";
  const auto path = dir / name;
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    if (cache_hit) *cache_hit = true;
    return SpectrumTable::read_csv(in, dim, m_max);
  }
  auto table = enumerate_spectrum(dim, m_max);
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
    table.write_csv(out);
    if (!out) fail(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move spectrum into place: " + ec.message());
  if (cache_hit) *cache_hit = false;
  return table;
}

CircleCount circle_count(const SpectrumTable& table, double X) {
  require(X >= 0.0, "circle_count needs X >= 0");
  const auto floor_x = static_cast<Norm>(std::floor(X));
  CircleCount out;
  out.count = table.lattice_count(floor_x);
  const double volume = table.dim() == 2 ? std::numbers::pi * X
                                         : 4.0 / 3.0 * std::numbers::pi * X * std::sqrt(X);
  out.remainder = static_cast<double>(out.count) - volume;
  return out;
}

CircleCount circle_count(int dim, double X) {
  require(X >= 0.0, "circle_count needs X >= 0");
  return circle_count(enumerate_spectrum(dim, static_cast<Norm>(std::floor(X))), X);
}

GapTriple neighbors(const SpectrumTable& table, double lambda_norm) {
  const auto entries = table.entries();
  if (!(lambda_norm > 0.0) || lambda_norm >= static_cast<double>(table.m_max())) {
    fail(ErrorKind::OutOfRange, "spectral parameter outside the table range");
  }
  auto it = std::upper_bound(entries.begin(), entries.end(), lambda_norm,
                             [](double v, const SpectrumEntry& e) { return v < static_cast<double>(e.m); });
  const auto k = static_cast<std::size_t>(it - entries.begin()) - 1;
  if (static_cast<double>(entries[k].m) == lambda_norm) {
    fail(ErrorKind::OnSpectrum, "spectral parameter coincides with norm " + std::to_string(entries[k].m));
  }
  if (k == 0) fail(ErrorKind::OutOfRange, "spectral parameter below the first gap triple");
  if (k + 1 >= entries.size()) fail(ErrorKind::OutOfRange, "spectral parameter beyond the last gap");
  return {entries[k - 1].m, entries[k].m, entries[k + 1].m};
}

bool annulus_contains(Norm shifted_norm, Norm center_norm, double width) {
  const Norm diff = shifted_norm >= center_norm ? shifted_norm - center_norm : center_norm - shifted_norm;
  return physical(diff) <= width;
}

std::vector<Norm> annulus_norms(int dim, Norm center_norm, double width) {
  check_dimension(dim);
  require(width > 0.0, "annulus width must be positive");
  const auto reach = static_cast<Norm>(std::floor(width / kFourPiSq)) + 1;
  std::vector<Norm> out;
  for (Norm n = std::max<Norm>(0, center_norm - reach); n <= center_norm + reach; ++n) {
    if (annulus_contains(n, center_norm, width) && is_representable(dim, n)) out.push_back(n);
  }
  return out;
}

std::vector<LatticeVector> annulus_points(const SpectrumTable& table, const AnnulusSpec& spec) {
  require(table.multiplicity(spec.center_norm) > 0, "annulus centre must be representable");
  const auto zeta = spec.shift.value_or(LatticeVector::zero(table.dim()));
  std::vector<LatticeVector> out;
  for (Norm n : annulus_norms(table.dim(), spec.center_norm, spec.width)) {
    for (const auto& eta : shell_vectors(table.dim(), n)) out.push_back(eta + zeta);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool bad_set_test(const LatticeVector& xi, const LatticeVector& zeta, double delta) {
  require(!zeta.is_zero(), "bad-set shift must be nonzero");
  require(delta > 0.0 && delta < 0.5, "bad-set exponent must lie in (0, 1/2)");
  const auto inner = static_cast<double>(std::llabs(dot(xi, zeta)));
  return inner <= std::pow(static_cast<double>(xi.norm_sq()), delta);
}

std::vector<LatticeVector> shell_vectors(int dim, Norm m) {
  check_dimension(dim);
  std::vector<LatticeVector> out;
  if (m < 0) return out;
  const auto s = isqrt(m);
  for (std::int64_t a = -s; a <= s; ++a) {
    const Norm ra = m - a * a;
    if (dim == 2) {
      std::int64_t b = 0;
      if (!is_square(ra, &b)) continue;
      out.push_back(make_vector(2, a, -b, 0));
      if (b > 0) out.push_back(make_vector(2, a, b, 0));
      continue;
    }
    const auto t = isqrt(ra);
    for (std::int64_t b = -t; b <= t; ++b) {
      std::int64_t c = 0;
      if (!is_square(ra - b * b, &c)) continue;
      out.push_back(make_vector(3, a, b, -c));
      if (c > 0) out.push_back(make_vector(3, a, b, c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// LatticeBall

LatticeBall::LatticeBall(int dim, Norm radius_sq)
    : dim_(dim), radius_sq_(radius_sq), max_coord_(static_cast<std::int32_t>(isqrt(radius_sq))) {
  check_dimension(dim);
  require(radius_sq >= 0, "ball radius must be nonnegative");
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(radius_sq) + 1, 0);
  for_each_in_ball(dim, radius_sq, [&](std::int64_t a, std::int64_t b, std::int64_t c) {
    ++counts[static_cast<std::size_t>(a * a + b * b + c * c)];
  });
  std::vector<std::uint32_t> cursor(counts.size(), 0);
  std::uint32_t offset = 0;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m] == 0) continue;
    shells_.push_back({static_cast<Norm>(m), offset, offset + counts[m]});
    cursor[m] = offset;
    offset += counts[m];
  }
  points_.resize(offset);
  for_each_in_ball(dim, radius_sq, [&](std::int64_t a, std::int64_t b, std::int64_t c) {
    const auto m = static_cast<std::size_t>(a * a + b * b + c * c);
    points_[cursor[m]++] = make_vector(dim, a, b, c);
  });
}

std::optional<std::size_t> LatticeBall::shell_index(Norm m) const {
  auto it = std::lower_bound(shells_.begin(), shells_.end(), m,
                             [](const Shell& s, Norm v) { return s.m < v; });
  if (it == shells_.end() || it->m != m) return std::nullopt;
  return static_cast<std::size_t>(it - shells_.begin());
}

std::optional<std::size_t> LatticeBall::find(const LatticeVector& xi) const {
  const auto n = xi.norm_sq();
  if (n > radius_sq_) return std::nullopt;
  const auto si = shell_index(n);
  if (!si) return std::nullopt;
  const auto& sh = shells_[*si];
  auto first = points_.begin() + sh.begin;
  auto last = points_.begin() + sh.end;
  auto it = std::lower_bound(first, last, xi);
  if (it == last || !(*it == xi)) return std::nullopt;
  return static_cast<std::size_t>(it - points_.begin());
}

}  // namespace toruslab
