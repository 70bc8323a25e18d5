#pragma once

// Unperturbed spectrum of the flat torus R^d / Z^d, d = 2, 3.
//
// Eigenvalues of -Δ are 4π²m for integers m = |ξ|², ξ ∈ Z^d. All bookkeeping
// here is on the integer norm m; the factor 4π² enters only when comparing
// against physical widths (annuli) and is applied at that boundary.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace toruslab {

using Norm = std::int64_t;

inline constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

/// Physical eigenvalue 4π²m of an integer norm.
constexpr double physical(Norm m) { return kFourPiSq * static_cast<double>(m); }

void check_dimension(int dim);

struct LatticeVector {
  std::array<std::int32_t, 3> coords{};
  int dim = 2;

  LatticeVector() = default;
  LatticeVector(std::int32_t a, std::int32_t b) : coords{a, b, 0}, dim(2) {}
  LatticeVector(std::int32_t a, std::int32_t b, std::int32_t c) : coords{a, b, c}, dim(3) {}

  static LatticeVector zero(int dim);

  Norm norm_sq() const {
    Norm s = 0;
    for (int i = 0; i < dim; ++i) s += Norm{coords[i]} * coords[i];
    return s;
  }
  bool is_zero() const { return coords[0] == 0 && coords[1] == 0 && coords[2] == 0; }

  LatticeVector operator+(const LatticeVector& o) const;
  LatticeVector operator-(const LatticeVector& o) const;
  LatticeVector operator-() const;

  // Lexicographic on coordinates.
  friend auto operator<=>(const LatticeVector& a, const LatticeVector& b) {
    return a.coords <=> b.coords;
  }
  friend bool operator==(const LatticeVector& a, const LatticeVector& b) {
    return a.coords == b.coords;
  }
};

std::int64_t dot(const LatticeVector& a, const LatticeVector& b);
std::string to_string(const LatticeVector& v);

struct SpectrumEntry {
  Norm m = 0;
  std::int64_t r = 0;  // number of lattice vectors with |ξ|² = m
  friend bool operator==(const SpectrumEntry&, const SpectrumEntry&) = default;
};

/// Consecutive spectrum norms m_{k-1} < m_k < m_{k+1}.
struct GapTriple {
  Norm prev = 0;
  Norm center = 0;
  Norm next = 0;
  friend bool operator==(const GapTriple&, const GapTriple&) = default;

  double length() const { return physical(next - center); }
  /// Physical width n_{k+1} - n_{k-1} of the double gap.
  double double_gap() const { return physical(next - prev); }
};

class SpectrumTable {
 public:
  SpectrumTable(int dim, Norm m_max, std::vector<SpectrumEntry> entries);

  int dim() const { return dim_; }
  Norm m_max() const { return m_max_; }
  std::span<const SpectrumEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  bool contains(Norm m) const;
  /// Throws OutOfRange for m > m_max; returns 0 for non-representable m.
  std::int64_t multiplicity(Norm m) const;
  /// Index of a representable norm; throws when m is absent.
  std::size_t index_of(Norm m) const;

  /// Number of lattice points with |ξ|² ≤ X (X clipped to m_max is an error).
  std::int64_t lattice_count(Norm X) const;
  /// Number of distinct representable norms ≤ X.
  std::size_t norm_count(Norm X) const;

  /// Triple centred on a representable m_k; needs both neighbours in the table.
  GapTriple gap_around(Norm m_k) const;

  std::string cache_file_name() const;
  void write_csv(std::ostream& out) const;
  static SpectrumTable read_csv(std::istream& in, int dim, Norm m_max);

  friend bool operator==(const SpectrumTable&, const SpectrumTable&) = default;

 private:
  int dim_;
  Norm m_max_;
  std::vector<SpectrumEntry> entries_;
  std::vector<std::int64_t> cumulative_;  // cumulative_[i] = Σ_{j≤i} r_j
};

SpectrumTable enumerate_spectrum(int dim, Norm m_max);

/// Reads spectrum_d{dim}_m{m_max}.csv from `dir` or builds and writes it.
SpectrumTable load_or_build_spectrum(const std::filesystem::path& dir, int dim, Norm m_max,
                                     bool* cache_hit = nullptr);

struct CircleCount {
  std::int64_t count = 0;
  double remainder = 0.0;  // count minus the ball volume (πX for d=2, 4π/3·X^{3/2} for d=3)
};

CircleCount circle_count(const SpectrumTable& table, double X);
CircleCount circle_count(int dim, double X);

/// Enclosing triple for a non-spectral normalized parameter λ/4π².
GapTriple neighbors(const SpectrumTable& table, double lambda_norm);

/// Exact annulus predicate |4π²|η|² - 4π²m_k| ≤ width, evaluated on the integer difference.
bool annulus_contains(Norm shifted_norm, Norm center_norm, double width);

struct AnnulusSpec {
  Norm center_norm = 0;
  double width = 0.0;  // physical units
  std::optional<LatticeVector> shift;  // ζ, zero when absent
};

/// All ξ with |4π²|ξ - ζ|² - 4π²m_k| ≤ L_0, lexicographically ordered.
std::vector<LatticeVector> annulus_points(const SpectrumTable& table, const AnnulusSpec& spec);

/// Norms n with |4π²(n - m_k)| ≤ width that are representable.
std::vector<Norm> annulus_norms(int dim, Norm center_norm, double width);

/// ξ ∈ B_ζ, i.e. |<ξ, ζ>| ≤ |ξ|^{2δ}.
bool bad_set_test(const LatticeVector& xi, const LatticeVector& zeta, double delta);

/// Lattice vectors with |ξ|² = m in lexicographic order.
std::vector<LatticeVector> shell_vectors(int dim, Norm m);

/// All ξ with |ξ|² ≤ R, grouped by shell in ascending norm and lexicographic
/// within each shell. Within a shell of size r, point i and point r-1-i are
/// negatives of each other.
class LatticeBall {
 public:
  struct Shell {
    Norm m;
    std::uint32_t begin;
    std::uint32_t end;
    std::uint32_t size() const { return end - begin; }
  };

  LatticeBall(int dim, Norm radius_sq);

  int dim() const { return dim_; }
  Norm radius_sq() const { return radius_sq_; }
  std::span<const Shell> shells() const { return shells_; }
  std::span<const LatticeVector> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  std::int32_t max_coord() const { return max_coord_; }

  /// Position of ξ in points(), if |ξ|² ≤ R.
  std::optional<std::size_t> find(const LatticeVector& xi) const;
  /// Shell index of norm m, if m is representable and ≤ R.
  std::optional<std::size_t> shell_index(Norm m) const;

 private:
  int dim_;
  Norm radius_sq_;
  std::int32_t max_coord_;
  std::vector<LatticeVector> points_;
  std::vector<Shell> shells_;
};

}  // namespace toruslab
