#pragma once

// Structural tests on tuples: invariant subspaces, irreducibility of exterior
// powers, the planar and three-dimensional dimension-drop criteria, the
// antidiagonal non-exactness criterion, and the finitely-many-values bounds.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "affdim/ergodic.hpp"
#include "affdim/linalg.hpp"
#include "affdim/pressure.hpp"
#include "affdim/words.hpp"

namespace affdim {

enum class Verdict { holds, fails, inconclusive };
const char* to_string(Verdict verdict);

struct EvidenceItem {
  std::string name;
  std::vector<double> values;
  std::string text;
};

struct CriterionReport {
  std::string criterion;
  Verdict verdict = Verdict::inconclusive;
  std::string summary;
  std::vector<EvidenceItem> evidence;
  std::vector<std::pair<std::string, double>> tolerances;

  /// Looks up an evidence entry by name; nullptr when absent.
  [[nodiscard]] const EvidenceItem* find(const std::string& name) const;
};

/// Tolerance for subspace equality via projector distance.
inline constexpr double kSubspaceTolerance = 1e-10;

/// span of W and all images A_J W for |J| <= j_max (default d - 1), grown
/// round by round until the dimension stops increasing.
Subspace orbit_span(const std::vector<Matrix>& maps, const Subspace& w, std::optional<std::size_t> j_max = std::nullopt);

/// Largest subspace U of W with A_i U contained in U for every map; empty when it is {0}.
std::optional<Subspace> largest_invariant_subspace(const std::vector<Matrix>& maps, const Subspace& w);

/// True when every map sends W onto W within kSubspaceTolerance.
bool is_invariant(const std::vector<Matrix>& maps, const Subspace& w);

struct IrreducibilityDetail {
  bool irreducible = false;
  std::size_t wedge_dim = 0;       ///< D = C(d, q)
  std::size_t algebra_dim = 0;     ///< dimension of the generated algebra
  std::size_t commutant_dim = 0;   ///< 0 when the algebra is the full matrix algebra
  std::size_t rounds = 0;
};

/// Irreducibility over R of {T_i^{wedge q}}. The generated algebra is grown
/// from words until its span stabilises. Full dimension D^2 means
/// irreducible; otherwise the commutant must be a division algebra whose
/// dimension times the algebra dimension equals D^2.
IrreducibilityDetail algebra_irreducible_detail(const MatrixTuple& t, std::size_t q);
bool algebra_irreducible(const MatrixTuple& t, std::size_t q);

/// Unique t > 0 with sum |x_i|^t = 1 for 0 < |x_i| < 1, by bisection on [0, 50].
double moran_root(const std::vector<double>& ratios, double tolerance = 1e-12);

CriterionReport planar_set_drop_criterion(const MatrixTuple& t, const Subspace& w);

struct PlanarMeasureReport {
  CriterionReport part1;  ///< S_upper < min{1, dim_LY}
  CriterionReport part2;  ///< S_upper != S_lower
};

/// Part 2 needs the Oseledets direction E_2(x); it is decided only for
/// all-diagonal and all-antidiagonal tuples and is inconclusive otherwise.
PlanarMeasureReport planar_measure_drop_criterion(const MatrixTuple& t, const Subspace& w, const MeasureSpec& mu);

struct LineProjection {
  DimensionEstimate estimate;
  std::size_t orbit_dim = 0;
};

/// min{1, dim_AFF of the adjoints restricted to the orbit span of W}, k = 1.
LineProjection line_projection_dim(const MatrixTuple& t, const Subspace& w, const PressureConfig& config = {});

/// Screens the d = 3 necessary conditions for a dimension drop. The verdict
/// holds when one of the scenarios is present and fails ("drop impossible")
/// otherwise. The scenario is in the summary.
CriterionReport d3_necessary_conditions(const MatrixTuple& t, const Subspace& w);

CriterionReport antidiagonal_nonexact_criterion(const MatrixTuple& t);

struct ValueBounds {
  std::uint64_t set_bound = 0;
  std::uint64_t measure_bound = 0;
};

/// set_bound = min_{max(l,1) <= q <= k} C(d,q) - C(k,q) + 1; measure_bound = C(d + l' - k, l').
ValueBounds distinct_value_bounds(std::size_t d, std::size_t k, std::size_t ell, std::size_t ell_prime);

}  // namespace affdim
