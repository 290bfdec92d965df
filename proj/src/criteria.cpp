#include "affdim/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace affdim {

namespace {

void require_planar_line(const MatrixTuple& t, const Subspace& w, const char* op) {
  if (t.d() != 2) fail(ErrorCode::invalid_input, std::string(op) + ": requires d = 2");
  if (w.ambient_dim() != 2 || w.dim() != 1) fail(ErrorCode::invalid_input, std::string(op) + ": W must be a line in R^2");
}

Vector flatten(const Matrix& a) { return Vector(a.data().begin(), a.data().end()); }

Matrix unflatten(std::span<const double> v, std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = v[i * n + j];
  return out;
}

// Adds v to the orthonormal set when its residual exceeds `tolerance` times
// its norm. Two Gram-Schmidt passes.
bool extend_basis(std::vector<Vector>& basis, Vector v, double tolerance) {
  const double original = norm(v);
  if (original == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vector& b : basis) {
      const double proj = dot(b, v);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * b[i];
    }
  }
  const double remaining = norm(v);
  if (remaining <= tolerance * original) return false;
  for (double& x : v) x /= remaining;
  basis.push_back(std::move(v));
  return true;
}

double trace(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) acc += a(i, i);
  return acc;
}

bool positive_definite(Matrix b) {
  const std::size_t n = b.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = b(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= b(j, k) * b(j, k);
    if (!(diag > 0.0)) return false;
    const double root = std::sqrt(diag);
    b(j, j) = root;
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = b(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= b(i, k) * b(j, k);
      b(i, j) = acc / root;
    }
  }
  return true;
}

// A real associative algebra spanned by the identity and traceless Y_i is a
// division algebra (R, C or H) when Y_i Y_j + Y_j Y_i = -2 B_ij I with B
// positive definite.
bool is_division_algebra(const std::vector<Matrix>& elements, std::size_t n) {
  std::vector<Vector> traceless;
  const Matrix id = Matrix::identity(n);
  for (const Matrix& y : elements) {
    Matrix shifted = y - (trace(y) / static_cast<double>(n)) * id;
    extend_basis(traceless, flatten(shifted), 1e-8);
  }
  const std::size_t r = traceless.size();
  if (r + 1 != elements.size()) return false;
  std::vector<Matrix> ys;
  for (const Vector& v : traceless) ys.push_back(unflatten(v, n));
  Matrix gram(r, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = i; j < r; ++j) {
      const Matrix anti = ys[i] * ys[j] + ys[j] * ys[i];
      const double scalar = trace(anti) / static_cast<double>(n);
      if (max_abs_diff(anti, scalar * id) > 1e-8) return false;
      gram(i, j) = gram(j, i) = -0.5 * scalar;
    }
  }
  return positive_definite(gram);
}

}  // namespace

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

const EvidenceItem* CriterionReport::find(const std::string& name) const {
  for (const EvidenceItem& item : evidence)
    if (item.name == name) return &item;
  return nullptr;
}

Subspace orbit_span(const std::vector<Matrix>& maps, const Subspace& w, std::optional<std::size_t> j_max) {
  const std::size_t d = w.ambient_dim();
  for (const Matrix& a : maps)
    if (a.rows() != d || a.cols() != d) fail(ErrorCode::invalid_input, "orbit_span: maps must be d x d");
  const std::size_t rounds = j_max.value_or(d - 1);
  Matrix basis = w.basis();
  for (std::size_t round = 0; round < rounds && basis.cols() < d; ++round) {
    std::vector<Vector> columns;
    for (std::size_t c = 0; c < basis.cols(); ++c) columns.push_back(basis.column(c));
    for (const Matrix& a : maps) {
      const Matrix image = a * basis;
      for (std::size_t c = 0; c < image.cols(); ++c) columns.push_back(image.column(c));
    }
    Matrix grown = orthonormal_span(Matrix::from_columns(columns));
    if (grown.cols() == basis.cols()) break;
    basis = std::move(grown);
  }
  return Subspace(basis);
}

std::optional<Subspace> largest_invariant_subspace(const std::vector<Matrix>& maps, const Subspace& w) {
  const std::size_t d = w.ambient_dim();
  double scale = 0.0;
  for (const Matrix& a : maps) scale = std::max(scale, a.max_abs());
  Matrix basis = w.basis();
  for (;;) {
    const std::size_t r = basis.cols();
    const Matrix complement = Matrix::identity(d) - basis * basis.transpose();
    Matrix stacked(maps.size() * d, r);
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const Matrix leak = complement * maps[i] * basis;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < r; ++b) stacked(i * d + a, b) = leak(a, b);
    }
    if (stacked.max_abs() <= kSubspaceTolerance * std::max(scale, 1e-300)) return Subspace(basis);
    const Matrix kernel = null_space(stacked);
    if (kernel.cols() == 0) return std::nullopt;
    basis = orthonormal_span(basis * kernel);
    if (basis.cols() == 0) return std::nullopt;
  }
}

bool is_invariant(const std::vector<Matrix>& maps, const Subspace& w) {
  return std::all_of(maps.begin(), maps.end(), [&](const Matrix& a) {
    return subspace_distance(image_subspace(a, w), w) <= kSubspaceTolerance;
  });
}

IrreducibilityDetail algebra_irreducible_detail(const MatrixTuple& t, std::size_t q) {
  if (q < 1 || q > t.d()) fail(ErrorCode::invalid_input, "algebra_irreducible: q must satisfy 1 <= q <= d");
  IrreducibilityDetail out;
  const std::size_t n = binomial(t.d(), q);
  out.wedge_dim = n;
  const std::size_t full = n * n;
  if (full > 1024)
    fail(ErrorCode::resource_limit, "algebra_irreducible: C(d,q)^2 = " + std::to_string(full) + " exceeds the cap of 1024");

  std::vector<Matrix> generators;
  for (const Matrix& a : t.matrices()) {
    Matrix g = exterior_power(a, q);
    g *= 1.0 / g.max_abs();
    generators.push_back(std::move(g));
  }

  std::vector<Vector> basis;
  std::vector<Matrix> frontier{Matrix::identity(n)};
  extend_basis(basis, flatten(frontier.front()), 1e-10);
  const std::size_t max_rounds = full - 1;
  while (!frontier.empty() && basis.size() < full && out.rounds < max_rounds) {
    ++out.rounds;
    std::vector<Matrix> next;
    for (const Matrix& f : frontier) {
      for (const Matrix& g : generators) {
        Matrix product = f * g;
        const double size = norm(product.data());
        if (size == 0.0) continue;
        product *= 1.0 / size;
        if (extend_basis(basis, flatten(product), 1e-10)) next.push_back(std::move(product));
        if (basis.size() == full) break;
      }
      if (basis.size() == full) break;
    }
    frontier = std::move(next);
  }
  out.algebra_dim = basis.size();
  if (out.algebra_dim == full) {
    out.irreducible = true;
    return out;
  }

  // Commutant {X : G X = X G for all generators}, as a null space in vec form.
  Matrix system(generators.size() * full, full);
  for (std::size_t g = 0; g < generators.size(); ++g) {
    const Matrix& a = generators[g];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t row = g * full + i * n + j;
        for (std::size_t c = 0; c < n; ++c) {
          system(row, c * n + j) += a(i, c);
          system(row, i * n + c) -= a(c, j);
        }
      }
    }
  }
  const Matrix kernel = null_space(system);
  out.commutant_dim = kernel.cols();
  std::vector<Matrix> commutant;
  for (std::size_t c = 0; c < kernel.cols(); ++c) commutant.push_back(unflatten(kernel.column(c), n));
  const std::size_t dc = out.commutant_dim;
  out.irreducible = (dc == 1 || dc == 2 || dc == 4) && out.algebra_dim * dc == full &&
                    is_division_algebra(commutant, n);
  return out;
}

bool algebra_irreducible(const MatrixTuple& t, std::size_t q) { return algebra_irreducible_detail(t, q).irreducible; }

double moran_root(const std::vector<double>& ratios, double tolerance) {
  auto f = [&](double s) {
    double acc = 0.0;
    for (double r : ratios) acc += std::pow(std::abs(r), s);
    return acc - 1.0;
  };
  for (double r : ratios)
    if (!(std::abs(r) > 0.0 && std::abs(r) < 1.0)) fail(ErrorCode::invalid_input, "moran_root: ratios must satisfy 0 < |r| < 1");
  double lo = 0.0, hi = 50.0;
  if (f(hi) >= 0.0) return hi;
  if (f(lo) <= 0.0) return lo;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

CriterionReport planar_set_drop_criterion(const MatrixTuple& t, const Subspace& w) {
  require_planar_line(t, w, "planar_set_drop_criterion");
  CriterionReport out;
  out.criterion = "planar-set-drop";
  out.tolerances = {{"subspace", kSubspaceTolerance}, {"root", 1e-12}};
  const std::vector<Matrix> adjoints = t.transposes();

  Vector distances;
  for (const Matrix& a : adjoints) distances.push_back(subspace_distance(image_subspace(a, w), w));
  out.evidence.push_back({"invariance_distance", distances, ""});
  if (*std::max_element(distances.begin(), distances.end()) > kSubspaceTolerance) {
    out.verdict = Verdict::fails;
    out.summary = "property (1) fails: W is not invariant under every T_i^*";
    return out;
  }

  const Vector u = w.basis().column(0);
  Vector a, b;
  for (std::size_t i = 0; i < t.m(); ++i) {
    const double ai = dot(u, adjoints[i] * u);
    a.push_back(ai);
    b.push_back(determinant(t.matrices()[i]) / ai);
  }
  const double t_root = moran_root(a);
  const double s_root = moran_root(b);
  auto residual = [](const Vector& xs, double r) {
    double acc = 0.0;
    for (double x : xs) acc += std::pow(std::abs(x), r);
    return acc - 1.0;
  };
  out.evidence.push_back({"a", a, "eigenvalue of T_i^* on W"});
  out.evidence.push_back({"b", b, "det(T_i) / a_i"});
  out.evidence.push_back({"t", {t_root}, "sum |a_i|^t = 1"});
  out.evidence.push_back({"s", {s_root}, "sum |b_i|^s = 1"});
  out.evidence.push_back({"root_residuals", {residual(a, t_root), residual(b, s_root)}, ""});
  const bool drop = t_root < std::min(1.0, s_root);
  out.verdict = drop ? Verdict::holds : Verdict::fails;
  out.summary = drop ? "W is invariant and t < min{1, s}: the projected affinity dimension drops"
                     : "W is invariant but t >= min{1, s}: no drop";
  return out;
}

PlanarMeasureReport planar_measure_drop_criterion(const MatrixTuple& t, const Subspace& w, const MeasureSpec& mu) {
  require_planar_line(t, w, "planar_measure_drop_criterion");
  if (mu.m() != t.m()) fail(ErrorCode::invalid_input, "planar_measure_drop_criterion: alphabet mismatch");
  const double h = entropy(mu);
  const Vector& p = mu.p();
  const std::vector<Matrix> adjoints = t.transposes();
  PlanarMeasureReport out;

  CriterionReport& one = out.part1;
  one.criterion = "planar-measure-drop";
  one.tolerances = {{"subspace", kSubspaceTolerance}};
  one.evidence.push_back({"entropy", {h}, "nats"});
  bool invariant = true;
  Vector distances;
  for (std::size_t i = 0; i < t.m(); ++i) {
    if (p[i] <= 0.0) continue;
    const double dist = subspace_distance(image_subspace(adjoints[i], w), w);
    distances.push_back(dist);
    invariant = invariant && dist <= kSubspaceTolerance;
  }
  one.evidence.push_back({"invariance_distance", distances, "letters in the support"});
  if (!invariant) {
    one.verdict = Verdict::fails;
    one.summary = "condition (a) fails: W is not invariant under T_i^* on the support";
  } else {
    const Vector u = w.basis().column(0);
    double lambda_a = 0.0, lambda_b = 0.0;
    for (std::size_t i = 0; i < t.m(); ++i) {
      if (p[i] <= 0.0) continue;
      const double ai = dot(u, adjoints[i] * u);
      lambda_a += p[i] * std::log(std::abs(ai));
      lambda_b += p[i] * std::log(std::abs(determinant(t.matrices()[i]) / ai));
    }
    one.evidence.push_back({"lambda_w", {lambda_a}, "sum mu([i]) log|a_i|"});
    one.evidence.push_back({"lambda_other", {lambda_b}, "sum mu([i]) log|b_i|"});
    const bool b = lambda_a < lambda_b;
    const bool c = h > 0.0 && h + lambda_a < 0.0;
    one.evidence.push_back({"conditions", {1.0, b ? 1.0 : 0.0, c ? 1.0 : 0.0}, "(a), (b), (c)"});
    one.verdict = b && c ? Verdict::holds : Verdict::fails;
    one.summary = b && c ? "all conditions hold: S_upper < min{1, dim_LY}" : "condition (b) or (c) fails";
  }

  CriterionReport& two = out.part2;
  two.criterion = "planar-measure-nonexact";
  two.tolerances = {{"subspace", kSubspaceTolerance}};
  two.evidence.push_back({"entropy", {h}, "nats"});
  const std::optional<LyapunovSpectrum> exact = lyapunov_exact(t, mu);
  if (!exact) {
    two.verdict = Verdict::inconclusive;
    two.summary = "E_2(x) is only computed for diagonal or antidiagonal tuples";
    return out;
  }
  const double l1 = exact->exponents[0], l2 = exact->exponents[1];
  two.evidence.push_back({"exponents", exact->exponents, to_string(exact->mode)});
  const bool split = l1 > l2;
  const Subspace x_axis = Subspace::coordinate(2, {0});
  const Subspace y_axis = Subspace::coordinate(2, {1});
  const bool on_x = subspace_distance(w, x_axis) <= kSubspaceTolerance;
  const bool on_y = subspace_distance(w, y_axis) <= kSubspaceTolerance;
  double fraction = 0.0;
  if (split && exact->mode == LyapunovMode::exact_diagonal) {
    // E_2 is the coordinate axis carrying the smaller average.
    double avg_x = 0.0, avg_y = 0.0;
    for (std::size_t i = 0; i < t.m(); ++i) {
      if (p[i] <= 0.0) continue;
      avg_x += p[i] * std::log(std::abs(t.matrices()[i](0, 0)));
      avg_y += p[i] * std::log(std::abs(t.matrices()[i](1, 1)));
    }
    fraction = (avg_x < avg_y ? on_x : on_y) ? 1.0 : 0.0;
  } else if (split) {
    // Antidiagonal with even period: the two parity components (mass 1/2
    // each) have E_2 on opposite axes.
    fraction = on_x || on_y ? 0.5 : 0.0;
  }
  two.evidence.push_back({"mu_E2_equals_W", {fraction}, ""});
  const bool c = h > 0.0 && h + l2 < 0.0;
  const bool b = fraction > 0.0 && fraction < 1.0;
  two.evidence.push_back({"conditions", {split ? 1.0 : 0.0, b ? 1.0 : 0.0, c ? 1.0 : 0.0}, "(a), (b), (c)"});
  two.verdict = split && b && c ? Verdict::holds : Verdict::fails;
  two.summary = two.verdict == Verdict::holds ? "S_upper != S_lower" : "S_upper = S_lower";
  return out;
}

LineProjection line_projection_dim(const MatrixTuple& t, const Subspace& w, const PressureConfig& config) {
  if (w.ambient_dim() != t.d() || w.dim() != 1)
    fail(ErrorCode::invalid_input, "line_projection_dim: W must be a line in R^d");
  const std::vector<Matrix> adjoints = t.transposes();
  const Subspace x = orbit_span(adjoints, w);
  const Matrix& basis = x.basis();
  std::vector<Matrix> restricted;
  for (const Matrix& a : adjoints) {
    Matrix r = basis.transpose() * a * basis;
    if (max_abs_diff(a * basis, basis * r) > 1e-10)
      fail(ErrorCode::internal_consistency, "line_projection_dim: orbit span is not invariant");
    restricted.push_back(std::move(r));
  }
  LineProjection out;
  out.orbit_dim = x.dim();
  out.estimate = affinity_dim(MatrixTuple(std::move(restricted)), config);
  DimensionEstimate& e = out.estimate;
  if (e.lo >= 1.0) {
    e.value = e.lo = e.hi = 1.0;
    e.clamped = true;
  } else if (e.value > 1.0) {
    e.value = e.hi = 1.0;
    e.clamped = true;
  }
  e.hi = std::min(e.hi, 1.0);
  return out;
}

CriterionReport d3_necessary_conditions(const MatrixTuple& t, const Subspace& w) {
  if (t.d() != 3 || w.ambient_dim() != 3) fail(ErrorCode::invalid_input, "d3_necessary_conditions: requires d = 3");
  const std::size_t k = w.dim();
  if (k != 1 && k != 2) fail(ErrorCode::invalid_input, "d3_necessary_conditions: W must have dimension 1 or 2");
  const std::vector<Matrix> adjoints = t.transposes();
  CriterionReport out;
  out.criterion = "d3-necessary";
  out.tolerances = {{"subspace", kSubspaceTolerance}};
  out.evidence.push_back({"k", {static_cast<double>(k)}, ""});
  if (is_invariant(adjoints, w)) {
    out.verdict = Verdict::holds;
    out.summary = k == 1 ? "(i): W is invariant under every T_i^*" : "(ii): W is invariant under every T_i^*";
    return out;
  }
  if (k == 1) {
    const Subspace v = orbit_span(adjoints, w);
    out.evidence.push_back({"orbit_span_dim", {static_cast<double>(v.dim())}, ""});
    if (v.dim() == 2) {
      out.evidence.push_back({"invariant_plane_basis", flatten(v.basis().transpose()), "rows are basis vectors"});
      out.verdict = Verdict::holds;
      out.summary = "(i): W lies in an invariant plane V";
      return out;
    }
  } else {
    const std::optional<Subspace> u = largest_invariant_subspace(adjoints, w);
    out.evidence.push_back({"invariant_subspace_dim", {u ? static_cast<double>(u->dim()) : 0.0}, ""});
    if (u && u->dim() == 1) {
      out.evidence.push_back({"invariant_line_basis", u->basis().column(0), ""});
      out.verdict = Verdict::holds;
      out.summary = "(ii): W contains an invariant line V";
      return out;
    }
  }
  out.verdict = Verdict::fails;
  out.summary = "drop impossible: no invariant subspace of the required form";
  return out;
}

CriterionReport antidiagonal_nonexact_criterion(const MatrixTuple& t) {
  if (t.d() != 2) fail(ErrorCode::invalid_input, "antidiagonal_nonexact_criterion: requires d = 2");
  Vector ratios;
  for (std::size_t i = 0; i < t.m(); ++i) {
    const Matrix& a = t.matrices()[i];
    if (a(0, 0) != 0.0 || a(1, 1) != 0.0)
      fail(ErrorCode::invalid_input, "antidiagonal_nonexact_criterion: matrix " + std::to_string(i + 1) + " is not antidiagonal");
    ratios.push_back(std::abs(a(0, 1) / a(1, 0)));
  }
  bool distinct = false;
  for (std::size_t i = 0; i < ratios.size() && !distinct; ++i)
    for (std::size_t j = i + 1; j < ratios.size() && !distinct; ++j)
      distinct = std::abs(ratios[i] - ratios[j]) > 1e-12 * std::max(ratios[i], ratios[j]);
  CriterionReport out;
  out.criterion = "antidiagonal-nonexact";
  out.tolerances = {{"ratio_relative", 1e-12}};
  out.evidence.push_back({"ratios", ratios, "|c_i / d_i|"});
  out.verdict = distinct ? Verdict::holds : Verdict::fails;
  out.summary = distinct ? "ratios differ: some ergodic measure and line give S_upper != S_lower"
                         : "all ratios equal: S_upper = S_lower for every ergodic measure and line";
  return out;
}

ValueBounds distinct_value_bounds(std::size_t d, std::size_t k, std::size_t ell, std::size_t ell_prime) {
  if (k < 1 || k + 1 > d) fail(ErrorCode::invalid_input, "distinct_value_bounds: need 1 <= k <= d - 1");
  if (ell > k || ell_prime > k) fail(ErrorCode::invalid_input, "distinct_value_bounds: need ell, ell' <= k");
  ValueBounds out;
  out.set_bound = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t q = std::max<std::size_t>(ell, 1); q <= k; ++q)
    out.set_bound = std::min(out.set_bound, binomial(d, q) - binomial(k, q) + 1);
  out.measure_bound = binomial(d + ell_prime - k, ell_prime);
  return out;
}

}  // namespace affdim
