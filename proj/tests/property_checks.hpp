#pragma once

// Randomised property checks shared by the property suite and the acceptance
// binary. Each check runs a fixed number of generated cases and reports how
// many of them violated the property, with a short note on the first one.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "affdim/linalg.hpp"
#include "affdim/pressure.hpp"
#include "support.hpp"

namespace testing {

struct CheckSummary {
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  void record(bool ok, const std::string& what) {
    ++cases;
    if (ok) return;
    if (failures == 0) first_failure = what;
    ++failures;
  }
  [[nodiscard]] bool passed() const { return cases > 0 && failures == 0; }
};

inline bool close_relative(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Submultiplicativity, the s-t interpolation bounds, agreement with the
// exterior-power route and transpose invariance of the singular value function.
inline CheckSummary check_singular_value_function(std::uint64_t seed, std::size_t pairs) {
  Gen gen(seed);
  CheckSummary out;
  for (std::size_t trial = 0; trial < pairs; ++trial) {
    const std::size_t d = gen.index(1, 5);
    const Matrix a = 0.6 * gen.matrix(d, d);
    const Matrix b = 0.6 * gen.matrix(d, d);
    const double s = gen.uniform(0.0, static_cast<double>(d));
    const double t = gen.uniform(s, static_cast<double>(d));
    std::ostringstream tag;
    tag << "trial " << trial << " d=" << d << " s=" << s;

    const double fa = affdim::svf(a, s);
    out.record(affdim::svf(a * b, s) <= fa * affdim::svf(b, s) * (1.0 + 1e-9), tag.str() + " submultiplicative");

    const affdim::Vector sv = affdim::singular_values(a);
    const double ft = affdim::svf(a, t);
    const double lower = fa * std::pow(sv.back(), t - s);
    const double upper = fa * std::pow(sv.front(), t - s);
    out.record(lower <= ft * (1.0 + 1e-9) + 1e-300 && ft <= upper * (1.0 + 1e-9) + 1e-300, tag.str() + " interpolation");

    out.record(close_relative(fa, affdim::svf_via_wedge(a, s), 1e-9), tag.str() + " wedge route");
    out.record(close_relative(fa, affdim::svf(a.transpose(), s), 1e-10), tag.str() + " transpose");
  }
  return out;
}

// Multiplicativity of exterior powers and the norm identity.
inline CheckSummary check_exterior_algebra(std::uint64_t seed, std::size_t pairs) {
  Gen gen(seed);
  CheckSummary out;
  for (std::size_t trial = 0; trial < pairs; ++trial) {
    const std::size_t d = gen.index(2, 5);
    const std::size_t k = gen.index(1, d);
    const Matrix a = 0.6 * gen.matrix(d, d);
    const Matrix b = 0.6 * gen.matrix(d, d);
    std::ostringstream tag;
    tag << "trial " << trial << " d=" << d << " k=" << k;

    const Matrix lhs = affdim::exterior_power(a * b, k);
    const Matrix rhs = affdim::exterior_power(a, k) * affdim::exterior_power(b, k);
    out.record(affdim::max_abs_diff(lhs, rhs) <= 1e-10, tag.str() + " multiplicative");

    const affdim::Vector sv = affdim::singular_values(a);
    double product = 1.0;
    for (std::size_t i = 0; i < k; ++i) product *= sv[i];
    out.record(close_relative(affdim::spectral_norm(affdim::exterior_power(a, k)), product, 1e-10), tag.str() + " norm");
  }
  return out;
}

// Finite-n Lipschitz sandwich, phi below psi for depths 0..2, and the projected
// affinity dimension below min{k, affinity dimension} up to bracket widths.
inline CheckSummary check_pressure(std::uint64_t seed, std::size_t tuples) {
  Gen gen(seed);
  CheckSummary out;
  for (std::size_t trial = 0; trial < tuples; ++trial) {
    const std::size_t d = gen.index(2, 3);
    const std::size_t m = gen.index(2, 3);
    const affdim::MatrixTuple t = gen.tuple(m, d, 0.1, 0.85);
    const std::size_t k = gen.index(1, d - 1);
    const affdim::Subspace w = gen.subspace(d, k);
    const std::size_t n = m == 2 ? 6 : 4;
    std::ostringstream tag;
    tag << "trial " << trial << " d=" << d << " m=" << m << " k=" << k;

    const double t1 = gen.uniform(0.0, static_cast<double>(k));
    const double t2 = gen.uniform(t1, static_cast<double>(k));
    const double gap = affdim::phi_sum_rate(t, w, t1, n) - affdim::phi_sum_rate(t, w, t2, n);
    const double lo = (t2 - t1) * std::log(1.0 / t.alpha_plus()) - 1e-9;
    const double hi = (t2 - t1) * std::log(1.0 / t.alpha_minus()) + 1e-9;
    out.record(lo <= gap && gap <= hi, tag.str() + " sandwich");

    const double s = gen.uniform(0.0, static_cast<double>(k));
    const double phi = affdim::phi_sum_rate(t, w, s, n);
    for (std::size_t depth = 0; depth <= 2; ++depth)
      out.record(phi <= affdim::psi_sum_rate(t, w, s, n, depth) + 1e-9, tag.str() + " phi below psi");

    affdim::PressureConfig cfg;
    cfg.schedule = {n / 2, n};
    const affdim::DimensionEstimate full = affdim::affinity_dim(t, cfg);
    const affdim::DimensionEstimate proj = affdim::proj_affinity_dim(t, w, cfg);
    out.record(proj.value <= std::min(static_cast<double>(k), full.value) + full.width() + proj.width(),
               tag.str() + " projection bound");
  }
  return out;
}

// pivot_vector against an independent elimination on the coordinate matrix,
// which is computed by Cramer's rule.
inline CheckSummary check_pivots(std::uint64_t seed, std::size_t pairs) {
  Gen gen(seed);
  CheckSummary out;
  for (std::size_t trial = 0; trial < pairs; ++trial) {
    const std::size_t d = gen.index(1, 6);
    const std::size_t k = gen.index(1, d);
    const Matrix basis = gen.well_conditioned(d, 0.5, 2.0);

    // an echelon coordinate matrix with random pivot columns, then mixed rows
    std::vector<std::size_t> columns(d);
    std::iota(columns.begin(), columns.end(), 0);
    std::shuffle(columns.begin(), columns.end(), gen.engine());
    columns.resize(k);
    std::sort(columns.begin(), columns.end());
    Matrix echelon(k, d);
    for (std::size_t r = 0; r < k; ++r) {
      echelon(r, columns[r]) = 1.0;
      for (std::size_t c = columns[r] + 1; c < d; ++c)
        if (std::find(columns.begin(), columns.end(), c) == columns.end() && gen.coin(0.7)) echelon(r, c) = gen.normal();
    }
    const Matrix coords = gen.well_conditioned(k, 0.5, 2.0) * echelon;
    std::vector<affdim::Vector> spanning;
    const Matrix coords_t = coords.transpose();
    for (std::size_t r = 0; r < k; ++r) spanning.push_back(basis * coords_t.column(r));
    const affdim::Subspace w = affdim::Subspace::span(spanning);

    Matrix x(k, d);
    const Matrix wb = w.basis();
    for (std::size_t j = 0; j < k; ++j) {
      const affdim::Vector y = cramer_solve(basis, wb.column(j));
      for (std::size_t c = 0; c < d; ++c) x(j, c) = y[c];
    }
    std::vector<std::size_t> want = oracle_pivots(x);
    const std::vector<std::size_t> got = affdim::pivot_vector(w, basis).positions;
    std::ostringstream tag;
    tag << "trial " << trial << " d=" << d << " k=" << k;
    out.record(got == want, tag.str());
  }
  return out;
}

}  // namespace testing
