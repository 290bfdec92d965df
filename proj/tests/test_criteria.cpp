#include <cmath>

#include "doctest.h"

#include "affdim/criteria.hpp"
#include "support.hpp"

using namespace affdim;

namespace {

MatrixTuple example_tuple() {
  return MatrixTuple({Matrix{{0.0, 0.4}, {0.2, 0.0}}, Matrix{{0.0, 0.4}, {0.2, 0.0}}, Matrix{{0.0, 0.2}, {0.4, 0.0}}});
}

MeasureSpec example_measure() {
  return MeasureSpec::markov({0.25, 0.25, 0.5}, Matrix{{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {0.5, 0.5, 0.0}});
}

Matrix rotation(double theta, double rho) {
  return Matrix{{rho * std::cos(theta), -rho * std::sin(theta)}, {rho * std::sin(theta), rho * std::cos(theta)}};
}

const Subspace x_axis = Subspace::coordinate(2, {0});

double value_of(const CriterionReport& r, const std::string& name, std::size_t i = 0) {
  const EvidenceItem* item = r.find(name);
  REQUIRE(item != nullptr);
  REQUIRE(item->values.size() > i);
  return item->values[i];
}

}  // namespace

TEST_SUITE("criteria") {
  TEST_CASE("orbit spans") {
    const std::vector<Matrix> diag = {Matrix{{0.5, 0.0}, {0.0, 0.3}}, Matrix{{0.2, 0.0}, {0.0, 0.6}}};
    CHECK(orbit_span(diag, x_axis).dim() == 1);
    CHECK(orbit_span(example_tuple().transposes(), x_axis).dim() == 2);
    CHECK(orbit_span({rotation(std::sqrt(2.0), 0.5), rotation(1.0, 0.4)}, x_axis).dim() == 2);
  }

  TEST_CASE("orbit spans are invariant and stable") {
    testing::Gen gen(101);
    for (int trial = 0; trial < 20; ++trial) {
      // block upper-triangular maps conjugated by a random change of basis
      const std::size_t d = 4;
      const Matrix c = gen.well_conditioned(d, 0.5, 2.0);
      const Matrix c_inv = solve(c, Matrix::identity(d));
      std::vector<Matrix> maps;
      for (int i = 0; i < 2; ++i) {
        Matrix b = gen.matrix(d, d);
        b(2, 0) = b(2, 1) = b(3, 0) = b(3, 1) = 0.0;
        maps.push_back(c * b * c_inv);
      }
      const Subspace w = Subspace::span({c.column(0)});
      const Subspace x = orbit_span(maps, w);
      CHECK(x.dim() <= 2);
      CHECK(is_invariant(maps, x));
      CHECK(orbit_span(maps, x, d).dim() == x.dim());
    }
  }

  TEST_CASE("largest invariant subspace") {
    const std::vector<Matrix> diag = {Matrix{{0.5, 0.0, 0.0}, {0.0, 0.3, 0.0}, {0.0, 0.0, 0.2}},
                                      Matrix{{0.4, 0.0, 0.0}, {0.0, 0.1, 0.0}, {0.0, 0.0, 0.6}}};
    const Subspace w = Subspace::span({Vector{1.0, 1.0, 0.0}, Vector{0.0, 0.0, 1.0}});
    const auto u = largest_invariant_subspace(diag, w);
    REQUIRE(u.has_value());
    CHECK(u->dim() == 1);
    CHECK(subspace_distance(*u, Subspace::coordinate(3, {2})) < 1e-10);
    CHECK_FALSE(largest_invariant_subspace(example_tuple().transposes(), x_axis).has_value());
  }

  TEST_CASE("irreducibility") {
    CHECK(algebra_irreducible(MatrixTuple({rotation(0.7, 0.5), rotation(1.9, 0.4)}), 1));
    CHECK_FALSE(algebra_irreducible(MatrixTuple({Matrix{{0.5, 0.2}, {0.0, 0.3}}, Matrix{{0.4, -0.1}, {0.0, 0.2}}}), 1));
    CHECK(algebra_irreducible(example_tuple(), 1));
    CHECK(algebra_irreducible(example_tuple(), 2));

    const IrreducibilityDetail rot = algebra_irreducible_detail(MatrixTuple({rotation(0.7, 0.5), rotation(1.9, 0.4)}), 1);
    // rotations generate a copy of the complex numbers: irreducible over R with a 2-dimensional commutant
    CHECK(rot.irreducible);
    CHECK(rot.algebra_dim == 2);
    CHECK(rot.commutant_dim == 2);
  }

  TEST_CASE("irreducibility agrees with constructed reducible and generic tuples") {
    testing::Gen gen(103);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t d = 3;
      const Matrix c = gen.well_conditioned(d, 0.5, 2.0);
      const Matrix c_inv = solve(c, Matrix::identity(d));
      std::vector<Matrix> maps;
      for (int i = 0; i < 2; ++i) {
        Matrix b = gen.well_conditioned(d, 0.3, 0.9);
        b(1, 0) = b(2, 0) = 0.0;
        const double scale = 0.8 / spectral_norm(c * b * c_inv);
        maps.push_back(scale * (c * b * c_inv));
      }
      CHECK_FALSE(algebra_irreducible(MatrixTuple(maps), 1));
      CHECK(algebra_irreducible(gen.tuple(2, 3), 1));
    }
  }

  TEST_CASE("Moran roots") {
    CHECK(moran_root({1.0 / 3.0, 1.0 / 3.0}) == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));
    const double r = moran_root({0.5, 0.2, 0.1});
    CHECK(std::abs(std::pow(0.5, r) + std::pow(0.2, r) + std::pow(0.1, r) - 1.0) <= 1e-10);
    CHECK(r == doctest::Approx(testing::oracle_moran({0.5, 0.2, 0.1})).epsilon(1e-10));
  }

  TEST_CASE("planar set criterion") {
    const Matrix a{{0.2, 0.0}, {0.0, 0.45}};
    const CriterionReport drop = planar_set_drop_criterion(MatrixTuple({a, a}), x_axis);
    CHECK(drop.verdict == Verdict::holds);
    CHECK(value_of(drop, "a", 0) == doctest::Approx(0.2));
    CHECK(value_of(drop, "b", 1) == doctest::Approx(0.45));
    CHECK(value_of(drop, "t") == doctest::Approx(std::log(2.0) / std::log(5.0)).epsilon(1e-10));
    CHECK(value_of(drop, "s") == doctest::Approx(std::log(2.0) / std::log(20.0 / 9.0)).epsilon(1e-10));
    for (double res : drop.find("root_residuals")->values) CHECK(std::abs(res) <= 1e-10);

    const CriterionReport moved = planar_set_drop_criterion(example_tuple(), x_axis);
    CHECK(moved.verdict == Verdict::fails);

    const Matrix b{{0.45, 0.0}, {0.0, 0.2}};
    CHECK(planar_set_drop_criterion(MatrixTuple({b, b}), x_axis).verdict == Verdict::fails);
  }

  TEST_CASE("planar measure criterion") {
    const Matrix a{{0.2, 0.0}, {0.0, 0.45}};
    const PlanarMeasureReport uniform = planar_measure_drop_criterion(MatrixTuple({a, a}), x_axis, MeasureSpec::uniform(2));
    // h = log 2, Lambda_2 = log 0.2 < Lambda_1 = log 0.45, h + Lambda_2 < 0
    CHECK(uniform.part1.verdict == Verdict::holds);

    const PlanarMeasureReport point = planar_measure_drop_criterion(MatrixTuple({a, a}), x_axis, MeasureSpec::bernoulli({1.0, 0.0}));
    CHECK(point.part1.verdict == Verdict::fails);

    const PlanarMeasureReport ex = planar_measure_drop_criterion(example_tuple(), x_axis, example_measure());
    CHECK(ex.part1.verdict == Verdict::fails);
    CHECK(ex.part2.verdict == Verdict::holds);

    testing::Gen gen(107);
    const PlanarMeasureReport generic = planar_measure_drop_criterion(gen.tuple(2, 2), x_axis, MeasureSpec::uniform(2));
    CHECK(generic.part2.verdict == Verdict::inconclusive);
  }

  TEST_CASE("line projections") {
    const MatrixTuple diag({Matrix{{0.5, 0.0}, {0.0, 1.0 / 3.0}}, Matrix{{1.0 / 3.0, 0.0}, {0.0, 0.5}}});
    const LineProjection lp = line_projection_dim(diag, x_axis);
    CHECK(lp.orbit_dim == 1);
    CHECK(std::abs(lp.estimate.value - testing::oracle_moran({0.5, 1.0 / 3.0})) < 1e-3);

    const MatrixTuple ex = example_tuple();
    const LineProjection full = line_projection_dim(ex, x_axis);
    CHECK(full.orbit_dim == 2);
    CHECK(std::abs(full.estimate.value - std::min(1.0, affinity_dim(ex).value)) < 1e-3);

    const MatrixTuple tri({Matrix{{0.3, 0.0}, {0.2, 0.6}}, Matrix{{0.25, 0.0}, {-0.1, 0.5}}});
    // x-axis is invariant under the transposes with eigenvalues 0.3 and 0.25
    const LineProjection inv = line_projection_dim(tri, x_axis);
    CHECK(inv.orbit_dim == 1);
    CHECK(std::abs(inv.estimate.value - std::min(1.0, testing::oracle_moran({0.3, 0.25}))) < 1e-3);
  }

  TEST_CASE("three-dimensional screen") {
    testing::Gen gen(109);
    const CriterionReport generic = d3_necessary_conditions(gen.tuple(2, 3), gen.subspace(3, 1));
    CHECK(generic.verdict == Verdict::fails);

    // the transposes are upper triangular, so span{e_1, e_2} is invariant
    const MatrixTuple block({Matrix{{0.5, 0.0, 0.0}, {0.1, 0.4, 0.0}, {0.2, 0.3, 0.3}},
                             Matrix{{0.3, 0.0, 0.0}, {-0.2, 0.6, 0.0}, {0.1, 0.1, 0.4}}});
    const CriterionReport contained = d3_necessary_conditions(block, Subspace::span({Vector{0.5, 1.0, 0.0}}));
    CHECK(contained.verdict == Verdict::holds);

    const MatrixTuple diag({Matrix{{0.5, 0.0, 0.0}, {0.0, 0.3, 0.0}, {0.0, 0.0, 0.2}},
                            Matrix{{0.4, 0.0, 0.0}, {0.0, 0.1, 0.0}, {0.0, 0.0, 0.6}}});
    const CriterionReport fixed = d3_necessary_conditions(diag, Subspace::coordinate(3, {0, 1}));
    CHECK(fixed.verdict == Verdict::holds);
    CHECK(fixed.summary.find("invariant") != std::string::npos);
  }

  TEST_CASE("antidiagonal criterion") {
    const CriterionReport ex = antidiagonal_nonexact_criterion(example_tuple());
    CHECK(ex.verdict == Verdict::holds);
    const EvidenceItem* ratios = ex.find("ratios");
    REQUIRE(ratios != nullptr);
    CHECK(ratios->values == std::vector<double>{2.0, 2.0, 0.5});

    const MatrixTuple equal({Matrix{{0.0, 0.3}, {0.3, 0.0}}, Matrix{{0.0, 0.5}, {0.5, 0.0}}});
    CHECK(antidiagonal_nonexact_criterion(equal).verdict == Verdict::fails);

    const MatrixTuple two({Matrix{{0.0, 0.4}, {0.2, 0.0}}, Matrix{{0.0, 0.1}, {0.2, 0.0}}});
    CHECK(antidiagonal_nonexact_criterion(two).verdict == Verdict::holds);

    CHECK_THROWS_AS(antidiagonal_nonexact_criterion(MatrixTuple({Matrix{{0.5, 0.0}, {0.0, 0.5}}, Matrix{{0.0, 0.3}, {0.3, 0.0}}})),
                    Error);
  }

  TEST_CASE("distinct value bounds") {
    const ValueBounds a = distinct_value_bounds(2, 1, 1, 1);
    CHECK(a.set_bound == 2);
    CHECK(a.measure_bound == 2);
    const ValueBounds b = distinct_value_bounds(3, 2, 1, 1);
    CHECK(b.set_bound == 2);
    CHECK(b.measure_bound == 2);
    const ValueBounds c = distinct_value_bounds(5, 2, 0, 2);
    CHECK(c.set_bound == std::min<std::uint64_t>(5 - 2 + 1, 10 - 1 + 1));
    CHECK(c.measure_bound == 10);
    CHECK_THROWS_AS(distinct_value_bounds(2, 2, 1, 1), Error);
  }
}
