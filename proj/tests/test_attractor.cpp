#include <cmath>
#include <sstream>

#include "doctest.h"

#include "affdim/attractor.hpp"
#include "support.hpp"

using namespace affdim;

namespace {

// True when x lies in the middle-thirds Cantor set up to `depth` ternary digits.
bool in_cantor(double x, int depth, double tol) {
  for (int level = 0; level < depth; ++level) {
    if (x < -tol || x > 1.0 + tol) return false;
    if (x <= 1.0 / 3.0 + tol) {
      x *= 3.0;
    } else if (x >= 2.0 / 3.0 - tol) {
      x = 3.0 * x - 2.0;
    } else {
      return false;
    }
    tol *= 3.0;
  }
  return true;
}

PointCloud segment(std::size_t n) {
  PointCloud cloud;
  cloud.dim = 1;
  for (std::size_t i = 0; i < n; ++i) cloud.coords.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
  return cloud;
}

MatrixTuple example_tuple() {
  return MatrixTuple({Matrix{{0.0, 0.4}, {0.2, 0.0}}, Matrix{{0.0, 0.4}, {0.2, 0.0}}, Matrix{{0.0, 0.2}, {0.4, 0.0}}});
}

}  // namespace

TEST_SUITE("attractor") {
  TEST_CASE("bounding radius") {
    const IFSInstance ifs(MatrixTuple({Matrix{{0.5}}, Matrix{{0.25}}}), {Vector{1.0}, Vector{-3.0}});
    CHECK(ifs.bounding_radius() == doctest::Approx(4.0));
    CHECK_THROWS_AS(IFSInstance(MatrixTuple({Matrix{{0.5}}, Matrix{{0.25}}}), {Vector{1.0}}), Error);
  }

  TEST_CASE("a repeated map collapses to its fixed point") {
    const IFSInstance ifs(MatrixTuple({Matrix{{0.5}}, Matrix{{0.5}}}), {Vector{0.3}, Vector{0.3}});
    ChaosOptions opts;
    opts.points = 100;
    const PointCloud cloud = chaos_game(ifs, MeasureSpec::uniform(2), opts);
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(std::abs(cloud.point(i)[0] - 0.6) < 1e-12);
    const BoxCountResult box = box_count_dim(cloud);
    CHECK(box.estimate == 0.0);
    CHECK_FALSE(box.warning.empty());
  }

  TEST_CASE("middle-thirds Cantor points") {
    const IFSInstance ifs(MatrixTuple({Matrix{{1.0 / 3.0}}, Matrix{{1.0 / 3.0}}}), {Vector{0.0}, Vector{2.0 / 3.0}});
    ChaosOptions opts;
    opts.points = 2000;
    opts.address_length = 5;
    const PointCloud cloud = chaos_game(ifs, MeasureSpec::uniform(2), opts);
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(in_cantor(cloud.point(i)[0], 20, 1e-12));
    // the first address letter decides which third a point lies in
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK((cloud.address[i * 5] == 1) == (cloud.point(i)[0] < 0.5));
  }

  TEST_CASE("points of the worked example stay in the bounding ball") {
    testing::Gen gen(113);
    std::vector<Vector> a;
    for (int i = 0; i < 3; ++i) a.push_back(Vector{gen.uniform(), gen.uniform()});
    const IFSInstance ifs(example_tuple(), a);
    ChaosOptions opts;
    opts.points = 5000;
    const PointCloud cloud = chaos_game(ifs, MeasureSpec::markov({0.25, 0.25, 0.5},
                                                                 Matrix{{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {0.5, 0.5, 0.0}}),
                                        opts);
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(norm(cloud.point(i)) <= ifs.bounding_radius() + 1e-12);
  }

  TEST_CASE("doubling the word length moves points by at most the truncation estimate") {
    testing::Gen gen(127);
    const MatrixTuple t = gen.tuple(3, 2, 0.2, 0.7);
    std::vector<Vector> a;
    for (int i = 0; i < 3; ++i) a.push_back(Vector{gen.uniform(-1, 1), gen.uniform(-1, 1)});
    const IFSInstance ifs(t, a);
    const MeasureSpec mu = MeasureSpec::uniform(3);
    ChaosOptions shorter;
    shorter.points = 500;
    shorter.burn_in = 12;
    ChaosOptions longer = shorter;
    longer.burn_in = 24;
    const PointCloud p = chaos_game(ifs, mu, shorter);
    const PointCloud q = chaos_game(ifs, mu, longer);
    const double bound = std::pow(t.alpha_plus(), 12.0) * ifs.bounding_radius();
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(p.coords[i * 2 + j] - q.coords[i * 2 + j]) <= bound * (1.0 + 1e-9));
    CHECK(std::pow(t.alpha_plus(), static_cast<double>(auto_burn_in(ifs))) * ifs.bounding_radius() < 1e-12);
  }

  TEST_CASE("results do not depend on the thread count") {
    const IFSInstance ifs(MatrixTuple({Matrix{{0.4, 0.1}, {0.0, 0.3}}, Matrix{{0.2, 0.0}, {0.3, 0.5}}}),
                          {Vector{0.0, 0.0}, Vector{1.0, 0.5}});
    ChaosOptions one;
    one.points = 10000;
    one.threads = 1;
    ChaosOptions four = one;
    four.threads = 4;
    CHECK(chaos_game(ifs, MeasureSpec::uniform(2), one).coords == chaos_game(ifs, MeasureSpec::uniform(2), four).coords);
  }

  TEST_CASE("box counting on simple clouds") {
    const BoxCountResult line = box_count_dim(segment(200000));
    CHECK(std::abs(line.estimate - 1.0) < 0.05);
    CHECK(line.counts.size() == 9);
    CHECK(line.r_squared > 0.99);

    PointCloud single;
    single.dim = 2;
    single.coords = {0.3, 0.4};
    CHECK(box_count_dim(single).estimate == 0.0);
  }

  TEST_CASE("box counting calibrates on the Cantor set") {
    const IFSInstance ifs(MatrixTuple({Matrix{{1.0 / 3.0}}, Matrix{{1.0 / 3.0}}}), {Vector{0.0}, Vector{2.0 / 3.0}});
    ChaosOptions opts;
    opts.points = 1000000;
    const BoxCountResult box = box_count_dim(chaos_game(ifs, MeasureSpec::uniform(2), opts));
    CHECK(std::abs(box.estimate - std::log(2.0) / std::log(3.0)) < 0.05);
  }

  TEST_CASE("projection does not raise the box dimension") {
    testing::Gen gen(131);
    const MatrixTuple t = gen.tuple(3, 2, 0.3, 0.6);
    std::vector<Vector> a;
    for (int i = 0; i < 3; ++i) a.push_back(Vector{gen.uniform(-1, 1), gen.uniform(-1, 1)});
    ChaosOptions opts;
    opts.points = 200000;
    const PointCloud cloud = chaos_game(IFSInstance(t, a), MeasureSpec::uniform(3), opts);
    const double full = box_count_dim(cloud).estimate;
    const double projected = box_count_dim(project(cloud, gen.subspace(2, 1))).estimate;
    CHECK(projected <= std::min(1.0, full) + 0.1);
  }

  TEST_CASE("projected experiment on the diagonal pair") {
    // norms 1/2 + 1/2 reach the transversality threshold, so the a.e. hypotheses are flagged
    const MatrixTuple t({Matrix{{0.5, 0.0}, {0.0, 1.0 / 3.0}}, Matrix{{1.0 / 3.0, 0.0}, {0.0, 0.5}}});
    ExperimentOptions opts;
    opts.trials = 2;
    opts.points = 300000;
    const ExperimentResult r = projected_dim_experiment(t, Subspace::coordinate(2, {0}), MeasureSpec::uniform(2), opts);
    CHECK_FALSE(r.hypotheses_met);
    CHECK(std::abs(r.predicted.value - 0.78788) < 1e-3);
    REQUIRE(r.trials.size() == 2);
    for (const ExperimentTrial& tr : r.trials) CHECK(std::abs(tr.box.estimate - 0.78788) < 0.1);
  }

  TEST_CASE("non-transversal tuples are marked") {
    const MatrixTuple t({Matrix{{0.7, 0.0}, {0.0, 0.6}}, Matrix{{0.6, 0.0}, {0.0, 0.7}}});
    ExperimentOptions opts;
    opts.trials = 1;
    opts.points = 2000;
    const ExperimentResult r = projected_dim_experiment(t, Subspace::full(2), MeasureSpec::uniform(2), opts);
    CHECK_FALSE(r.hypotheses_met);
    CHECK(r.warning.find("hypotheses not met") != std::string::npos);
  }

  TEST_CASE("ball counts match brute force") {
    testing::Gen gen(137);
    PointCloud cloud;
    cloud.dim = 2;
    for (int i = 0; i < 3000; ++i) {
      cloud.coords.push_back(gen.uniform());
      cloud.coords.push_back(gen.uniform());
    }
    const BallCounter counter(cloud);
    for (int q = 0; q < 50; ++q) {
      const Vector c{gen.uniform(), gen.uniform()};
      const double r = gen.uniform(0.0, 0.3);
      std::size_t want = 0;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double dx = cloud.point(i)[0] - c[0], dy = cloud.point(i)[1] - c[1];
        if (dx * dx + dy * dy <= r * r) ++want;
      }
      CHECK(counter.count(c, r) == want);
    }
  }

  TEST_CASE("local dimensions") {
    LocalDimOptions opts;
    opts.centers = 100;
    const PointCloud seg = segment(200000);
    const LocalDimResult line = local_dim_estimate(seg, opts);
    CHECK(line.skipped == 0);
    // balls around centers near the ends are clipped at the larger radii
    for (std::size_t i = 0; i < line.slopes.size(); ++i) {
      const double x = seg.point(line.center_index[i])[0];
      if (x > 0.15 && x < 0.85) CHECK(std::abs(line.slopes[i] - 1.0) < 0.02);
    }

    PointCloud point;
    point.dim = 1;
    point.coords.assign(1000, 0.25);
    const LocalDimResult mass = local_dim_estimate(point, opts);
    for (double s : mass.slopes) CHECK(s == 0.0);

    PointCloud sparse;
    sparse.dim = 1;
    sparse.coords = {0.0, 1.0};
    const LocalDimResult empty = local_dim_estimate(sparse, opts);
    CHECK(empty.skipped == 2);
  }

  TEST_CASE("projected local dimensions of the worked example are bimodal") {
    testing::Gen gen(139);
    std::vector<Vector> a;
    for (int i = 0; i < 3; ++i) a.push_back(Vector{gen.uniform(), gen.uniform()});
    const MeasureSpec mu = MeasureSpec::markov({0.25, 0.25, 0.5}, Matrix{{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {0.5, 0.5, 0.0}});
    ChaosOptions opts;
    opts.points = 1000000;
    const PointCloud cloud = project(chaos_game(IFSInstance(example_tuple(), a), mu, opts), Subspace::coordinate(2, {0}));
    LocalDimOptions local;
    local.centers = 300;
    const LocalDimResult r = local_dim_estimate(cloud, local);
    std::size_t near_upper = 0, near_lower = 0;
    for (double s : r.slopes) {
      if (std::abs(s - 0.378) < 0.05) ++near_upper;
      if (std::abs(s - 0.215) < 0.05) ++near_lower;
    }
    CHECK(near_upper > 30);
    CHECK(near_lower > 30);
  }

  TEST_CASE("csv export") {
    PointCloud cloud;
    cloud.dim = 2;
    cloud.coords = {0.5, 0.25, 1.0, 2.0};
    cloud.address_length = 2;
    cloud.address = {1, 2, 2, 2};
    std::ostringstream os;
    write_point_cloud_csv(os, cloud);
    CHECK(os.str() == "x0,x1,address\n0.5,0.25,12\n1,2,22\n");

    std::ostringstream hist;
    write_histogram_csv(hist, {3, 1}, 0.0, 1.0);
    CHECK(hist.str() == "bin_lo,bin_hi,count\n0,0.5,3\n0.5,1,1\n");
  }
}
