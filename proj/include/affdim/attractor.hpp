#pragma once

// Chaos-game sampling of self-affine measures, projection of point clouds,
// box-counting and local-dimension estimates.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "affdim/ergodic.hpp"
#include "affdim/linalg.hpp"
#include "affdim/pressure.hpp"
#include "affdim/words.hpp"

namespace affdim {

/// Maps f_i(x) = T_i x + a_i with a radius R such that f_i(B(0,R)) lies in B(0,R).
class IFSInstance {
 public:
  /// R is taken as max_i ||a_i|| / (1 - ||T_i||).
  IFSInstance(MatrixTuple tuple, std::vector<Vector> translations);

  [[nodiscard]] const MatrixTuple& tuple() const { return tuple_; }
  [[nodiscard]] const std::vector<Vector>& translations() const { return translations_; }
  [[nodiscard]] double bounding_radius() const { return radius_; }

 private:
  MatrixTuple tuple_;
  std::vector<Vector> translations_;
  double radius_ = 0.0;
};

/// N points stored row-major; `address` holds the first `address_length`
/// letters of each point's coding word when it was requested.
struct PointCloud {
  std::size_t dim = 0;
  std::vector<double> coords;
  std::size_t address_length = 0;
  std::vector<std::uint32_t> address;

  [[nodiscard]] std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  [[nodiscard]] std::span<const double> point(std::size_t i) const {
    return std::span<const double>(coords).subspan(i * dim, dim);
  }
};

struct ChaosOptions {
  std::size_t points = 100000;
  /// Word length L; 0 picks the smallest L with alpha_+^L R < 1e-12.
  std::size_t burn_in = 0;
  std::uint64_t seed = 1;
  std::size_t address_length = 0;
  int threads = 0;
};

std::size_t auto_burn_in(const IFSInstance& ifs);

/// Point i is f_{x_1} o ... o f_{x_L}(0) for a path x drawn from mu with stream index i.
PointCloud chaos_game(const IFSInstance& ifs, const MeasureSpec& mu, const ChaosOptions& options = {});

/// Coordinates of P_W x in the orthonormal basis of W.
PointCloud project(const PointCloud& cloud, const Subspace& w);

/// Largest coordinate range of the cloud.
double cloud_extent(const PointCloud& cloud);

struct ScaleCount {
  double scale;
  std::size_t count;
};

struct BoxCountResult {
  double estimate = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<ScaleCount> counts;
  std::string warning;
};

/// Nine halving scales from extent/8 down to extent/2048.
std::vector<double> default_box_scales(const PointCloud& cloud);

/// Least-squares slope of log N(eps) against log(1/eps) over the given scales
/// (default_box_scales when empty).
BoxCountResult box_count_dim(const PointCloud& cloud, std::vector<double> scales = {});

struct ExperimentOptions {
  std::size_t trials = 10;
  std::size_t points = 1000000;
  std::uint64_t seed = 1;
  /// Translations are drawn uniformly from the ball of this radius.
  double translation_radius = 1.0;
  std::vector<double> scales;
  int threads = 0;
  PressureConfig pressure;
};

struct ExperimentTrial {
  std::size_t trial = 0;
  std::vector<Vector> translations;
  BoxCountResult box;
};

struct ExperimentResult {
  DimensionEstimate predicted;
  std::vector<ExperimentTrial> trials;
  double mean = 0.0;
  double spread = 0.0;
  bool hypotheses_met = true;
  std::string warning;
};

ExperimentResult projected_dim_experiment(const MatrixTuple& t, const Subspace& w, const MeasureSpec& mu,
                                          const ExperimentOptions& options = {});

/// Static k-d tree over a point cloud answering closed-ball counts.
class BallCounter {
 public:
  explicit BallCounter(const PointCloud& cloud);
  [[nodiscard]] std::size_t count(std::span<const double> center, double radius) const;

 private:
  struct Node {
    std::size_t begin, end;
    std::size_t left = 0, right = 0;  // 0 marks a leaf
    std::vector<double> lo, hi;
  };
  std::size_t build(std::size_t begin, std::size_t end);
  std::size_t count_node(std::size_t node, std::span<const double> center, double r2) const;

  const PointCloud& cloud_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  bool brute_force_ = false;
};

struct LocalDimOptions {
  std::size_t centers = 500;
  /// Defaults to seven halving radii from extent/8 down to extent/512.
  std::vector<double> radii;
  std::uint64_t seed = 1;
  std::size_t histogram_bins = 50;
  int threads = 0;
};

struct LocalDimResult {
  std::vector<std::size_t> center_index;
  std::vector<double> slopes;
  std::size_t skipped = 0;
  std::vector<double> radii;
  /// Bins of equal width over [0, dim].
  std::vector<std::size_t> histogram;
};

LocalDimResult local_dim_estimate(const PointCloud& cloud, const LocalDimOptions& options = {});

void write_point_cloud_csv(std::ostream& out, const PointCloud& cloud);
void write_box_counts_csv(std::ostream& out, const BoxCountResult& result);
void write_histogram_csv(std::ostream& out, const std::vector<std::size_t>& histogram, double lo, double hi);

}  // namespace affdim
