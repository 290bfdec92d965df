#include "affdim/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affdim/parallel.hpp"
#include "affdim/rng.hpp"

namespace affdim {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit fit;
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return fit;
}

std::vector<double> halving(double start, std::size_t count) {
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(start / std::pow(2.0, static_cast<double>(i)));
  return out;
}

std::size_t count_boxes(const PointCloud& cloud, const std::vector<double>& lo, double scale) {
  const std::size_t n = cloud.size();
  const std::size_t dim = cloud.dim;
  std::int64_t cells = 1;
  for (std::size_t j = 0; j < dim; ++j) {
    double range = 0.0;
    for (std::size_t i = 0; i < n; ++i) range = std::max(range, cloud.coords[i * dim + j] - lo[j]);
    cells = std::max<std::int64_t>(cells, static_cast<std::int64_t>(range / scale) + 1);
  }
  int bits = 1;
  while ((std::int64_t{1} << bits) < cells) ++bits;
  if (static_cast<std::size_t>(bits) * dim <= 64) {
    std::vector<std::uint64_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t key = 0;
      for (std::size_t j = 0; j < dim; ++j) {
        const auto cell = static_cast<std::uint64_t>((cloud.coords[i * dim + j] - lo[j]) / scale);
        key = (key << bits) | cell;
      }
      keys[i] = key;
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
  }
  std::vector<std::vector<std::int64_t>> keys(n, std::vector<std::int64_t>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      keys[i][j] = static_cast<std::int64_t>((cloud.coords[i * dim + j] - lo[j]) / scale);
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

std::vector<double> cloud_min(const PointCloud& cloud) {
  std::vector<double> lo(cloud.dim, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t j = 0; j < cloud.dim; ++j) lo[j] = std::min(lo[j], cloud.coords[i * cloud.dim + j]);
  return lo;
}

Vector uniform_in_ball(CounterRng& rng, std::size_t d, double radius) {
  for (;;) {
    Vector v(d);
    double r2 = 0.0;
    for (double& x : v) {
      x = 2.0 * rng.uniform() - 1.0;
      r2 += x * x;
    }
    if (r2 <= 1.0) {
      for (double& x : v) x *= radius;
      return v;
    }
  }
}

}  // namespace

IFSInstance::IFSInstance(MatrixTuple tuple, std::vector<Vector> translations)
    : tuple_(std::move(tuple)), translations_(std::move(translations)) {
  if (translations_.size() != tuple_.m())
    fail(ErrorCode::invalid_input, "IFSInstance: need one translation per matrix");
  for (std::size_t i = 0; i < translations_.size(); ++i) {
    if (translations_[i].size() != tuple_.d())
      fail(ErrorCode::invalid_input, "IFSInstance: translation " + std::to_string(i + 1) + " has the wrong length");
    for (double x : translations_[i])
      if (!std::isfinite(x)) fail(ErrorCode::invalid_input, "IFSInstance: non-finite translation");
    radius_ = std::max(radius_, norm(translations_[i]) / (1.0 - tuple_.norm(static_cast<std::uint32_t>(i + 1))));
  }
}

std::size_t auto_burn_in(const IFSInstance& ifs) {
  const double r = ifs.bounding_radius();
  if (r <= 0.0) return 1;
  const double steps = std::log(1e-12 / r) / std::log(ifs.tuple().alpha_plus());
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(steps)) + 1);
}

PointCloud chaos_game(const IFSInstance& ifs, const MeasureSpec& mu, const ChaosOptions& options) {
  const MatrixTuple& t = ifs.tuple();
  if (mu.m() != t.m()) fail(ErrorCode::invalid_input, "chaos_game: measure and tuple use different alphabets");
  const std::size_t d = t.d();
  const std::size_t length = options.burn_in == 0 ? auto_burn_in(ifs) : options.burn_in;
  if (options.address_length > length)
    fail(ErrorCode::invalid_input, "chaos_game: address length exceeds the word length");
  PointCloud cloud;
  cloud.dim = d;
  cloud.coords.assign(options.points * d, 0.0);
  cloud.address_length = options.address_length;
  cloud.address.assign(options.points * options.address_length, 0);

  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (options.points + kChunk - 1) / kChunk;
  parallel_for(chunks, options.threads, [&](std::size_t chunk) {
    Vector y(d), next(d);
    const std::size_t end = std::min(options.points, (chunk + 1) * kChunk);
    for (std::size_t i = chunk * kChunk; i < end; ++i) {
      const Word path = sample_path(mu, length, options.seed, i);
      std::fill(y.begin(), y.end(), 0.0);
      for (std::size_t j = length; j-- > 0;) {
        const Matrix& a = t[path[j]];
        const Vector& shift = ifs.translations()[path[j] - 1];
        for (std::size_t r = 0; r < d; ++r) {
          double acc = shift[r];
          for (std::size_t c = 0; c < d; ++c) acc += a(r, c) * y[c];
          next[r] = acc;
        }
        std::swap(y, next);
      }
      std::copy(y.begin(), y.end(), cloud.coords.begin() + static_cast<std::ptrdiff_t>(i * d));
      for (std::size_t j = 0; j < options.address_length; ++j) cloud.address[i * options.address_length + j] = path[j];
    }
  });
  return cloud;
}

PointCloud project(const PointCloud& cloud, const Subspace& w) {
  if (w.ambient_dim() != cloud.dim) fail(ErrorCode::invalid_input, "project: subspace lives in the wrong dimension");
  const Matrix& q = w.basis();
  const std::size_t k = w.dim();
  PointCloud out;
  out.dim = k;
  out.coords.resize(cloud.size() * k);
  out.address_length = cloud.address_length;
  out.address = cloud.address;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::span<const double> x = cloud.point(i);
    for (std::size_t c = 0; c < k; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < cloud.dim; ++r) acc += q(r, c) * x[r];
      out.coords[i * k + c] = acc;
    }
  }
  return out;
}

double cloud_extent(const PointCloud& cloud) {
  if (cloud.size() == 0) return 0.0;
  const std::vector<double> lo = cloud_min(cloud);
  double extent = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t j = 0; j < cloud.dim; ++j) extent = std::max(extent, cloud.coords[i * cloud.dim + j] - lo[j]);
  return extent;
}

std::vector<double> default_box_scales(const PointCloud& cloud) { return halving(cloud_extent(cloud) / 8.0, 9); }

BoxCountResult box_count_dim(const PointCloud& cloud, std::vector<double> scales) {
  BoxCountResult out;
  if (cloud.size() == 0) fail(ErrorCode::invalid_input, "box_count_dim: empty cloud");
  if (cloud_extent(cloud) == 0.0) {
    out.warning = "degenerate cloud: all points coincide";
    return out;
  }
  if (scales.empty()) scales = default_box_scales(cloud);
  if (scales.size() < 2) fail(ErrorCode::invalid_input, "box_count_dim: need at least two scales");
  for (double s : scales)
    if (!(s > 0.0)) fail(ErrorCode::invalid_input, "box_count_dim: scales must be positive");
  const std::vector<double> lo = cloud_min(cloud);
  std::vector<double> x, y;
  for (double s : scales) {
    const std::size_t count = count_boxes(cloud, lo, s);
    out.counts.push_back({s, count});
    x.push_back(std::log(1.0 / s));
    y.push_back(std::log(static_cast<double>(count)));
  }
  const LineFit fit = least_squares(x, y);
  out.estimate = fit.slope;
  out.intercept = fit.intercept;
  out.r_squared = fit.r_squared;
  const double finest = *std::min_element(scales.begin(), scales.end());
  if (out.counts.back().count * 4 > cloud.size() && finest == scales.back())
    out.warning = "finest scale is close to saturation (count > N/4)";
  return out;
}

ExperimentResult projected_dim_experiment(const MatrixTuple& t, const Subspace& w, const MeasureSpec& mu,
                                          const ExperimentOptions& options) {
  if (w.ambient_dim() != t.d()) fail(ErrorCode::invalid_input, "projected_dim_experiment: subspace lives in the wrong dimension");
  ExperimentResult out;
  out.predicted = proj_affinity_dim(t, w, options.pressure);
  out.hypotheses_met = t.transversal();
  if (!out.hypotheses_met) out.warning = "a.e. theorem hypotheses not met (tuple is not transversal)";
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    CounterRng rng(options.seed ^ 0x5bd1e995ULL, trial);
    std::vector<Vector> translations;
    for (std::size_t i = 0; i < t.m(); ++i) translations.push_back(uniform_in_ball(rng, t.d(), options.translation_radius));
    const IFSInstance ifs(t, translations);
    ChaosOptions chaos;
    chaos.points = options.points;
    chaos.seed = rng();
    chaos.threads = options.threads;
    const PointCloud cloud = project(chaos_game(ifs, mu, chaos), w);
    out.trials.push_back({trial, std::move(translations), box_count_dim(cloud, options.scales)});
  }
  double sum = 0.0;
  for (const ExperimentTrial& tr : out.trials) sum += tr.box.estimate;
  const auto n = static_cast<double>(out.trials.size());
  out.mean = n > 0 ? sum / n : 0.0;
  double ss = 0.0;
  for (const ExperimentTrial& tr : out.trials) ss += (tr.box.estimate - out.mean) * (tr.box.estimate - out.mean);
  out.spread = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Ball counting

BallCounter::BallCounter(const PointCloud& cloud) : cloud_(cloud), order_(cloud.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  brute_force_ = cloud.dim > 3;
  if (!brute_force_ && !order_.empty()) {
    nodes_.reserve(2 * cloud.size() / 8 + 1);
    build(0, order_.size());
  }
}

std::size_t BallCounter::build(std::size_t begin, std::size_t end) {
  const std::size_t dim = cloud_.dim;
  Node node{begin, end, 0, 0, std::vector<double>(dim, std::numeric_limits<double>::infinity()),
            std::vector<double>(dim, -std::numeric_limits<double>::infinity())};
  for (std::size_t i = begin; i < end; ++i) {
    const std::span<const double> p = cloud_.point(order_[i]);
    for (std::size_t j = 0; j < dim; ++j) {
      node.lo[j] = std::min(node.lo[j], p[j]);
      node.hi[j] = std::max(node.hi[j], p[j]);
    }
  }
  const std::size_t index = nodes_.size();
  nodes_.push_back(node);
  if (end - begin <= 16) return index;
  std::size_t axis = 0;
  for (std::size_t j = 1; j < dim; ++j)
    if (node.hi[j] - node.lo[j] > node.hi[axis] - node.lo[axis]) axis = j;
  if (node.hi[axis] == node.lo[axis]) return index;
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                     return cloud_.coords[a * dim + axis] < cloud_.coords[b * dim + axis];
                   });
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

std::size_t BallCounter::count_node(std::size_t index, std::span<const double> center, double r2) const {
  const Node& node = nodes_[index];
  double near = 0.0, far = 0.0;
  for (std::size_t j = 0; j < center.size(); ++j) {
    const double below = node.lo[j] - center[j];
    const double above = center[j] - node.hi[j];
    const double gap = std::max({below, above, 0.0});
    near += gap * gap;
    const double reach = std::max(std::abs(center[j] - node.lo[j]), std::abs(center[j] - node.hi[j]));
    far += reach * reach;
  }
  if (near > r2) return 0;
  if (far <= r2) return node.end - node.begin;
  if (node.left == 0) {
    std::size_t count = 0;
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::span<const double> p = cloud_.point(order_[i]);
      double dist = 0.0;
      for (std::size_t j = 0; j < center.size(); ++j) dist += (p[j] - center[j]) * (p[j] - center[j]);
      if (dist <= r2) ++count;
    }
    return count;
  }
  return count_node(node.left, center, r2) + count_node(node.right, center, r2);
}

std::size_t BallCounter::count(std::span<const double> center, double radius) const {
  const double r2 = radius * radius;
  if (brute_force_) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < cloud_.size(); ++i) {
      const std::span<const double> p = cloud_.point(i);
      double dist = 0.0;
      for (std::size_t j = 0; j < center.size(); ++j) dist += (p[j] - center[j]) * (p[j] - center[j]);
      if (dist <= r2) ++count;
    }
    return count;
  }
  if (nodes_.empty()) return 0;
  return count_node(0, center, r2);
}

LocalDimResult local_dim_estimate(const PointCloud& cloud, const LocalDimOptions& options) {
  const std::size_t n = cloud.size();
  if (n == 0) fail(ErrorCode::invalid_input, "local_dim_estimate: empty cloud");
  LocalDimResult out;
  const double extent = cloud_extent(cloud);
  out.radii = options.radii.empty() ? halving(extent / 8.0, 7) : options.radii;
  if (out.radii.size() < 2) fail(ErrorCode::invalid_input, "local_dim_estimate: need at least two radii");
  const std::size_t bins = std::max<std::size_t>(1, options.histogram_bins);
  out.histogram.assign(bins, 0);

  const std::size_t centers = std::min(options.centers, n);
  CounterRng rng(options.seed, 0x1d1ceULL);
  std::vector<std::size_t> picks(centers);
  for (std::size_t& c : picks) c = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));

  if (extent == 0.0) {
    // Every ball holds the whole cloud: a point mass.
    out.center_index = picks;
    out.slopes.assign(centers, 0.0);
    out.histogram[0] = centers;
    return out;
  }

  const BallCounter counter(cloud);
  std::vector<double> slopes(centers, std::numeric_limits<double>::quiet_NaN());
  parallel_for(centers, options.threads, [&](std::size_t c) {
    const std::span<const double> x = cloud.point(picks[c]);
    std::vector<double> log_r, log_mass;
    bool ok = true;
    for (double r : out.radii) {
      const std::size_t count = counter.count(x, r);
      if (count <= 1) ok = false;
      log_r.push_back(std::log(r));
      log_mass.push_back(std::log(static_cast<double>(count) / static_cast<double>(n)));
    }
    if (ok) slopes[c] = least_squares(log_r, log_mass).slope;
  });
  for (std::size_t c = 0; c < centers; ++c) {
    if (std::isnan(slopes[c])) {
      ++out.skipped;
      continue;
    }
    out.center_index.push_back(picks[c]);
    out.slopes.push_back(slopes[c]);
    const double scaled = slopes[c] / static_cast<double>(cloud.dim) * static_cast<double>(bins);
    const auto bin = static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(bins - 1)));
    ++out.histogram[bin];
  }
  return out;
}

void write_point_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  for (std::size_t j = 0; j < cloud.dim; ++j) out << (j ? "," : "") << "x" << j;
  if (cloud.address_length > 0) out << ",address";
  out << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = 0; j < cloud.dim; ++j) out << (j ? "," : "") << cloud.coords[i * cloud.dim + j];
    if (cloud.address_length > 0) {
      std::vector<std::uint32_t> letters(cloud.address.begin() + static_cast<std::ptrdiff_t>(i * cloud.address_length),
                                         cloud.address.begin() + static_cast<std::ptrdiff_t>((i + 1) * cloud.address_length));
      out << "," << Word(std::move(letters)).to_string();
    }
    out << "\n";
  }
}

void write_box_counts_csv(std::ostream& out, const BoxCountResult& result) {
  out << "scale,count\n";
  out.precision(17);
  for (const ScaleCount& sc : result.counts) out << sc.scale << "," << sc.count << "\n";
}

void write_histogram_csv(std::ostream& out, const std::vector<std::size_t>& histogram, double lo, double hi) {
  out << "bin_lo,bin_hi,count\n";
  out.precision(17);
  const double width = (hi - lo) / static_cast<double>(histogram.size());
  for (std::size_t i = 0; i < histogram.size(); ++i)
    out << lo + width * static_cast<double>(i) << "," << lo + width * static_cast<double>(i + 1) << "," << histogram[i] << "\n";
}

}  // namespace affdim
