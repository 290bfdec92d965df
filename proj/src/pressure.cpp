#include "affdim/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "affdim/logsum.hpp"

namespace affdim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

FoldOptions fold_options(const PressureConfig& config) {
  return {config.budget, config.threads};
}

void append_log_singular_values(const Matrix& product, std::vector<double>& out) {
  const Vector sv = singular_values(product);
  for (double x : sv) out.push_back(x > 0.0 ? std::log(x) : kNegInf);
}

double log_svf_of(const Matrix& product, double s, bool full) {
  std::vector<double> logs;
  logs.reserve(product.rows());
  append_log_singular_values(product, logs);
  return log_svf_from_logs(logs, s, full);
}

Matrix stacked_transposes(const std::vector<Subspace>& candidates) {
  const std::size_t d = candidates.front().ambient_dim();
  const std::size_t k = candidates.front().dim();
  Matrix out(candidates.size() * k, d);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Matrix& q = candidates[c].basis();
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < d; ++j) out(c * k + i, j) = q(j, i);
  }
  return out;
}

Matrix block_rows(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(count, m.cols());
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(first + i, j);
  return out;
}

// Rate evaluator for the solvers. Caches the log singular values of Q^T T_I
// for every word when they fit within the table limit; otherwise every
// evaluation re-enumerates the words.
class RateFunction {
 public:
  RateFunction(const MatrixTuple& t, Matrix seed, bool full, std::size_t n, const PressureConfig& config)
      : t_(t), seed_(std::move(seed)), full_(full), n_(n), options_(fold_options(config)) {
    const std::uint64_t words = word_count(t.m(), n);
    if (words > options_.budget) {
      fail(ErrorCode::resource_limit, "pressure: " + std::to_string(t.m()) + "^" + std::to_string(n) +
                                          " words exceed the visit budget of " + std::to_string(options_.budget));
    }
    const std::uint64_t entries = words * seed_.rows();
    if (entries <= config.table_limit) {
      table_ = fold_words(
          t_, n_, seed_, std::vector<double>{},
          [](std::vector<double>& acc, const Word&, const Matrix& product) {
            append_log_singular_values(product, acc);
          },
          [](std::vector<double>& acc, const std::vector<double>& part) {
            acc.insert(acc.end(), part.begin(), part.end());
          },
          options_);
      cached_ = true;
    }
  }

  [[nodiscard]] std::size_t n() const { return n_; }

  double operator()(double s) const {
    const std::size_t k = seed_.rows();
    if (!full_ && s > static_cast<double>(k)) return kNegInf;
    if (cached_) {
      LogSum sum;
      const std::span<const double> all(table_);
      for (std::size_t offset = 0; offset < table_.size(); offset += k)
        sum.add(log_svf_from_logs(all.subspan(offset, k), s, full_));
      return sum.value() / static_cast<double>(n_);
    }
    const bool full = full_;
    const LogSum sum = fold_words(
        t_, n_, seed_, LogSum{},
        [s, full](LogSum& acc, const Word&, const Matrix& product) { acc.add(log_svf_of(product, s, full)); },
        [](LogSum& acc, const LogSum& part) { acc.merge(part); }, options_);
    return sum.value() / static_cast<double>(n_);
  }

 private:
  const MatrixTuple& t_;
  Matrix seed_;
  bool full_;
  std::size_t n_;
  FoldOptions options_;
  bool cached_ = false;
  std::vector<double> table_;
};

std::vector<std::size_t> resolved_schedule(const MatrixTuple& t, const PressureConfig& config) {
  std::vector<std::size_t> schedule = config.schedule.empty() ? default_schedule(t.m()) : config.schedule;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1) fail(ErrorCode::invalid_input, "pressure: schedule entries must be at least 1");
    if (i > 0 && schedule[i] <= schedule[i - 1])
      fail(ErrorCode::invalid_input, "pressure: schedule must be strictly increasing");
  }
  return schedule;
}

// Largest s with rate(s) >= 0 on [0, upper], by bisection. The rate is
// strictly decreasing in s for contracting tuples.
DimensionEstimate solve_root(const MatrixTuple& t, const Matrix& seed, bool full, double upper,
                             const PressureConfig& config) {
  if (!(config.tolerance > 0.0)) fail(ErrorCode::invalid_input, "pressure: tolerance must be positive");
  const std::vector<std::size_t> schedule = resolved_schedule(t, config);
  const RateFunction rate(t, seed, full, schedule.back(), config);

  DimensionEstimate out;
  out.n = rate.n();
  auto evaluate = [&](double s) {
    const double r = rate(s);
    out.trace.push_back({s, r});
    return r;
  };

  const double at_upper = evaluate(upper);
  if (at_upper >= 0.0) {
    out.value = out.lo = out.hi = upper;
    out.pressure_at_value = at_upper;
    out.clamped = true;
  } else {
    double lo = 0.0, hi = upper;
    int iterations = 0;
    while (hi - lo > config.tolerance && iterations < config.max_iterations) {
      const double mid = 0.5 * (lo + hi);
      if (evaluate(mid) >= 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      ++iterations;
    }
    out.lo = lo;
    out.hi = hi;
    out.value = 0.5 * (lo + hi);
    out.iterations = iterations;
    out.flagged = hi - lo > config.tolerance;
    out.pressure_at_value = evaluate(out.value);
  }

  if (schedule.size() >= 2) {
    const RateFunction previous(t, seed, full, schedule[schedule.size() - 2], config);
    const double drift = std::abs(out.pressure_at_value - previous(out.value));
    out.heuristic_halfwidth = drift / std::log(1.0 / t.alpha_plus());
  }
  return out;
}

double aitken(double r1, double r2, double r3) {
  const double d1 = r2 - r1;
  const double d2 = r3 - r2;
  const double denom = d2 - d1;
  if (!std::isfinite(r1) || !std::isfinite(r2) || !std::isfinite(r3) || std::abs(denom) < 1e-300) return r3;
  const double out = r3 - d2 * d2 / denom;
  return std::isfinite(out) ? out : r3;
}

}  // namespace

std::vector<std::size_t> default_schedule(std::size_t m) {
  if (m < 2) fail(ErrorCode::invalid_input, "default_schedule: alphabet size must be at least 2");
  std::size_t n_max = 1;
  while (n_max < 20 && word_count(m, n_max + 1) <= (std::uint64_t{1} << 20)) ++n_max;
  std::vector<std::size_t> out;
  for (std::size_t n : {std::max<std::size_t>(1, n_max / 4), std::max<std::size_t>(1, n_max / 2), n_max})
    if (out.empty() || n > out.back()) out.push_back(n);
  return out;
}

double log_svf_from_logs(std::span<const double> log_values, double s, bool full) {
  if (!(s >= 0.0)) fail(ErrorCode::invalid_input, "svf: s must be non-negative");
  const std::size_t count = log_values.size();
  if (full && s >= static_cast<double>(count)) {
    double sum = 0.0;
    for (double x : log_values) sum += x;
    if (sum == kNegInf) return kNegInf;
    return s / static_cast<double>(count) * sum;
  }
  const double whole = std::floor(s);
  const auto j = static_cast<std::size_t>(whole);
  const double frac = s - whole;
  if (j > count || (j == count && frac > 0.0)) return kNegInf;
  double acc = 0.0;
  for (std::size_t i = 0; i < j; ++i) acc += log_values[i];
  if (frac > 0.0) acc += frac * log_values[j];
  return acc;
}

double phi_sum_rate(const MatrixTuple& t, const Subspace& w, double s, std::size_t n,
                    const FoldOptions& options) {
  if (w.ambient_dim() != t.d()) fail(ErrorCode::invalid_input, "phi_sum_rate: subspace lives in the wrong dimension");
  if (!(s >= 0.0)) fail(ErrorCode::invalid_input, "phi_sum_rate: s must be non-negative");
  const bool full = w.is_full();
  if (!full && s > static_cast<double>(w.dim())) return kNegInf;
  const Matrix seed = full ? Matrix::identity(t.d()) : w.basis().transpose();
  const LogSum sum = fold_words(
      t, n, seed, LogSum{},
      [s, full](LogSum& acc, const Word&, const Matrix& product) { acc.add(log_svf_of(product, s, full)); },
      [](LogSum& acc, const LogSum& part) { acc.merge(part); }, options);
  return sum.value() / static_cast<double>(n);
}

double phi_sum_rate(const MatrixTuple& t, double s, std::size_t n, const FoldOptions& options) {
  return phi_sum_rate(t, Subspace::full(t.d()), s, n, options);
}

std::vector<Subspace> psi_candidates(const MatrixTuple& t, const Subspace& w, std::size_t depth) {
  if (w.ambient_dim() != t.d()) fail(ErrorCode::invalid_input, "psi_candidates: subspace lives in the wrong dimension");
  constexpr std::size_t kMaxCandidates = 4096;
  const std::vector<Matrix> adjoints = t.transposes();
  std::vector<Subspace> out{w};
  std::vector<std::size_t> frontier{0};
  for (std::size_t level = 0; level < depth && !frontier.empty(); ++level) {
    std::vector<std::size_t> next;
    for (std::size_t index : frontier) {
      for (const Matrix& adjoint : adjoints) {
        Subspace image = image_subspace(adjoint, out[index]);
        const bool seen = std::any_of(out.begin(), out.end(), [&](const Subspace& v) {
          return subspace_distance(v, image) <= 1e-10;
        });
        if (seen) continue;
        if (out.size() >= kMaxCandidates)
          fail(ErrorCode::resource_limit, "psi_candidates: more than 4096 distinct subspaces; lower the depth");
        out.push_back(std::move(image));
        next.push_back(out.size() - 1);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

double psi_value(const MatrixTuple& t, const Subspace& w, double s, const Word& word, std::size_t depth) {
  const Matrix product = word_product(t, word);
  const bool full = w.is_full();
  double best = kNegInf;
  for (const Subspace& v : psi_candidates(t, w, depth))
    best = std::max(best, log_svf_of(v.basis().transpose() * product, s, full));
  return std::exp(best);
}

double psi_sum_rate(const MatrixTuple& t, const Subspace& w, double s, std::size_t n, std::size_t depth,
                    const FoldOptions& options) {
  if (!(s >= 0.0)) fail(ErrorCode::invalid_input, "psi_sum_rate: s must be non-negative");
  const bool full = w.is_full();
  const std::size_t k = w.dim();
  if (!full && s > static_cast<double>(k)) return kNegInf;
  const std::vector<Subspace> candidates = psi_candidates(t, w, depth);
  const Matrix seed = stacked_transposes(candidates);
  const std::size_t count = candidates.size();
  const LogSum sum = fold_words(
      t, n, seed, LogSum{},
      [s, full, k, count](LogSum& acc, const Word&, const Matrix& product) {
        double best = kNegInf;
        for (std::size_t c = 0; c < count; ++c)
          best = std::max(best, log_svf_of(block_rows(product, c * k, k), s, full));
        acc.add(best);
      },
      [](LogSum& acc, const LogSum& part) { acc.merge(part); }, options);
  return sum.value() / static_cast<double>(n);
}

PressureEstimate pressure_estimate(const MatrixTuple& t, const Subspace& w, double s,
                                   const PressureConfig& config) {
  const std::vector<std::size_t> schedule = resolved_schedule(t, config);
  const FoldOptions options = fold_options(config);
  PressureEstimate out;
  out.s = s;
  out.depth = config.depth.value_or(t.d() - 1);
  out.upper_bound = std::numeric_limits<double>::infinity();
  for (std::size_t n : schedule) {
    const double phi = phi_sum_rate(t, w, s, n, options);
    const double psi = psi_sum_rate(t, w, s, n, out.depth, options);
    out.sequence.push_back({n, phi});
    out.psi_sequence.push_back({n, psi});
    out.upper_bound = std::min(out.upper_bound, psi);
  }
  out.value = out.sequence.back().rate;
  if (config.aitken && out.sequence.size() >= 3) {
    const std::size_t last = out.sequence.size() - 1;
    out.value = aitken(out.sequence[last - 2].rate, out.sequence[last - 1].rate, out.sequence[last].rate);
    out.method = "phi-sum+aitken";
    out.heuristic = true;
  }
  if (out.value > out.upper_bound) {
    out.value = out.upper_bound;
    out.clamped_to_bound = true;
  }
  return out;
}

DimensionEstimate affinity_dim(const MatrixTuple& t, const PressureConfig& config) {
  // Every term satisfies phi^s(T_I) <= alpha_+^{ns}, so the rate is negative
  // beyond log m / log(1/alpha_+).
  const double upper = std::log(static_cast<double>(t.m())) / std::log(1.0 / t.alpha_plus()) * (1.0 + 1e-12);
  return solve_root(t, Matrix::identity(t.d()), true, upper, config);
}

DimensionEstimate proj_affinity_dim(const MatrixTuple& t, const Subspace& w, const PressureConfig& config) {
  if (w.ambient_dim() != t.d())
    fail(ErrorCode::invalid_input, "proj_affinity_dim: subspace lives in the wrong dimension");
  const bool full = w.is_full();
  const Matrix seed = full ? Matrix::identity(t.d()) : w.basis().transpose();
  return solve_root(t, seed, full, static_cast<double>(w.dim()), config);
}

}  // namespace affdim
