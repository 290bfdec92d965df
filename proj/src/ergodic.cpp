#include "affdim/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "affdim/parallel.hpp"
#include "affdim/rng.hpp"

namespace affdim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void validate_probabilities(const Vector& p, const std::string& what) {
  if (p.size() < 1) fail(ErrorCode::invalid_input, what + ": empty probability vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0)
      fail(ErrorCode::invalid_input, what + "[" + std::to_string(i) + "] is not a probability");
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) fail(ErrorCode::invalid_input, what + " does not sum to 1");
}

std::uint32_t draw(CounterRng& rng, std::span<const double> weights) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    cumulative += weights[i];
    if (u < cumulative) return static_cast<std::uint32_t>(i + 1);
  }
  return static_cast<std::uint32_t>(last_positive + 1);
}

std::span<const double> row(const Matrix& m, std::size_t i) { return m.data().subspan(i * m.cols(), m.cols()); }

bool all_diagonal(const MatrixTuple& t) {
  for (const Matrix& a : t.matrices())
    for (std::size_t i = 0; i < t.d(); ++i)
      for (std::size_t j = 0; j < t.d(); ++j)
        if (i != j && a(i, j) != 0.0) return false;
  return true;
}

bool all_antidiagonal(const MatrixTuple& t) {
  if (t.d() != 2) return false;
  return std::all_of(t.matrices().begin(), t.matrices().end(),
                     [](const Matrix& a) { return a(0, 0) == 0.0 && a(1, 1) == 0.0; });
}

}  // namespace

// ---------------------------------------------------------------------------
// Measures

MeasureSpec MeasureSpec::bernoulli(Vector p) {
  validate_probabilities(p, "measure.p");
  MeasureSpec out;
  out.kind_ = Kind::bernoulli;
  out.transition_ = Matrix(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) out.transition_(i, j) = p[j];
  out.p_ = std::move(p);
  out.analyse_support();
  return out;
}

MeasureSpec MeasureSpec::markov(Vector p, Matrix transition) {
  validate_probabilities(p, "measure.p");
  const std::size_t m = p.size();
  if (transition.rows() != m || transition.cols() != m)
    fail(ErrorCode::invalid_input, "measure.P must be " + std::to_string(m) + "x" + std::to_string(m));
  for (std::size_t i = 0; i < m; ++i) {
    Vector r(row(transition, i).begin(), row(transition, i).end());
    validate_probabilities(r, "measure.P[" + std::to_string(i) + "]");
  }
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += p[i] * transition(i, j);
    if (std::abs(acc - p[j]) > 1e-10)
      fail(ErrorCode::invalid_input, "measure.p is not stationary for measure.P (column " + std::to_string(j) + ")");
  }
  MeasureSpec out;
  out.kind_ = Kind::markov;
  out.p_ = std::move(p);
  out.transition_ = std::move(transition);
  out.analyse_support();
  return out;
}

MeasureSpec MeasureSpec::uniform(std::size_t m) { return bernoulli(Vector(m, 1.0 / static_cast<double>(m))); }

void MeasureSpec::analyse_support() {
  const std::size_t m = p_.size();
  cyclic_class_.assign(m, -1);
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < m; ++i)
    if (p_[i] > 0.0) support.push_back(i);
  const std::size_t root = support.front();

  auto reach = [&](bool forward) {
    std::vector<long> level(m, -1);
    std::queue<std::size_t> queue;
    level[root] = 0;
    queue.push(root);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop();
      for (std::size_t v : support) {
        const double weight = forward ? transition_(u, v) : transition_(v, u);
        if (weight > 0.0 && level[v] < 0) {
          level[v] = level[u] + 1;
          queue.push(v);
        }
      }
    }
    return level;
  };
  const std::vector<long> forward = reach(true);
  const std::vector<long> backward = reach(false);
  ergodic_ = std::all_of(support.begin(), support.end(),
                         [&](std::size_t i) { return forward[i] >= 0 && backward[i] >= 0; });
  if (!ergodic_) {
    period_ = 0;
    return;
  }
  long g = 0;
  for (std::size_t u : support)
    for (std::size_t v : support)
      if (transition_(u, v) > 0.0) g = std::gcd(g, std::abs(forward[u] + 1 - forward[v]));
  period_ = static_cast<std::size_t>(g);
  for (std::size_t i : support) cyclic_class_[i] = static_cast<int>(forward[i] % g);
}

double entropy(const MeasureSpec& mu) {
  double h = 0.0;
  const Vector& p = mu.p();
  if (mu.kind() == MeasureSpec::Kind::bernoulli) {
    for (double x : p)
      if (x > 0.0) h -= x * std::log(x);
    return h;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double q = mu.transition()(i, j);
      if (q > 0.0) h -= p[i] * q * std::log(q);
    }
  }
  return h;
}

double log_cylinder_mass(const MeasureSpec& mu, const Word& word) {
  if (word.empty()) return 0.0;
  for (std::uint32_t letter : word.symbols())
    if (letter < 1 || letter > mu.m())
      fail(ErrorCode::invalid_input, "cylinder_mass: letter " + std::to_string(letter) + " outside the alphabet");
  double out = std::log(mu.p()[word[0] - 1]);
  for (std::size_t i = 1; i < word.size() && out != kNegInf; ++i) {
    const double q = mu.kind() == MeasureSpec::Kind::bernoulli ? mu.p()[word[i] - 1]
                                                               : mu.transition()(word[i - 1] - 1, word[i] - 1);
    out += std::log(q);
  }
  return out;
}

double cylinder_mass(const MeasureSpec& mu, const Word& word) { return std::exp(log_cylinder_mass(mu, word)); }

Word sample_path(const MeasureSpec& mu, std::size_t n, std::uint64_t seed, std::uint64_t index,
                 std::optional<std::uint32_t> start) {
  if (n < 1) fail(ErrorCode::invalid_input, "sample_path: n must be at least 1");
  CounterRng rng(seed, index);
  std::vector<std::uint32_t> letters;
  letters.reserve(n);
  if (start) {
    if (*start < 1 || *start > mu.m()) fail(ErrorCode::invalid_input, "sample_path: start letter outside the alphabet");
    letters.push_back(*start);
  } else {
    letters.push_back(draw(rng, mu.p()));
  }
  const bool bernoulli = mu.kind() == MeasureSpec::Kind::bernoulli;
  while (letters.size() < n) {
    const std::span<const double> weights = bernoulli ? std::span<const double>(mu.p()) : row(mu.transition(), letters.back() - 1);
    letters.push_back(draw(rng, weights));
  }
  return Word(std::move(letters));
}

// ---------------------------------------------------------------------------
// Lyapunov exponents

const char* to_string(LyapunovMode mode) {
  switch (mode) {
    case LyapunovMode::mc: return "mc";
    case LyapunovMode::exact_diagonal: return "exact-diagonal";
    case LyapunovMode::exact_antidiagonal: return "exact-antidiagonal";
  }
  return "unknown";
}

LyapunovSpectrum lyapunov_mc(const MatrixTuple& t, const MeasureSpec& mu, const MonteCarloOptions& options) {
  if (mu.m() != t.m()) fail(ErrorCode::invalid_input, "lyapunov_mc: measure and tuple use different alphabets");
  if (options.n < 1 || options.trials < 1) fail(ErrorCode::invalid_input, "lyapunov_mc: n and trials must be positive");
  if (options.n * options.trials > options.budget)
    fail(ErrorCode::resource_limit, "lyapunov_mc: n * trials exceeds the budget of " + std::to_string(options.budget));
  const std::size_t d = t.d();
  const std::vector<Matrix> adjoints = t.transposes();
  const std::size_t stride = std::max<std::size_t>(1, options.stride);
  std::vector<Vector> per_trial(options.trials);

  parallel_for(options.trials, options.threads, [&](std::size_t trial) {
    const Word path = sample_path(mu, options.n, options.seed, trial);
    Matrix frame = Matrix::identity(d);
    Matrix next(d, d);
    Vector logs(d, 0.0);
    for (std::size_t j = 0; j < options.n; ++j) {
      multiply_into(adjoints[path[j] - 1], frame, next);
      std::swap(frame, next);
      if ((j + 1) % stride == 0 || j + 1 == options.n) {
        QrResult qr = qr_decompose(frame);
        for (std::size_t i = 0; i < d; ++i) logs[i] += std::log(std::abs(qr.r(i, i)));
        frame = std::move(qr.q);
      }
    }
    for (double& x : logs) x /= static_cast<double>(options.n);
    std::sort(logs.begin(), logs.end(), std::greater<>());
    per_trial[trial] = std::move(logs);
  });

  LyapunovSpectrum out;
  out.mode = LyapunovMode::mc;
  out.n = options.n;
  out.trials = options.trials;
  out.exponents.assign(d, 0.0);
  out.stderr_.assign(d, 0.0);
  const double count = static_cast<double>(options.trials);
  for (const Vector& v : per_trial)
    for (std::size_t i = 0; i < d; ++i) out.exponents[i] += v[i] / count;
  if (options.trials > 1) {
    for (std::size_t i = 0; i < d; ++i) {
      double ss = 0.0;
      for (const Vector& v : per_trial) ss += (v[i] - out.exponents[i]) * (v[i] - out.exponents[i]);
      out.stderr_[i] = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
    }
  }
  return out;
}

std::optional<LyapunovSpectrum> lyapunov_exact(const MatrixTuple& t, const MeasureSpec& mu) {
  if (mu.m() != t.m()) fail(ErrorCode::invalid_input, "lyapunov_exact: measure and tuple use different alphabets");
  if (!mu.ergodic()) return std::nullopt;
  const Vector& p = mu.p();
  const std::size_t d = t.d();
  LyapunovSpectrum out;
  out.stderr_.assign(d, 0.0);

  if (all_diagonal(t)) {
    out.mode = LyapunovMode::exact_diagonal;
    out.exponents.assign(d, 0.0);
    for (std::size_t i = 0; i < t.m(); ++i) {
      if (p[i] <= 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) out.exponents[j] += p[i] * std::log(std::abs(t.matrices()[i](j, j)));
    }
    std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
    return out;
  }

  if (all_antidiagonal(t)) {
    // Two-step products are diag(u, v) with u = c_{x1} d_{x2} c_{x3} ...
    // Odd and even positions see letters with frequencies f_odd, f_even; they
    // coincide with p unless the chain has even period, in which case they
    // are 2p restricted to cyclic classes of one parity. Paths starting in
    // the other parity swap u and v, so the exponent pair is the same.
    out.mode = LyapunovMode::exact_antidiagonal;
    const std::size_t m = t.m();
    Vector f_odd(p), f_even(p);
    if (mu.period() % 2 == 0) {
      for (std::size_t i = 0; i < m; ++i) {
        const bool even_class = mu.cyclic_class()[i] >= 0 && mu.cyclic_class()[i] % 2 == 0;
        f_odd[i] = even_class ? 2.0 * p[i] : 0.0;
        f_even[i] = even_class ? 0.0 : 2.0 * p[i];
      }
    }
    double u = 0.0, v = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double log_c = std::log(std::abs(t.matrices()[i](0, 1)));
      const double log_d = std::log(std::abs(t.matrices()[i](1, 0)));
      if (f_odd[i] > 0.0) {
        u += f_odd[i] * log_c;
        v += f_odd[i] * log_d;
      }
      if (f_even[i] > 0.0) {
        u += f_even[i] * log_d;
        v += f_even[i] * log_c;
      }
    }
    out.exponents = {0.5 * std::max(u, v), 0.5 * std::min(u, v)};
    return out;
  }
  return std::nullopt;
}

LyapunovSpectrum lyapunov_spectrum(const MatrixTuple& t, const MeasureSpec& mu, const MonteCarloOptions& options) {
  if (auto exact = lyapunov_exact(t, mu)) return *exact;
  return lyapunov_mc(t, mu, options);
}

double lyapunov_dim(double h, const Vector& exponents) {
  if (!(h >= 0.0)) fail(ErrorCode::invalid_input, "lyapunov_dim: entropy must be non-negative");
  if (exponents.empty()) fail(ErrorCode::invalid_input, "lyapunov_dim: empty spectrum");
  for (double x : exponents)
    if (!(x < 0.0)) fail(ErrorCode::invalid_input, "lyapunov_dim: exponents must be negative");
  if (h == 0.0) return 0.0;
  const std::size_t d = exponents.size();
  double cumulative = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (h + cumulative + exponents[j] <= 0.0) return static_cast<double>(j) + (h + cumulative) / -exponents[j];
    cumulative += exponents[j];
  }
  return -static_cast<double>(d) * h / cumulative;
}

double lyapunov_dim(const MeasureSpec& mu, const LyapunovSpectrum& spectrum) {
  return lyapunov_dim(entropy(mu), spectrum.exponents);
}

double s_via_gamma(double h, const Vector& exponents, const PivotVector& pivots, std::size_t k) {
  if (pivots.positions.size() < k) fail(ErrorCode::invalid_input, "s_via_gamma: need k pivot positions");
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t p = pivots.positions[j];
    if (p < 1 || p > exponents.size() || (j > 0 && p <= pivots.positions[j - 1]))
      fail(ErrorCode::invalid_input, "s_via_gamma: pivot positions must be strictly increasing in 1..d");
  }
  double cumulative = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double lambda = exponents[pivots.positions[j] - 1];
    if (h + cumulative + lambda < 0.0) return static_cast<double>(j) + (h + cumulative) / -lambda;
    cumulative += lambda;
  }
  return static_cast<double>(k);
}

// ---------------------------------------------------------------------------
// Projected growth and S

ProjectedGrowthTracker::ProjectedGrowthTracker(const MatrixTuple& t, const Subspace& w) : k_(w.dim()) {
  if (w.ambient_dim() != t.d()) fail(ErrorCode::invalid_input, "tracker: subspace lives in the wrong dimension");
  const Matrix qt = w.basis().transpose();
  for (std::size_t j = 1; j <= k_; ++j) {
    std::vector<Matrix> per_letter;
    for (const Matrix& a : t.matrices()) per_letter.push_back(compound_matrix(a, j));
    letter_compounds_.push_back(std::move(per_letter));
    frames_.push_back(compound_matrix(qt, j));
    log_scale_.push_back(0.0);
  }
}

void ProjectedGrowthTracker::push(std::uint32_t letter) {
  for (std::size_t j = 0; j < k_; ++j) {
    multiply_into(frames_[j], letter_compounds_[j][letter - 1], scratch_);
    std::swap(frames_[j], scratch_);
    const double scale = frames_[j].max_abs();
    if (scale > 0.0) {
      frames_[j] *= 1.0 / scale;
      log_scale_[j] += std::log(scale);
    }
  }
  ++length_;
}

Vector ProjectedGrowthTracker::log_partial_products() const {
  Vector out(k_ + 1, 0.0);
  for (std::size_t j = 0; j < k_; ++j) {
    const double top = spectral_norm(frames_[j]);
    out[j + 1] = top > 0.0 ? log_scale_[j] + std::log(top) : kNegInf;
  }
  return out;
}

double ProjectedGrowthTracker::log_svf(double s) const {
  const Vector logs = log_partial_products();
  if (!(s >= 0.0) || s > static_cast<double>(k_)) return kNegInf;
  const auto j = static_cast<std::size_t>(std::floor(s));
  const double frac = s - static_cast<double>(j);
  if (frac == 0.0) return logs[j];
  return logs[j] + frac * (logs[j + 1] - logs[j]);
}

SnResult s_from_growth(const Vector& log_partial, double log_mass) {
  const std::size_t k = log_partial.size() - 1;
  if (log_mass == kNegInf) return {static_cast<double>(k), true};
  if (log_partial[k] >= log_mass) return {static_cast<double>(k), false};
  for (std::size_t j = 0; j < k; ++j) {
    if (log_partial[j + 1] >= log_mass) continue;
    const double slope = log_partial[j + 1] - log_partial[j];
    if (slope == kNegInf) return {static_cast<double>(j), false};
    const double s = static_cast<double>(j) + (log_mass - log_partial[j]) / slope;
    return {std::clamp(s, static_cast<double>(j), static_cast<double>(j + 1)), false};
  }
  return {static_cast<double>(k), false};
}

SnResult s_n(const MeasureSpec& mu, const MatrixTuple& t, const Subspace& w, const Word& word) {
  if (word.empty()) fail(ErrorCode::invalid_input, "s_n: word must be non-empty");
  ProjectedGrowthTracker tracker(t, w);
  for (std::uint32_t letter : word.symbols()) {
    if (letter < 1 || letter > t.m()) fail(ErrorCode::invalid_input, "s_n: letter outside the alphabet");
    tracker.push(letter);
  }
  return s_from_growth(tracker.log_partial_products(), log_cylinder_mass(mu, word));
}

std::vector<std::size_t> default_s_schedule(std::size_t length) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i <= 10; ++i) {
    const std::size_t n = std::max<std::size_t>(1, length * i / 10);
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  return out;
}

SLimitResult s_limit(const MeasureSpec& mu, const MatrixTuple& t, const Subspace& w, const Word& path,
                     std::vector<std::size_t> schedule) {
  if (path.empty()) fail(ErrorCode::invalid_input, "s_limit: empty path");
  if (schedule.empty()) schedule = default_s_schedule(path.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1 || schedule[i] > path.size() || (i > 0 && schedule[i] <= schedule[i - 1]))
      fail(ErrorCode::invalid_input, "s_limit: schedule must be increasing within 1..N");
  }
  ProjectedGrowthTracker tracker(t, w);
  const bool bernoulli = mu.kind() == MeasureSpec::Kind::bernoulli;
  SLimitResult out;
  double log_mass = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < schedule.back(); ++i) {
    const std::uint32_t letter = path[i];
    if (letter < 1 || letter > t.m()) fail(ErrorCode::invalid_input, "s_limit: letter outside the alphabet");
    tracker.push(letter);
    if (i == 0 || bernoulli) {
      log_mass += std::log(mu.p()[letter - 1]);
    } else {
      log_mass += std::log(mu.transition()(path[i - 1] - 1, letter - 1));
    }
    if (i + 1 == schedule[next]) {
      const SnResult r = s_from_growth(tracker.log_partial_products(), log_mass);
      out.zero_mass = out.zero_mass || r.zero_mass;
      out.trace.emplace_back(i + 1, r.value);
      ++next;
    }
  }
  out.estimate = out.trace.back().second;
  const std::size_t tail = (out.trace.size() + 2) / 3;
  double lo = out.estimate, hi = out.estimate;
  for (std::size_t i = out.trace.size() - tail; i < out.trace.size(); ++i) {
    lo = std::min(lo, out.trace[i].second);
    hi = std::max(hi, out.trace[i].second);
  }
  out.oscillation = hi - lo;
  return out;
}

std::vector<SCluster> cluster_values(std::vector<double> values, double tolerance) {
  std::sort(values.begin(), values.end());
  std::vector<SCluster> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (out.empty() || values[i] - out.back().hi > tolerance) {
      if (!out.empty()) out.back().center = sum / static_cast<double>(out.back().count);
      out.push_back({values[i], values[i], values[i], 0});
      sum = 0.0;
    }
    out.back().hi = values[i];
    ++out.back().count;
    sum += values[i];
  }
  if (!out.empty()) out.back().center = sum / static_cast<double>(out.back().count);
  return out;
}

SProfile s_extremes(const MeasureSpec& mu, const MatrixTuple& t, const Subspace& w, const SExtremesOptions& options) {
  if (mu.m() != t.m()) fail(ErrorCode::invalid_input, "s_extremes: measure and tuple use different alphabets");
  if (options.samples < 1 || options.length < 1)
    fail(ErrorCode::invalid_input, "s_extremes: samples and length must be positive");
  SProfile out;
  out.k = w.dim();
  out.samples.resize(options.samples);
  parallel_for(options.samples, options.threads, [&](std::size_t i) {
    const Word path = sample_path(mu, options.length, options.seed, i);
    SLimitResult r = s_limit(mu, t, w, path);
    out.samples[i] = {i, r.estimate, r.oscillation, std::move(r.trace)};
  });
  std::vector<double> values;
  double worst_oscillation = 0.0;
  for (const SSample& s : out.samples) {
    values.push_back(s.estimate);
    worst_oscillation = std::max(worst_oscillation, s.oscillation);
  }
  out.s_lower = *std::min_element(values.begin(), values.end());
  out.s_upper = *std::max_element(values.begin(), values.end());
  out.cluster_tolerance = std::max(1e-2, 2.0 * worst_oscillation);
  out.clusters = cluster_values(values, out.cluster_tolerance);
  const std::size_t bins = std::max<std::size_t>(1, options.histogram_bins);
  out.histogram.assign(bins, 0);
  for (double v : values) {
    const auto bin = static_cast<std::size_t>(v / static_cast<double>(out.k) * static_cast<double>(bins));
    ++out.histogram[std::min(bin, bins - 1)];
  }
  return out;
}

SupermultiplicativeReport check_supermultiplicative(const MeasureSpec& mu, std::size_t max_len) {
  if (max_len < 1) fail(ErrorCode::invalid_input, "check_supermultiplicative: max_len must be at least 1");
  std::vector<Word> words;
  std::vector<Word> level{Word()};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<Word> next;
    for (const Word& w : level) {
      for (std::uint32_t a = 1; a <= mu.m(); ++a) {
        Word longer = w;
        longer.push_back(a);
        next.push_back(std::move(longer));
      }
    }
    if (words.size() + next.size() > 20000)
      fail(ErrorCode::resource_limit, "check_supermultiplicative: more than 20000 words; lower max_len");
    words.insert(words.end(), next.begin(), next.end());
    level = std::move(next);
  }
  std::vector<double> mass(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) mass[i] = cylinder_mass(mu, words[i]);

  SupermultiplicativeReport out;
  out.constant = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    for (std::size_t j = 0; j < words.size(); ++j) {
      if (mass[j] <= 0.0) continue;
      ++out.pairs_tested;
      const double joint = cylinder_mass(mu, words[i].concat(words[j]));
      out.constant = std::min(out.constant, joint / (mass[i] * mass[j]));
      if (joint == 0.0) {
        ++out.zero_pair_count;
        if (out.zero_pairs.size() < 20) out.zero_pairs.emplace_back(words[i], words[j]);
      }
    }
  }
  if (out.pairs_tested == 0) out.constant = 0.0;
  return out;
}

}  // namespace affdim
