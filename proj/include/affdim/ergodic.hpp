#pragma once

// Bernoulli and Markov measures on the full shift, Lyapunov exponents of the
// cocycle x -> T_{x_1}^*, Lyapunov dimension, and the projected local
// dimension functionals S_n and S.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "affdim/linalg.hpp"
#include "affdim/words.hpp"

namespace affdim {

class MeasureSpec {
 public:
  enum class Kind { bernoulli, markov };

  static MeasureSpec bernoulli(Vector p);
  /// Validates sum(p) = 1 (1e-12), row sums of P = 1 (1e-12) and pP = p (1e-10).
  static MeasureSpec markov(Vector p, Matrix transition);
  static MeasureSpec uniform(std::size_t m);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::size_t m() const { return p_.size(); }
  /// Stationary (or Bernoulli) letter probabilities, 0-based.
  [[nodiscard]] const Vector& p() const { return p_; }
  /// Transition matrix; for Bernoulli every row equals p.
  [[nodiscard]] const Matrix& transition() const { return transition_; }
  /// True when the transition digraph restricted to the support is strongly connected.
  [[nodiscard]] bool ergodic() const { return ergodic_; }
  /// Period of the chain on its support (1 for Bernoulli); 0 when not ergodic.
  [[nodiscard]] std::size_t period() const { return period_; }
  /// Cyclic class of each supported letter (0-based; letters outside the support get -1).
  [[nodiscard]] const std::vector<int>& cyclic_class() const { return cyclic_class_; }

 private:
  MeasureSpec() = default;
  void analyse_support();

  Kind kind_ = Kind::bernoulli;
  Vector p_;
  Matrix transition_;
  bool ergodic_ = false;
  std::size_t period_ = 0;
  std::vector<int> cyclic_class_;
};

/// Entropy in nats: -sum p_i log p_i, or -sum p_i P_ij log P_ij for Markov.
double entropy(const MeasureSpec& mu);

double log_cylinder_mass(const MeasureSpec& mu, const Word& word);
double cylinder_mass(const MeasureSpec& mu, const Word& word);

/// Draws a path of length n. The stream is keyed by (seed, index). When
/// `start` is given (1-based) the first letter is fixed to it.
Word sample_path(const MeasureSpec& mu, std::size_t n, std::uint64_t seed, std::uint64_t index = 0,
                 std::optional<std::uint32_t> start = std::nullopt);

enum class LyapunovMode { mc, exact_diagonal, exact_antidiagonal };
const char* to_string(LyapunovMode mode);

struct LyapunovSpectrum {
  Vector exponents;  ///< non-increasing, nats per symbol
  Vector stderr_;    ///< per exponent; zero in exact modes
  LyapunovMode mode = LyapunovMode::mc;
  std::size_t n = 0;
  std::size_t trials = 0;
};

struct MonteCarloOptions {
  std::size_t n = 2000;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  /// Steps between QR re-orthogonalizations.
  std::size_t stride = 10;
  int threads = 0;
  std::uint64_t budget = kDefaultVisitBudget;
};

/// Benettin-style estimate along sampled paths. The frame starts at the
/// identity and is multiplied on the left by T_{x_j}^T; per-trial exponents
/// are sorted before averaging.
LyapunovSpectrum lyapunov_mc(const MatrixTuple& t, const MeasureSpec& mu, const MonteCarloOptions& options = {});

/// Closed forms for all-diagonal and all-antidiagonal (d = 2) tuples; empty
/// for any other structure.
std::optional<LyapunovSpectrum> lyapunov_exact(const MatrixTuple& t, const MeasureSpec& mu);

/// Exact spectrum when available, Monte Carlo otherwise.
LyapunovSpectrum lyapunov_spectrum(const MatrixTuple& t, const MeasureSpec& mu, const MonteCarloOptions& options = {});

/// Unique s >= 0 with h + G^s = 0 (G piecewise linear below d, (s/d) sum above).
double lyapunov_dim(double h, const Vector& exponents);
double lyapunov_dim(const MeasureSpec& mu, const LyapunovSpectrum& spectrum);

/// k if h + Gamma(k) >= 0, else the root of h + Gamma(s) = 0 with
/// Gamma(s) = sum_{j <= floor s} Lambda_{p_j} + frac(s) Lambda_{p_{floor s + 1}}.
double s_via_gamma(double h, const Vector& exponents, const PivotVector& pivots, std::size_t k);

/// log(alpha_1 ... alpha_j)(Q^T T_I) for j = 0..k, tracked with per-compound
/// rescaling so that long words do not underflow.
class ProjectedGrowthTracker {
 public:
  ProjectedGrowthTracker(const MatrixTuple& t, const Subspace& w);

  void push(std::uint32_t letter);
  [[nodiscard]] std::size_t length() const { return length_; }
  /// Entry j is log(alpha_1 ... alpha_j); entry 0 is 0. -inf for zero products.
  [[nodiscard]] Vector log_partial_products() const;
  [[nodiscard]] double log_svf(double s) const;

 private:
  std::vector<std::vector<Matrix>> letter_compounds_;  // [j-1][letter-1]
  std::vector<Matrix> frames_;
  std::vector<double> log_scale_;
  std::size_t k_ = 0;
  std::size_t length_ = 0;
  Matrix scratch_;
};

struct SnResult {
  double value = 0.0;
  /// The cylinder has zero mass; the value is k by convention.
  bool zero_mass = false;
};

/// Closed-form solve of log phi^s = log mass on piecewise-linear segments
/// given log partial products L_0 = 0, L_1, ..., L_k.
SnResult s_from_growth(const Vector& log_partial, double log_mass);

/// S_n for the word I: k if phi^k(P_W T_I) >= mu([I]), else the unique s with equality.
SnResult s_n(const MeasureSpec& mu, const MatrixTuple& t, const Subspace& w, const Word& word);

struct SLimitResult {
  double estimate = 0.0;
  /// max - min of S_n over the final third of the schedule.
  double oscillation = 0.0;
  std::vector<std::pair<std::size_t, double>> trace;
  bool zero_mass = false;
};

/// Ten equally spaced prefix lengths ending at N.
std::vector<std::size_t> default_s_schedule(std::size_t length);

SLimitResult s_limit(const MeasureSpec& mu, const MatrixTuple& t, const Subspace& w, const Word& path,
                     std::vector<std::size_t> schedule = {});

struct SCluster {
  double center = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct SSample {
  std::uint64_t index = 0;
  double estimate = 0.0;
  double oscillation = 0.0;
  std::vector<std::pair<std::size_t, double>> trace;
};

struct SProfile {
  std::vector<SSample> samples;
  double s_lower = 0.0;
  double s_upper = 0.0;
  /// Clusters of estimates merged within `cluster_tolerance` (heuristic).
  std::vector<SCluster> clusters;
  double cluster_tolerance = 0.0;
  /// Counts over `histogram_bins` equal bins of [0, k].
  std::vector<std::size_t> histogram;
  std::size_t k = 0;
};

struct SExtremesOptions {
  std::size_t samples = 200;
  std::size_t length = 2000;
  std::uint64_t seed = 1;
  std::size_t histogram_bins = 20;
  int threads = 0;
};

SProfile s_extremes(const MeasureSpec& mu, const MatrixTuple& t, const Subspace& w,
                    const SExtremesOptions& options = {});

/// Single-linkage clusters of sorted values; a gap larger than `tolerance` starts a new cluster.
std::vector<SCluster> cluster_values(std::vector<double> values, double tolerance);

struct SupermultiplicativeReport {
  /// min over tested pairs with positive denominators of mu([IJ]) / (mu([I]) mu([J])).
  double constant = 0.0;
  std::size_t pairs_tested = 0;
  std::size_t zero_pair_count = 0;
  /// Up to 20 pairs (I, J) with mu([IJ]) = 0 but mu([I]) mu([J]) > 0.
  std::vector<std::pair<Word, Word>> zero_pairs;
};

SupermultiplicativeReport check_supermultiplicative(const MeasureSpec& mu, std::size_t max_len);

}  // namespace affdim
