#pragma once

// Finite-n pressure sums and the dimension solvers built on them.
//
// Rates are (1/n) log of cylinder sums, in nats per symbol. For a proper
// subspace W of dimension k the phi-sum term is phi^s(T_I^* P_W), whose
// singular values are those of Q^T T_I where Q is the orthonormal basis of W.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "affdim/linalg.hpp"
#include "affdim/words.hpp"

namespace affdim {

struct PressureConfig {
  /// Word lengths to evaluate, strictly increasing. Empty selects default_schedule(m).
  std::vector<std::size_t> schedule;
  /// Candidate depth for psi; defaults to d - 1.
  std::optional<std::size_t> depth;
  double tolerance = 1e-4;
  int max_iterations = 200;
  bool aitken = false;
  std::uint64_t budget = kDefaultVisitBudget;
  int threads = 0;
  /// Upper limit on cached log singular values (doubles) before the solvers
  /// fall back to re-enumerating words for every evaluation.
  std::size_t table_limit = std::size_t{1} << 25;
};

/// With n_max the largest n <= 20 such that m^n <= 2^20, returns the
/// distinct values of {n_max/4, n_max/2, n_max} (each at least 1).
std::vector<std::size_t> default_schedule(std::size_t m);

/// log phi^s from logarithms of singular values (entries may be -inf). When
/// `full` is set the values describe a square matrix and s may exceed their
/// count, using (s/d) log|det|; otherwise s beyond the count yields -inf.
double log_svf_from_logs(std::span<const double> log_values, double s, bool full);

/// (1/n) log sum_{|I|=n} phi^s(T_I^* P_W). Returns -inf when s > dim W < d.
double phi_sum_rate(const MatrixTuple& t, const Subspace& w, double s, std::size_t n,
                    const FoldOptions& options = {});
/// Full-space version (1/n) log sum phi^s(T_I); s may exceed d.
double phi_sum_rate(const MatrixTuple& t, double s, std::size_t n, const FoldOptions& options = {});

/// The subspaces T_K^* W for |K| <= depth, deduplicated (projector distance
/// <= 1e-10) in breadth-first order. The list for depth D is a prefix of the
/// list for depth D + 1.
std::vector<Subspace> psi_candidates(const MatrixTuple& t, const Subspace& w, std::size_t depth);

/// max over |K| <= depth of phi^s(T_I^* P_{T_K^* W}).
double psi_value(const MatrixTuple& t, const Subspace& w, double s, const Word& word, std::size_t depth);

/// (1/n) log sum_{|I|=n} psi_value(I, depth).
double psi_sum_rate(const MatrixTuple& t, const Subspace& w, double s, std::size_t n,
                    std::size_t depth, const FoldOptions& options = {});

struct RatePoint {
  std::size_t n;
  double rate;
};

struct PressureEstimate {
  double s = 0.0;
  /// phi-sum rate at the largest n, or its Aitken extrapolation (heuristic).
  double value = 0.0;
  /// min over the schedule of psi-sum rates; an upper bound for the pressure.
  double upper_bound = 0.0;
  std::vector<RatePoint> sequence;
  std::vector<RatePoint> psi_sequence;
  std::string method = "phi-sum";
  std::size_t depth = 0;
  bool heuristic = false;
  /// The phi value exceeded the psi bound and was lowered to it.
  bool clamped_to_bound = false;
};

PressureEstimate pressure_estimate(const MatrixTuple& t, const Subspace& w, double s,
                                   const PressureConfig& config = {});

struct TracePoint {
  double s;
  double rate;
};

struct DimensionEstimate {
  double value = 0.0;
  /// Bracket for the root of the rate at word length n.
  double lo = 0.0;
  double hi = 0.0;
  int iterations = 0;
  double pressure_at_value = 0.0;
  std::size_t n = 0;
  /// Difference of the rates at the two largest schedule lengths, evaluated
  /// at `value` and converted to s units with log(1/alpha_+). Heuristic.
  double heuristic_halfwidth = 0.0;
  /// The iteration cap was hit before the bracket reached the tolerance.
  bool flagged = false;
  /// The rate at the upper end of the search interval was non-negative, so
  /// the value was clamped there (k for projections).
  bool clamped = false;
  std::vector<TracePoint> trace;

  [[nodiscard]] double width() const { return hi - lo; }
};

/// Root of s -> phi_sum_rate(T, s, n) at the largest schedule length.
DimensionEstimate affinity_dim(const MatrixTuple& t, const PressureConfig& config = {});

/// sup{s in [0, k] : rate(s) >= 0} for the projected rate.
DimensionEstimate proj_affinity_dim(const MatrixTuple& t, const Subspace& w,
                                    const PressureConfig& config = {});

}  // namespace affdim
