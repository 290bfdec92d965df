#pragma once

// Random generators and independent reference implementations used by the
// unit, property and acceptance suites. The oracles deliberately avoid the
// library's own SVD, RREF and enumeration code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "affdim/linalg.hpp"
#include "affdim/words.hpp"

namespace testing {

using affdim::Matrix;
using affdim::Vector;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return uniform() < p; }

  Matrix matrix(std::size_t rows, std::size_t cols) {
    Matrix a(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) a(r, c) = normal();
    return a;
  }

  // Invertible with condition number bounded by construction: Q1 diag(sigma) Q2.
  Matrix well_conditioned(std::size_t d, double lo, double hi) {
    const Matrix q1 = affdim::qr_decompose(matrix(d, d)).q;
    const Matrix q2 = affdim::qr_decompose(matrix(d, d)).q;
    Vector sigma(d);
    for (double& s : sigma) s = uniform(lo, hi);
    return q1 * Matrix::diagonal(sigma) * q2;
  }

  Matrix contracting(std::size_t d, double lo = 0.05, double hi = 0.9) { return well_conditioned(d, lo, hi); }

  affdim::MatrixTuple tuple(std::size_t m, std::size_t d, double lo = 0.05, double hi = 0.9) {
    std::vector<Matrix> maps;
    for (std::size_t i = 0; i < m; ++i) maps.push_back(contracting(d, lo, hi));
    return affdim::MatrixTuple(std::move(maps));
  }

  Matrix diagonal_contracting(std::size_t d, double lo = 0.05, double hi = 0.9) {
    Vector v(d);
    for (double& x : v) x = (coin() ? 1.0 : -1.0) * uniform(lo, hi);
    return Matrix::diagonal(v);
  }

  affdim::Subspace subspace(std::size_t d, std::size_t k) {
    std::vector<Vector> cols;
    for (std::size_t i = 0; i < k; ++i) {
      Vector v(d);
      for (double& x : v) x = normal();
      cols.push_back(v);
    }
    return affdim::Subspace::span(cols);
  }

  Vector probability(std::size_t m) {
    Vector p(m);
    for (double& x : p) x = uniform(0.1, 1.0);
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= sum;
    return p;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// --- symmetric eigenvalues by cyclic two-sided Jacobi rotations ------------

inline std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> s) {
  const std::size_t n = s.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += s[p][q] * s[p][q];
    if (off < 1e-300) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (s[p][q] == 0.0) continue;
        const double theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s[k][p], skq = s[k][q];
          s[k][p] = c * skp - sn * skq;
          s[k][q] = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s[p][k], sqk = s[q][k];
          s[p][k] = c * spk - sn * sqk;
          s[q][k] = sn * spk + c * sqk;
        }
      }
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = s[i][i];
  std::sort(out.rbegin(), out.rend());
  return out;
}

// Singular values as square roots of the eigenvalues of A^T A.
inline std::vector<double> oracle_singular_values(const Matrix& a) {
  const std::size_t n = a.cols();
  std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t r = 0; r < a.rows(); ++r) ata[i][j] += a(r, i) * a(r, j);
  std::vector<double> ev = symmetric_eigenvalues(ata);
  ev.resize(std::min(a.rows(), a.cols()));
  for (double& x : ev) x = std::sqrt(std::max(0.0, x));
  return ev;
}

inline double oracle_svf(const Matrix& a, double s) {
  const std::vector<double> sv = oracle_singular_values(a);
  const auto d = static_cast<double>(sv.size());
  if (s >= d) {
    double p = 1.0;
    for (double x : sv) p *= x;
    return std::pow(p, s / d);
  }
  const auto whole = static_cast<std::size_t>(std::floor(s));
  double p = 1.0;
  for (std::size_t i = 0; i < whole; ++i) p *= sv[i];
  const double frac = s - static_cast<double>(whole);
  if (frac > 0.0) p *= std::pow(sv[whole], frac);
  return p;
}

// --- determinants and minors by cofactor expansion --------------------------

inline double laplace_determinant(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0) return 1.0;
  if (n == 1) return a[0][0];
  double det = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<double>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<double> row;
      for (std::size_t cc = 0; cc < n; ++cc)
        if (cc != c) row.push_back(a[r][cc]);
      minor.push_back(row);
    }
    det += ((c % 2 == 0) ? 1.0 : -1.0) * a[0][c] * laplace_determinant(minor);
  }
  return det;
}

// k-subsets of {0..n-1} in lexicographic order, built from bit masks.
inline std::vector<std::vector<std::size_t>> lexicographic_subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) set.push_back(i);
    out.push_back(set);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Matrix oracle_compound(const Matrix& a, std::size_t k) {
  const auto rows = lexicographic_subsets(a.rows(), k);
  const auto cols = lexicographic_subsets(a.cols(), k);
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      std::vector<std::vector<double>> sub(k, std::vector<double>(k));
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) sub[r][c] = a(rows[i][r], cols[j][c]);
      out(i, j) = laplace_determinant(sub);
    }
  }
  return out;
}

// --- pivot positions by independent elimination ------------------------------

// Pivot columns (1-based) of X by Gauss-Jordan elimination, column by column,
// choosing the largest remaining entry; entries below 1e-9 * max|X| count as zero.
inline std::vector<std::size_t> oracle_pivots(Matrix x) {
  std::vector<std::size_t> out;
  double scale = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) scale = std::max(scale, std::abs(x(r, c)));
  if (scale == 0.0) return out;
  std::size_t row = 0;
  for (std::size_t c = 0; c < x.cols() && row < x.rows(); ++c) {
    std::size_t best = row;
    for (std::size_t r = row + 1; r < x.rows(); ++r)
      if (std::abs(x(r, c)) > std::abs(x(best, c))) best = r;
    if (std::abs(x(best, c)) <= 1e-9 * scale) continue;
    for (std::size_t k = 0; k < x.cols(); ++k) std::swap(x(row, k), x(best, k));
    for (std::size_t r = 0; r < x.rows(); ++r) {
      if (r == row) continue;
      const double f = x(r, c) / x(row, c);
      for (std::size_t k = 0; k < x.cols(); ++k) x(r, k) -= f * x(row, k);
    }
    out.push_back(c + 1);
    ++row;
  }
  return out;
}

// Solves B y = v by Cramer's rule (small d only).
inline Vector cramer_solve(const Matrix& b, const Vector& v) {
  const std::size_t d = b.rows();
  std::vector<std::vector<double>> rows(d, std::vector<double>(d));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) rows[r][c] = b(r, c);
  const double det = laplace_determinant(rows);
  Vector y(d);
  for (std::size_t c = 0; c < d; ++c) {
    auto replaced = rows;
    for (std::size_t r = 0; r < d; ++r) replaced[r][c] = v[r];
    y[c] = laplace_determinant(replaced) / det;
  }
  return y;
}

// --- scalar equations ---------------------------------------------------------

// Root of sum |x_i|^t = 1, by Newton's method from t = 1 (the sum is convex in t).
inline double oracle_moran(const std::vector<double>& ratios) {
  double t = 1.0;
  for (int it = 0; it < 200; ++it) {
    double f = -1.0, df = 0.0;
    for (double r : ratios) {
      const double a = std::abs(r);
      f += std::pow(a, t);
      df += std::pow(a, t) * std::log(a);
    }
    const double step = f / df;
    t -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return t;
}

// --- brute-force word sums ------------------------------------------------------

inline void for_each_word(std::size_t m, std::size_t n, const std::function<void(const affdim::Word&)>& visit) {
  std::vector<std::uint32_t> letters(n, 1);
  for (;;) {
    visit(affdim::Word(letters));
    std::size_t pos = n;
    while (pos > 0 && letters[pos - 1] == m) letters[--pos] = 1;
    if (pos == 0) return;
    ++letters[pos - 1];
  }
}

// (1/n) log sum_I svf(T_I^T P_W, s), with every product recomputed from scratch.
inline double oracle_phi_rate(const affdim::MatrixTuple& t, const Matrix& projector, double s, std::size_t n) {
  double sum = 0.0;
  for_each_word(t.m(), n, [&](const affdim::Word& w) {
    const Matrix prod = affdim::word_product(t, w).transpose() * projector;
    sum += oracle_svf(prod, s);
  });
  return std::log(sum) / static_cast<double>(n);
}

inline Matrix oracle_projector(const affdim::Subspace& w) {
  const Matrix& q = w.basis();
  return q * q.transpose();
}

}  // namespace testing
