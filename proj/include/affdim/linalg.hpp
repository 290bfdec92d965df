#pragma once

// Dense small-dimension linear algebra used throughout the toolkit.
//
// Supported ambient dimension is d <= 16 (kMaxDimension). Exterior powers are
// indexed by lexicographically ordered index sets: for k = 2, d = 3 the rows
// and columns are ordered {1,2}, {1,3}, {2,3}.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace affdim {

inline constexpr std::size_t kMaxDimension = 16;

using Vector = std::vector<double>;

/// Row-major dense real matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> entries);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  /// Matrix whose columns are the given vectors (all of equal length).
  static Matrix from_columns(const std::vector<Vector>& columns);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<const double> data() const { return data_; }

  [[nodiscard]] Matrix transpose() const;
  [[nodiscard]] Vector column(std::size_t c) const;
  [[nodiscard]] std::vector<std::vector<double>> to_rows() const;

  [[nodiscard]] bool is_finite() const;
  [[nodiscard]] double max_abs() const;
  /// Maximum absolute row sum.
  [[nodiscard]] double inf_norm() const;

  Matrix& operator*=(double scale);
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator*(double scale, Matrix a);
  friend Matrix operator+(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  friend Vector operator*(const Matrix& a, std::span<const double> x);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Singular values in non-increasing order, length min(rows, cols), computed
/// by one-sided Jacobi rotations. Values at or below the numerical-rank floor
/// max(rows, cols) * eps * alpha_1 are reported as exact zeros.
Vector singular_values(const Matrix& a);

/// Largest singular value (operator 2-norm).
double spectral_norm(const Matrix& a);

double determinant(const Matrix& a);

/// Singular value function phi^s of a square matrix. For s >= d this is
/// |det A|^{s/d}. 0^0 is taken as 1.
double svf(const Matrix& a, double s);

/// log phi^s computed from a list of singular values alpha_1 >= alpha_2 >= ...
/// Requires s <= values.size(); returns -inf when a needed factor is zero.
double log_svf_from_values(std::span<const double> values, double s);

struct SvfPair {
  double direct;
  double transposed;
};

/// phi^s(A) and phi^s(A^T), which agree up to rounding.
SvfPair svf_dual_check(const Matrix& a, double s);

/// k-th compound matrix: entries are the k x k minors of A indexed by
/// lexicographically ordered row and column index sets. Works for
/// rectangular A with 1 <= k <= min(rows, cols).
Matrix compound_matrix(const Matrix& a, std::size_t k);

/// k-fold exterior power of a square d x d matrix, C(d,k) x C(d,k).
Matrix exterior_power(const Matrix& a, std::size_t k);

/// phi^s(A) = ||A^k||^{k+1-s} ||A^{k+1}||^{s-k}, k = floor(s), with ||A^0|| = 1.
double svf_via_wedge(const Matrix& a, double s);

/// Lexicographically ordered k-subsets of {0, ..., n-1}.
std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k);

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

struct QrResult {
  Matrix q;  ///< rows x cols with orthonormal columns
  Matrix r;  ///< cols x cols upper triangular
};

/// Thin Householder QR of a matrix with rows >= cols.
QrResult qr_decompose(const Matrix& a);

/// Solves A X = B for square invertible A by LU with partial pivoting.
Matrix solve(const Matrix& a, const Matrix& b);

/// Orthonormal basis (as columns) of the span of the given columns, computed by
/// modified Gram-Schmidt with one re-orthogonalization pass. Columns whose
/// remaining norm falls to `threshold` times their original norm are dropped.
Matrix orthonormal_span(const Matrix& columns, double threshold = 1e-10);

/// Orthonormal basis of the null space of A (columns), using the given
/// relative singular value threshold.
Matrix null_space(const Matrix& a, double rel_threshold = 1e-10);

/// A linear subspace W of R^d stored as a d x k matrix with orthonormal columns.
class Subspace {
 public:
  /// Orthonormalizes the given spanning columns; throws degenerate_subspace if
  /// they are not linearly independent within 1e-10.
  explicit Subspace(const Matrix& spanning_columns);

  static Subspace full(std::size_t d);
  static Subspace span(const std::vector<Vector>& vectors);
  /// Coordinate subspace spanned by e_i for the given 0-based indices.
  static Subspace coordinate(std::size_t d, std::initializer_list<std::size_t> axes);

  [[nodiscard]] std::size_t ambient_dim() const { return basis_.rows(); }
  [[nodiscard]] std::size_t dim() const { return basis_.cols(); }
  [[nodiscard]] bool is_full() const { return dim() == ambient_dim(); }
  [[nodiscard]] const Matrix& basis() const { return basis_; }

 private:
  Subspace() = default;
  Matrix basis_;
};

/// Orthogonal projection P_W = B B^T.
Matrix projector(const Subspace& w);

/// Spectral-norm distance ||P_V - P_W||; 1 when the dimensions differ.
double subspace_distance(const Subspace& v, const Subspace& w);

/// Orthonormal basis of A(W). Throws degenerate_subspace if A collapses W.
Subspace image_subspace(const Matrix& a, const Subspace& w);

/// Strictly increasing 1-based pivot column positions.
struct PivotVector {
  std::vector<std::size_t> positions;
  friend bool operator==(const PivotVector&, const PivotVector&) = default;
};

struct RrefResult {
  Matrix reduced;
  PivotVector pivots;
};

/// Reduced row echelon form by Gauss-Jordan elimination with partial pivoting.
/// An entry qualifies as a pivot iff |entry| > 1e-10 * ||M||_inf.
RrefResult rref(const Matrix& m);

/// Pivot position vector of W relative to an ordered basis of R^d given as the
/// columns of `basis`. Throws invalid_input when the basis is degenerate.
PivotVector pivot_vector(const Subspace& w, const Matrix& basis);

}  // namespace affdim
