#include "affdim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "affdim/error.hpp"

namespace affdim {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows()
        << "x" << b.cols();
    fail(ErrorCode::invalid_input, msg.str());
  }
}

void require_finite(const Matrix& a, const char* op) {
  if (!a.is_finite()) fail(ErrorCode::invalid_input, std::string(op) + ": non-finite entry");
}

// One-sided (Hestenes) Jacobi. Works on a copy with rows >= cols; the column
// norms of the rotated matrix are the singular values. Optionally accumulates
// the right rotations V so that A V has orthogonal columns.
struct JacobiResult {
  Vector sigma;  // per column, unsorted
  Matrix v;
};

JacobiResult jacobi(Matrix u, bool want_v) {
  const std::size_t n = u.cols();
  const std::size_t m = u.rows();
  Matrix v = want_v ? Matrix::identity(n) : Matrix();
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double up = u(i, p), uq = u(i, q);
          alpha += up * up;
          beta += uq * uq;
          gamma += up * uq;
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double up = u(i, p), uq = u(i, q);
          u(i, p) = c * up - s * uq;
          u(i, q) = s * up + c * uq;
        }
        if (want_v) {
          for (std::size_t i = 0; i < n; ++i) {
            const double vp = v(i, p), vq = v(i, q);
            v(i, p) = c * vp - s * vq;
            v(i, q) = s * vp + c * vq;
          }
        }
      }
    }
    if (!rotated) break;
  }
  JacobiResult out;
  out.sigma.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += u(i, j) * u(i, j);
    out.sigma[j] = std::sqrt(acc);
  }
  out.v = std::move(v);
  return out;
}

// LU factorization with partial pivoting, in place. Returns the permutation
// sign, or 0 when a pivot is exactly zero.
int lu_in_place(Matrix& a, std::vector<std::size_t>& perm) {
  const std::size_t n = a.rows();
  perm.resize(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  int sign = 1;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    }
    if (best == 0.0) return 0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(perm[k], perm[piv]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return sign;
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) fail(ErrorCode::invalid_input, "Matrix: ragged initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Matrix Matrix::diagonal(std::span<const double> entries) {
  Matrix out(entries.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) out(i, i) = entries[i];
  return out;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) fail(ErrorCode::invalid_input, "Matrix: ragged rows");
    for (std::size_t j = 0; j < c; ++j) out(i, j) = rows[i][j];
  }
  return out;
}

Matrix Matrix::from_columns(const std::vector<Vector>& columns) {
  const std::size_t c = columns.size();
  const std::size_t r = c == 0 ? 0 : columns.front().size();
  Matrix out(r, c);
  for (std::size_t j = 0; j < c; ++j) {
    if (columns[j].size() != r) fail(ErrorCode::invalid_input, "Matrix: ragged columns");
    for (std::size_t i = 0; i < r; ++i) out(i, j) = columns[j][i];
  }
  return out;
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

Vector Matrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, c);
  return out;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_, std::vector<double>(cols_));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out[i][j] = (*this)(i, j);
  return out;
}

bool Matrix::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double Matrix::max_abs() const {
  double best = 0.0;
  for (double x : data_) best = std::max(best, std::abs(x));
  return best;
}

double Matrix::inf_norm() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) acc += std::abs((*this)(i, j));
    best = std::max(best, acc);
  }
  return best;
}

Matrix& Matrix::operator*=(double scale) {
  for (double& x : data_) x *= scale;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    std::ostringstream msg;
    msg << "matrix product: inner dimensions " << a.cols() << " and " << b.rows();
    fail(ErrorCode::invalid_input, msg.str());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix operator*(double scale, Matrix a) {
  a *= scale;
  return a;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix sum");
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += b(i, j);
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix difference");
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) -= b(i, j);
  return out;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) fail(ErrorCode::invalid_input, "matrix-vector product: size mismatch");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    out[i] = acc;
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) best = std::max(best, std::abs(a(i, j) - b(i, j)));
  return best;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------
// Singular values and the singular value function

Vector singular_values(const Matrix& a) {
  require_finite(a, "singular_values");
  const std::size_t len = std::min(a.rows(), a.cols());
  if (len == 0) return {};
  JacobiResult res = jacobi(a.rows() >= a.cols() ? a : a.transpose(), false);
  Vector sigma = std::move(res.sigma);
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  const double floor = static_cast<double>(std::max(a.rows(), a.cols())) * kEps * sigma.front();
  for (double& x : sigma)
    if (x <= floor) x = 0.0;
  return sigma;
}

double spectral_norm(const Matrix& a) {
  const Vector sv = singular_values(a);
  return sv.empty() ? 0.0 : sv.front();
}

double determinant(const Matrix& a) {
  if (!a.square()) fail(ErrorCode::invalid_input, "determinant: matrix is not square");
  if (a.rows() == 0) return 1.0;
  Matrix lu = a;
  std::vector<std::size_t> perm;
  const int sign = lu_in_place(lu, perm);
  if (sign == 0) return 0.0;
  double det = sign;
  for (std::size_t i = 0; i < lu.rows(); ++i) det *= lu(i, i);
  return det;
}

double log_svf_from_values(std::span<const double> values, double s) {
  if (!(s >= 0.0)) fail(ErrorCode::invalid_input, "svf: s must be non-negative");
  const double whole = std::floor(s);
  const auto j = static_cast<std::size_t>(whole);
  const double frac = s - whole;
  if (j > values.size() || (j == values.size() && frac > 0.0))
    fail(ErrorCode::invalid_input, "svf: s exceeds the number of singular values");
  double acc = 0.0;
  for (std::size_t i = 0; i < j; ++i) {
    if (values[i] == 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(values[i]);
  }
  if (frac > 0.0) {
    if (values[j] == 0.0) return -std::numeric_limits<double>::infinity();
    acc += frac * std::log(values[j]);
  }
  return acc;
}

double svf(const Matrix& a, double s) {
  require_finite(a, "svf");
  if (!a.square()) fail(ErrorCode::invalid_input, "svf: matrix is not square");
  if (!(s >= 0.0)) fail(ErrorCode::invalid_input, "svf: s must be non-negative");
  if (s == 0.0) return 1.0;
  const auto d = static_cast<double>(a.rows());
  if (s >= d) return std::pow(std::abs(determinant(a)), s / d);
  const Vector sv = singular_values(a);
  return std::exp(log_svf_from_values(sv, s));
}

SvfPair svf_dual_check(const Matrix& a, double s) { return {svf(a, s), svf(a.transpose(), s)}; }

std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > n) return out;
  std::vector<std::size_t> current(k);
  std::iota(current.begin(), current.end(), std::size_t{0});
  for (;;) {
    out.push_back(current);
    std::size_t i = k;
    while (i > 0 && current[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++current[i - 1];
    for (std::size_t j = i; j < k; ++j) current[j] = current[j - 1] + 1;
  }
  return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t out = 1;
  for (std::uint64_t i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

Matrix compound_matrix(const Matrix& a, std::size_t k) {
  require_finite(a, "compound_matrix");
  if (k < 1 || k > std::min(a.rows(), a.cols()))
    fail(ErrorCode::invalid_input, "compound_matrix: k out of range");
  const auto row_sets = combinations(a.rows(), k);
  const auto col_sets = combinations(a.cols(), k);
  Matrix out(row_sets.size(), col_sets.size());
  Matrix sub(k, k);
  for (std::size_t r = 0; r < row_sets.size(); ++r) {
    for (std::size_t c = 0; c < col_sets.size(); ++c) {
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) sub(i, j) = a(row_sets[r][i], col_sets[c][j]);
      out(r, c) = determinant(sub);
    }
  }
  return out;
}

Matrix exterior_power(const Matrix& a, std::size_t k) {
  if (!a.square()) fail(ErrorCode::invalid_input, "exterior_power: matrix is not square");
  if (a.rows() > kMaxDimension)
    fail(ErrorCode::invalid_input, "exterior_power: dimension exceeds the supported limit of 16");
  if (k < 1 || k > a.rows()) fail(ErrorCode::invalid_input, "exterior_power: k must satisfy 1 <= k <= d");
  return compound_matrix(a, k);
}

double svf_via_wedge(const Matrix& a, double s) {
  if (!a.square()) fail(ErrorCode::invalid_input, "svf_via_wedge: matrix is not square");
  const auto d = a.rows();
  if (!(s >= 0.0) || s > static_cast<double>(d))
    fail(ErrorCode::invalid_input, "svf_via_wedge: s must lie in [0, d]");
  const auto k = static_cast<std::size_t>(std::floor(s));
  const double frac = s - static_cast<double>(k);
  const double lower = k == 0 ? 1.0 : spectral_norm(exterior_power(a, k));
  double out = std::pow(lower, 1.0 - frac);
  if (frac > 0.0) out *= std::pow(spectral_norm(exterior_power(a, k + 1)), frac);
  return out;
}

// ---------------------------------------------------------------------------
// Factorizations

QrResult qr_decompose(const Matrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  if (m < n) fail(ErrorCode::invalid_input, "qr_decompose: requires rows >= cols");
  Matrix r = a;
  std::vector<Vector> reflectors;
  reflectors.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vector v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
    const double alpha = norm(v);
    Vector h(m - k, 0.0);
    if (alpha > 0.0) {
      h = v;
      h[0] += v[0] >= 0.0 ? alpha : -alpha;
      const double hn = norm(h);
      for (double& x : h) x /= hn;
      for (std::size_t j = k; j < n; ++j) {
        double proj = 0.0;
        for (std::size_t i = k; i < m; ++i) proj += h[i - k] * r(i, j);
        for (std::size_t i = k; i < m; ++i) r(i, j) -= 2.0 * proj * h[i - k];
      }
    }
    reflectors.push_back(std::move(h));
  }
  Matrix q(m, n);
  for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
  for (std::size_t k = n; k-- > 0;) {
    const Vector& h = reflectors[k];
    for (std::size_t j = 0; j < n; ++j) {
      double proj = 0.0;
      for (std::size_t i = k; i < m; ++i) proj += h[i - k] * q(i, j);
      for (std::size_t i = k; i < m; ++i) q(i, j) -= 2.0 * proj * h[i - k];
    }
  }
  Matrix rr(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) rr(i, j) = r(i, j);
  return {std::move(q), std::move(rr)};
}

Matrix solve(const Matrix& a, const Matrix& b) {
  if (!a.square() || a.rows() != b.rows()) fail(ErrorCode::invalid_input, "solve: shape mismatch");
  Matrix lu = a;
  std::vector<std::size_t> perm;
  if (lu_in_place(lu, perm) == 0) fail(ErrorCode::invalid_input, "solve: singular matrix");
  const std::size_t n = a.rows();
  Matrix x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = b(perm[i], c);
      for (std::size_t j = 0; j < i; ++j) acc -= lu(i, j) * y[j];
      y[i] = acc;
    }
    for (std::size_t i = n; i-- > 0;) {
      double acc = y[i];
      for (std::size_t j = i + 1; j < n; ++j) acc -= lu(i, j) * x(j, c);
      x(i, c) = acc / lu(i, i);
    }
  }
  return x;
}

Matrix orthonormal_span(const Matrix& columns, double threshold) {
  std::vector<Vector> basis;
  for (std::size_t c = 0; c < columns.cols(); ++c) {
    Vector v = columns.column(c);
    const double original = norm(v);
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : basis) {
        const double proj = dot(q, v);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * q[i];
      }
    }
    const double remaining = norm(v);
    if (remaining <= threshold * original) continue;
    for (double& x : v) x /= remaining;
    basis.push_back(std::move(v));
  }
  if (basis.empty()) return Matrix(columns.rows(), 0);
  return Matrix::from_columns(basis);
}

Matrix null_space(const Matrix& a, double rel_threshold) {
  const std::size_t n = a.cols();
  Matrix padded = a;
  if (a.rows() < n) {
    padded = Matrix(n, n);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < n; ++j) padded(i, j) = a(i, j);
  }
  JacobiResult res = jacobi(padded, true);
  const double top = *std::max_element(res.sigma.begin(), res.sigma.end());
  std::vector<Vector> kernel;
  for (std::size_t j = 0; j < n; ++j)
    if (res.sigma[j] <= rel_threshold * top || top == 0.0) kernel.push_back(res.v.column(j));
  if (kernel.empty()) return Matrix(n, 0);
  return orthonormal_span(Matrix::from_columns(kernel));
}

// ---------------------------------------------------------------------------
// Subspaces

Subspace::Subspace(const Matrix& spanning_columns) {
  require_finite(spanning_columns, "Subspace");
  const std::size_t d = spanning_columns.rows();
  const std::size_t k = spanning_columns.cols();
  if (d == 0 || d > kMaxDimension)
    fail(ErrorCode::invalid_input, "Subspace: ambient dimension must be in 1..16");
  if (k < 1 || k > d) fail(ErrorCode::invalid_input, "Subspace: dimension must satisfy 1 <= k <= d");
  basis_ = orthonormal_span(spanning_columns);
  if (basis_.cols() != k)
    fail(ErrorCode::degenerate_subspace, "Subspace: spanning vectors are linearly dependent");
}

Subspace Subspace::full(std::size_t d) { return Subspace(Matrix::identity(d)); }

Subspace Subspace::span(const std::vector<Vector>& vectors) {
  return Subspace(Matrix::from_columns(vectors));
}

Subspace Subspace::coordinate(std::size_t d, std::initializer_list<std::size_t> axes) {
  Matrix cols(d, axes.size());
  std::size_t c = 0;
  for (std::size_t axis : axes) {
    if (axis >= d) fail(ErrorCode::invalid_input, "Subspace::coordinate: axis out of range");
    cols(axis, c++) = 1.0;
  }
  return Subspace(cols);
}

Matrix projector(const Subspace& w) { return w.basis() * w.basis().transpose(); }

double subspace_distance(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim())
    fail(ErrorCode::invalid_input, "subspace_distance: ambient dimensions differ");
  if (v.dim() != w.dim()) return 1.0;
  return spectral_norm(projector(v) - projector(w));
}

Subspace image_subspace(const Matrix& a, const Subspace& w) {
  if (!a.square() || a.rows() != w.ambient_dim())
    fail(ErrorCode::invalid_input, "image_subspace: matrix does not act on the ambient space");
  const Matrix image = a * w.basis();
  Matrix basis = orthonormal_span(image);
  if (basis.cols() != w.dim())
    fail(ErrorCode::degenerate_subspace, "image_subspace: the matrix collapses the subspace");
  return Subspace(basis);
}

// ---------------------------------------------------------------------------
// Row reduction and pivots

RrefResult rref(const Matrix& m) {
  require_finite(m, "rref");
  Matrix r = m;
  const double tol = 1e-10 * m.inf_norm();
  PivotVector pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < r.cols() && row < r.rows(); ++col) {
    std::size_t best_row = row;
    double best = std::abs(r(row, col));
    for (std::size_t i = row + 1; i < r.rows(); ++i) {
      if (std::abs(r(i, col)) > best) {
        best = std::abs(r(i, col));
        best_row = i;
      }
    }
    if (!(best > tol)) {
      for (std::size_t i = row; i < r.rows(); ++i) r(i, col) = 0.0;
      continue;
    }
    if (best_row != row)
      for (std::size_t j = 0; j < r.cols(); ++j) std::swap(r(row, j), r(best_row, j));
    const double lead = r(row, col);
    for (std::size_t j = 0; j < r.cols(); ++j) r(row, j) /= lead;
    r(row, col) = 1.0;
    for (std::size_t i = 0; i < r.rows(); ++i) {
      if (i == row) continue;
      const double f = r(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < r.cols(); ++j) r(i, j) -= f * r(row, j);
      r(i, col) = 0.0;
    }
    pivots.positions.push_back(col + 1);
    ++row;
  }
  for (std::size_t i = row; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j) r(i, j) = 0.0;
  return {std::move(r), std::move(pivots)};
}

PivotVector pivot_vector(const Subspace& w, const Matrix& basis) {
  const std::size_t d = w.ambient_dim();
  if (basis.rows() != d || basis.cols() != d)
    fail(ErrorCode::invalid_input, "pivot_vector: basis must be d x d");
  const Vector sv = singular_values(basis);
  if (!(sv.back() > 1e-10 * sv.front()))
    fail(ErrorCode::invalid_input, "pivot_vector: basis vectors are (numerically) dependent");
  const Matrix coords = solve(basis, w.basis());
  return rref(coords.transpose()).pivots;
}

}  // namespace affdim
