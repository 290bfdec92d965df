#include "affdim/words.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace affdim {

Word Word::parse(std::string_view text) {
  std::vector<std::uint32_t> symbols;
  if (text.find(',') != std::string_view::npos) {
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t end = std::min(text.find(',', start), text.size());
      std::string_view token = text.substr(start, end - start);
      while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
      while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
      std::uint32_t value = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size() || value == 0)
        fail(ErrorCode::invalid_input, "Word::parse: bad letter '" + std::string(token) + "'");
      symbols.push_back(value);
      start = end + 1;
    }
    return Word(std::move(symbols));
  }
  for (char c : text) {
    if (c < '1' || c > '9') fail(ErrorCode::invalid_input, std::string("Word::parse: bad letter '") + c + "'");
    symbols.push_back(static_cast<std::uint32_t>(c - '0'));
  }
  return Word(std::move(symbols));
}

Word Word::prefix(std::size_t n) const {
  if (n > size()) fail(ErrorCode::invalid_input, "Word::prefix: length exceeds the word");
  return Word(std::vector<std::uint32_t>(symbols_.begin(), symbols_.begin() + static_cast<std::ptrdiff_t>(n)));
}

Word Word::concat(const Word& other) const {
  std::vector<std::uint32_t> out = symbols_;
  out.insert(out.end(), other.symbols_.begin(), other.symbols_.end());
  return Word(std::move(out));
}

std::string Word::to_string() const {
  const bool short_letters =
      std::all_of(symbols_.begin(), symbols_.end(), [](std::uint32_t s) { return s < 10; });
  std::ostringstream out;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!short_letters && i > 0) out << ',';
    out << symbols_[i];
  }
  return out.str();
}

MatrixTuple::MatrixTuple(std::vector<Matrix> matrices) : matrices_(std::move(matrices)) {
  if (matrices_.size() < 2) fail(ErrorCode::invalid_input, "MatrixTuple: need at least two matrices");
  d_ = matrices_.front().rows();
  if (d_ == 0 || d_ > kMaxDimension)
    fail(ErrorCode::invalid_input, "MatrixTuple: dimension must be in 1..16");
  for (std::size_t i = 0; i < matrices_.size(); ++i) {
    const Matrix& a = matrices_[i];
    const std::string where = "MatrixTuple: matrix " + std::to_string(i + 1);
    if (a.rows() != d_ || a.cols() != d_) fail(ErrorCode::invalid_input, where + " is not " + std::to_string(d_) + "x" + std::to_string(d_));
    if (!a.is_finite()) fail(ErrorCode::invalid_input, where + " has a non-finite entry");
    const Vector sv = singular_values(a);
    if (!(sv.front() < 1.0)) fail(ErrorCode::invalid_input, where + " is not contracting (norm >= 1)");
    if (!(sv.back() > 0.0)) fail(ErrorCode::invalid_input, where + " is singular");
    norms_.push_back(sv.front());
    min_sv_.push_back(sv.back());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < norms_.size(); ++i)
    for (std::size_t j = i + 1; j < norms_.size(); ++j) worst = std::max(worst, norms_[i] + norms_[j]);
  transversal_ = worst < 1.0;
}

std::vector<Matrix> MatrixTuple::transposes() const {
  std::vector<Matrix> out;
  out.reserve(matrices_.size());
  for (const Matrix& a : matrices_) out.push_back(a.transpose());
  return out;
}

double MatrixTuple::alpha_plus() const { return *std::max_element(norms_.begin(), norms_.end()); }

double MatrixTuple::alpha_minus() const { return *std::min_element(min_sv_.begin(), min_sv_.end()); }

Matrix word_product(const MatrixTuple& t, const Word& word) {
  Matrix out = Matrix::identity(t.d());
  for (std::uint32_t letter : word.symbols()) {
    if (letter < 1 || letter > t.m())
      fail(ErrorCode::invalid_input, "word_product: letter " + std::to_string(letter) + " outside 1.." + std::to_string(t.m()));
    out = out * t[letter];
  }
  return out;
}

void multiply_into(const Matrix& a, const Matrix& b, Matrix& out) {
  if (out.rows() != a.rows() || out.cols() != b.cols()) out = Matrix(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
}

std::uint64_t word_count(std::size_t m, std::size_t n) {
  std::uint64_t out = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (out > UINT64_MAX / m) return UINT64_MAX;
    out *= m;
  }
  return out;
}

}  // namespace affdim
