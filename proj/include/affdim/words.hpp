#pragma once

// Words over the alphabet {1, ..., m} and depth-first enumeration of the
// matrix products they index.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "affdim/error.hpp"
#include "affdim/linalg.hpp"
#include "affdim/parallel.hpp"

namespace affdim {

/// Default cap on the number of words of a single length that may be visited.
inline constexpr std::uint64_t kDefaultVisitBudget = 100'000'000;

/// A finite word; symbols are 1-based letters. The empty word is allowed.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<std::uint32_t> symbols) : symbols_(std::move(symbols)) {}

  /// Parses "132" (single-digit letters) or "1,3,12" (comma separated).
  static Word parse(std::string_view text);

  [[nodiscard]] std::size_t size() const { return symbols_.size(); }
  [[nodiscard]] bool empty() const { return symbols_.empty(); }
  std::uint32_t operator[](std::size_t i) const { return symbols_[i]; }
  [[nodiscard]] const std::vector<std::uint32_t>& symbols() const { return symbols_; }

  void push_back(std::uint32_t letter) { symbols_.push_back(letter); }
  void pop_back() { symbols_.pop_back(); }
  void resize(std::size_t n) { symbols_.resize(n); }
  std::uint32_t& operator[](std::size_t i) { return symbols_[i]; }

  [[nodiscard]] Word prefix(std::size_t n) const;
  [[nodiscard]] Word concat(const Word& other) const;

  /// Digits when every letter is < 10, comma separated otherwise.
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word&, const Word&) = default;

 private:
  std::vector<std::uint32_t> symbols_;
};

/// The tuple (T_1, ..., T_m) of invertible contracting d x d matrices.
class MatrixTuple {
 public:
  /// Validates m >= 2, equal square shapes with d <= 16, finite entries,
  /// ||T_i|| < 1 and alpha_d(T_i) > 0.
  explicit MatrixTuple(std::vector<Matrix> matrices);

  [[nodiscard]] std::size_t m() const { return matrices_.size(); }
  [[nodiscard]] std::size_t d() const { return d_; }

  /// 1-based letter access.
  [[nodiscard]] const Matrix& operator[](std::uint32_t letter) const { return matrices_[letter - 1]; }
  [[nodiscard]] const std::vector<Matrix>& matrices() const { return matrices_; }
  [[nodiscard]] std::vector<Matrix> transposes() const;

  [[nodiscard]] double norm(std::uint32_t letter) const { return norms_[letter - 1]; }
  [[nodiscard]] double min_singular(std::uint32_t letter) const { return min_sv_[letter - 1]; }
  /// alpha_+ = max_i ||T_i||.
  [[nodiscard]] double alpha_plus() const;
  /// alpha_- = min_i alpha_d(T_i).
  [[nodiscard]] double alpha_minus() const;
  /// max_{i != j} (||T_i|| + ||T_j||) < 1.
  [[nodiscard]] bool transversal() const { return transversal_; }

 private:
  std::vector<Matrix> matrices_;
  std::vector<double> norms_;
  std::vector<double> min_sv_;
  std::size_t d_ = 0;
  bool transversal_ = false;
};

/// T_{i_1} ... T_{i_n}; identity for the empty word.
Matrix word_product(const MatrixTuple& t, const Word& word);

/// out = a * b without allocating when `out` already has the right shape.
void multiply_into(const Matrix& a, const Matrix& b, Matrix& out);

std::uint64_t word_count(std::size_t m, std::size_t n);

struct FoldOptions {
  std::uint64_t budget = kDefaultVisitBudget;
  int threads = 1;
};

/// Visits every word I of length n in lexicographic order together with
/// seed * T_I, maintaining the product incrementally along a depth-first
/// stack. `seed` may be rectangular (r x d); pass the identity for plain T_I.
///
/// Each first-letter branch accumulates into its own copy of `init`; branches
/// may run on different workers and are merged in letter order with `merge`,
/// so results do not depend on the thread count.
template <class Acc, class Visit, class Merge>
Acc fold_words(const MatrixTuple& t, std::size_t n, const Matrix& seed, const Acc& init,
               Visit&& visit, Merge&& merge, const FoldOptions& options = {}) {
  if (n < 1) fail(ErrorCode::invalid_input, "fold_words: n must be at least 1");
  if (seed.cols() != t.d()) fail(ErrorCode::invalid_input, "fold_words: seed has the wrong width");
  const std::size_t m = t.m();
  const std::uint64_t visits = word_count(m, n);
  if (visits > options.budget) {
    fail(ErrorCode::resource_limit, "fold_words: " + std::to_string(m) + "^" + std::to_string(n) +
                                        " words exceed the visit budget of " +
                                        std::to_string(options.budget));
  }
  std::vector<Acc> partial(m, init);
  parallel_for(m, options.threads, [&](std::size_t branch) {
    Acc& acc = partial[branch];
    Word word(std::vector<std::uint32_t>(n, 1));
    word[0] = static_cast<std::uint32_t>(branch + 1);
    std::vector<Matrix> stack(n, Matrix(seed.rows(), t.d()));
    multiply_into(seed, t[word[0]], stack[0]);
    for (std::size_t level = 1; level < n; ++level) multiply_into(stack[level - 1], t[1], stack[level]);
    for (;;) {
      visit(acc, word, stack[n - 1]);
      std::size_t level = n - 1;
      while (level > 0 && word[level] == m) --level;
      if (level == 0) break;
      ++word[level];
      multiply_into(stack[level - 1], t[word[level]], stack[level]);
      for (std::size_t deeper = level + 1; deeper < n; ++deeper) {
        word[deeper] = 1;
        multiply_into(stack[deeper - 1], t[1], stack[deeper]);
      }
    }
  });
  Acc out = std::move(partial.front());
  for (std::size_t branch = 1; branch < m; ++branch) merge(out, partial[branch]);
  return out;
}

}  // namespace affdim
