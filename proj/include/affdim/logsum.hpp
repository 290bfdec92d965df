#pragma once

#include <cmath>
#include <limits>

namespace affdim {

/// Running log-sum-exp accumulator. Terms are added as logarithms and never
/// exponentiated individually, so sums of values far below DBL_MIN stay exact
/// in relative terms.
class LogSum {
 public:
  void add(double log_term) {
    if (log_term == -kInf) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }

  void merge(const LogSum& other) {
    if (other.max_ == -kInf) return;
    if (max_ == -kInf) {
      *this = other;
      return;
    }
    if (other.max_ <= max_) {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
      max_ = other.max_;
    }
  }

  /// log of the accumulated sum; -inf when nothing (or only zeros) was added.
  [[nodiscard]] double value() const {
    return max_ == -kInf ? -kInf : max_ + std::log(sum_);
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  double max_ = -kInf;
  double sum_ = 0.0;
};

}  // namespace affdim
