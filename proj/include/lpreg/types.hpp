#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

namespace lpreg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

// Neumaier-compensated running sum. Terms must be added in a fixed order for
// results to be reproducible.
class CompensatedSum {
 public:
  void add(double term) noexcept {
    const double t = sum_ + term;
    if (std::abs(sum_) >= std::abs(term)) {
      carry_ += (sum_ - t) + term;
    } else {
      carry_ += (term - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double sign(double t) noexcept {
  return (t > 0.0) ? 1.0 : ((t < 0.0) ? -1.0 : 0.0);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

}  // namespace detail
}  // namespace lpreg
