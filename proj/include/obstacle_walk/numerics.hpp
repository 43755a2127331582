#pragma once

#include <cmath>
#include <span>

namespace obstacle_walk {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> v) {
  CompensatedSum s;
  for (const double x : v) s.add(x);
  return s.value();
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (const double x : v) m = std::fmax(m, std::fabs(x));
  return m;
}

}  // namespace obstacle_walk
