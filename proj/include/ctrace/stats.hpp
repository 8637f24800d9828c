#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace ctrace {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0;
  double high = 0;

  bool contains(double x) const { return low <= x && x <= high; }
  double width() const { return high - low; }
};

/// Streaming mean and co-moment matrix of K jointly observed variables
/// (Welford update, Chan et al. merge). Merging in a fixed order gives
/// bit-identical results independent of how samples were partitioned in time.
template <std::size_t K>
class Moments {
 public:
  using Sample = std::array<double, K>;

  void add(const Sample& x) {
    ++count_;
    Sample dx{};
    for (std::size_t i = 0; i < K; ++i) {
      dx[i] = x[i] - mean_[i];
      mean_[i] += dx[i] / static_cast<double>(count_);
    }
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) co_[i][j] += dx[i] * (x[j] - mean_[j]);
  }

  void merge(const Moments& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    Sample d{};
    for (std::size_t i = 0; i < K; ++i) d[i] = other.mean_[i] - mean_[i];
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) co_[i][j] += other.co_[i][j] + d[i] * d[j] * na * nb / n;
    for (std::size_t i = 0; i < K; ++i) mean_[i] += d[i] * nb / n;
    count_ += other.count_;
  }

  std::uint64_t count() const { return count_; }
  double mean(std::size_t i) const { return mean_[i]; }
  double covariance(std::size_t i, std::size_t j) const {
    return count_ > 1 ? co_[i][j] / static_cast<double>(count_ - 1) : 0.0;
  }
  double variance(std::size_t i) const { return covariance(i, i); }
  /// Standard error of mean(i).
  double se(std::size_t i) const {
    return count_ > 1 ? std::sqrt(variance(i) / static_cast<double>(count_)) : 0.0;
  }
  /// Covariance of the two sample means.
  double mean_covariance(std::size_t i, std::size_t j) const {
    return count_ > 1 ? covariance(i, j) / static_cast<double>(count_) : 0.0;
  }

 private:
  std::uint64_t count_ = 0;
  Sample mean_{};
  std::array<Sample, K> co_{};
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ95);

}  // namespace ctrace
