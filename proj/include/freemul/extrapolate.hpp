#pragma once

#include <complex>
#include <vector>

namespace freemul {

/// Incremental Richardson table for samples f(h_k) with h_k = h_0 / 2^k and an
/// error expansion in powers of h^p, where ratio = 2^p is the factor by which
/// the leading error term shrinks per sample. The best estimate is the tableau
/// entry with the smallest local error, as in Ridders' scheme.
class Richardson {
 public:
  explicit Richardson(int max_columns = 8, double ratio = 2.0)
      : max_columns_(max_columns), ratio_(ratio) {}

  void push(std::complex<double> sample);

  /// Entry with the smallest local error over the whole tableau.
  std::complex<double> estimate() const noexcept { return best_; }
  double error() const noexcept { return error_; }
  /// Smallest-error entry of the newest row only; used for sequential stopping.
  std::complex<double> latest_estimate() const noexcept { return latest_best_; }
  double latest_error() const noexcept { return latest_error_; }
  /// Change of the diagonal estimate caused by the latest sample.
  double last_change() const noexcept { return last_change_; }
  int size() const noexcept { return static_cast<int>(rows_.size()); }
  std::complex<double> last_sample() const { return rows_.back().front(); }

 private:
  int max_columns_;
  double ratio_;
  std::vector<std::vector<std::complex<double>>> rows_;
  std::complex<double> best_{};
  std::complex<double> diagonal_{};
  std::complex<double> latest_best_{};
  double error_ = 0.0;
  double latest_error_ = 0.0;
  double last_change_ = 0.0;
};

/// Branch of log(value) nearest to `reference`.
std::complex<double> nearest_log(std::complex<double> value, std::complex<double> reference);

/// Adds the multiple of 2pi to `angle` that brings it nearest to `previous`.
double unwrap_against(double angle, double previous);

}  // namespace freemul
