#include "freemul/extrapolate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "freemul/measure.hpp"

namespace freemul {

void Richardson::push(std::complex<double> sample) {
  std::vector<std::complex<double>> row{sample};
  if (rows_.empty()) {
    best_ = sample;
    diagonal_ = sample;
    error_ = std::numeric_limits<double>::infinity();
    latest_best_ = sample;
    latest_error_ = std::numeric_limits<double>::infinity();
    last_change_ = std::numeric_limits<double>::infinity();
    rows_.push_back(std::move(row));
    return;
  }
  const auto& prev = rows_.back();
  const int columns = std::min<int>(static_cast<int>(prev.size()) + 1, max_columns_);
  double factor = 1.0;
  latest_error_ = std::numeric_limits<double>::infinity();
  latest_best_ = sample;
  for (int j = 1; j < columns; ++j) {
    factor *= ratio_;
    const auto next = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0);
    const double err = std::max(std::abs(next - row[j - 1]), std::abs(next - prev[j - 1]));
    row.push_back(next);
    if (err <= latest_error_) {
      latest_error_ = err;
      latest_best_ = next;
    }
    if (err <= error_) {
      error_ = err;
      best_ = next;
    }
  }
  last_change_ = std::abs(row.back() - diagonal_);
  diagonal_ = row.back();
  rows_.push_back(std::move(row));
}

std::complex<double> nearest_log(std::complex<double> value, std::complex<double> reference) {
  auto l = std::log(value);
  const double turns = std::round((reference.imag() - l.imag()) / kTwoPi);
  return {l.real(), l.imag() + turns * kTwoPi};
}

double unwrap_against(double angle, double previous) {
  return angle + std::round((previous - angle) / kTwoPi) * kTwoPi;
}

}  // namespace freemul
