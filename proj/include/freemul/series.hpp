#pragma once

#include <complex>
#include <vector>

#include "freemul/measure.hpp"

namespace freemul {

/// Coefficient type of the series layer (extended precision).
using xcplx = std::complex<long double>;

std::vector<xcplx> extended(const std::vector<cplx>& v);
std::vector<cplx> rounded(const std::vector<xcplx>& v);

/// Truncated power series c_0 + c_1 z + ... + c_N z^N. Binary operations
/// truncate to the smaller order.
class Series {
 public:
  Series() = default;
  explicit Series(std::vector<xcplx> coeffs) : c_(std::move(coeffs)) {}
  static Series zero(int order) { return Series(std::vector<xcplx>(order + 1)); }
  static Series identity(int order);

  int order() const noexcept { return static_cast<int>(c_.size()) - 1; }
  bool empty() const noexcept { return c_.empty(); }
  const std::vector<xcplx>& coeffs() const noexcept { return c_; }
  xcplx operator[](int k) const { return k <= order() ? c_[k] : xcplx{0.0L, 0.0L}; }
  xcplx& operator[](int k) { return c_[k]; }

  Series truncated(int order) const;
  Series derivative() const;
  xcplx evaluate(xcplx z) const;

  friend Series operator+(const Series& a, const Series& b);
  friend Series operator-(const Series& a, const Series& b);
  friend Series operator*(const Series& a, const Series& b);
  friend Series operator*(xcplx k, const Series& a);

 private:
  std::vector<xcplx> c_;
};

Series reciprocal(const Series& s);
Series operator/(const Series& a, const Series& b);

/// a(b(z)) with b_0 = 0.
Series compose(const Series& a, const Series& b);

Series log_series(const Series& s);  // principal log of c_0
Series exp_series(const Series& s);

/// c_0 = 0, c_k = m_k.
Series series_from_moments(const std::vector<xcplx>& moments);

Series psi_to_eta(const Series& psi);
Series eta_to_psi(const Series& eta);

/// Compositional inverse by Newton iteration on composition. Requires c_0 = 0
/// and c_1 != 0 (NotInvertible otherwise).
Series revert(const Series& s);

/// eta^{-1}(z)/z; order drops by one. Constant term is 1/c_1.
Series sigma_series(const Series& eta);

/// exp(t log s) with the principal logarithm of c_0, so arg c_0 in (-pi, pi]
/// is multiplied by t.
Series power_t(const Series& s, long double t);

/// Moments of mu_t through the Sigma-transform: moments -> psi -> eta -> Sigma
/// -> Sigma^t -> z Sigma^t -> reversion -> eta_t -> psi_t. Identity at t = 1.
std::vector<xcplx> semigroup_moments(const std::vector<xcplx>& moments, long double t);
/// Same, rounded to double at the end.
std::vector<cplx> semigroup_moments(const std::vector<cplx>& moments, double t);
std::vector<cplx> semigroup_moments(const Measure& m, double t, int order);

inline constexpr int kDefaultSeriesOrder = 16;

}  // namespace freemul
