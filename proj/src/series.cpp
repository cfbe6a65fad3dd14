#include "freemul/series.hpp"

#include <algorithm>
#include <cmath>

#include "freemul/error.hpp"

namespace freemul {

std::vector<xcplx> extended(const std::vector<cplx>& v) { return {v.begin(), v.end()}; }

std::vector<cplx> rounded(const std::vector<xcplx>& v) {
  std::vector<cplx> out;
  out.reserve(v.size());
  for (const xcplx& x : v) {
    out.emplace_back(static_cast<double>(x.real()), static_cast<double>(x.imag()));
  }
  return out;
}

Series Series::identity(int order) {
  Series s = zero(order);
  if (order >= 1) s[1] = 1.0;
  return s;
}

Series Series::truncated(int n) const {
  std::vector<xcplx> c(c_.begin(), c_.begin() + std::min<std::size_t>(c_.size(), n + 1));
  c.resize(n + 1);
  return Series(std::move(c));
}

Series Series::derivative() const {
  if (order() <= 0) return zero(0);
  std::vector<xcplx> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<long double>(k) * c_[k];
  return Series(std::move(d));
}

xcplx Series::evaluate(xcplx z) const {
  xcplx acc{0.0L, 0.0L};
  for (std::size_t k = c_.size(); k-- > 0;) acc = acc * z + c_[k];
  return acc;
}

Series operator+(const Series& a, const Series& b) {
  const int n = std::min(a.order(), b.order());
  Series r = Series::zero(n);
  for (int k = 0; k <= n; ++k) r[k] = a[k] + b[k];
  return r;
}

Series operator-(const Series& a, const Series& b) {
  const int n = std::min(a.order(), b.order());
  Series r = Series::zero(n);
  for (int k = 0; k <= n; ++k) r[k] = a[k] - b[k];
  return r;
}

Series operator*(const Series& a, const Series& b) {
  const int n = std::min(a.order(), b.order());
  Series r = Series::zero(n);
  for (int i = 0; i <= n; ++i) {
    if (a[i] == xcplx{0.0L, 0.0L}) continue;
    for (int j = 0; i + j <= n; ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

Series operator*(xcplx k, const Series& a) {
  Series r = a;
  for (int i = 0; i <= r.order(); ++i) r[i] *= k;
  return r;
}

Series reciprocal(const Series& s) {
  if (s[0] == xcplx{0.0L, 0.0L}) throw Error(ErrorCode::ZeroConstantTerm, "reciprocal of a non-unit");
  const int n = s.order();
  Series r = Series::zero(n);
  r[0] = 1.0L / s[0];
  for (int k = 1; k <= n; ++k) {
    xcplx acc{0.0L, 0.0L};
    for (int j = 1; j <= k; ++j) acc += s[j] * r[k - j];
    r[k] = -acc / s[0];
  }
  return r;
}

Series operator/(const Series& a, const Series& b) { return a * reciprocal(b); }

Series compose(const Series& a, const Series& b) {
  if (b[0] != xcplx{0.0L, 0.0L}) {
    throw Error(ErrorCode::InvalidArgument, "inner series of a composition must vanish at 0");
  }
  const int n = std::min(a.order(), b.order());
  Series acc = Series::zero(n);
  for (int k = a.order(); k >= 0; --k) {
    acc = acc * b;
    acc[0] += a[k];
  }
  return acc.truncated(n);
}

Series log_series(const Series& s) {
  if (s[0] == xcplx{0.0L, 0.0L}) throw Error(ErrorCode::ZeroConstantTerm, "log of a non-unit");
  const int n = s.order();
  const Series q = s.derivative() * reciprocal(s).truncated(std::max(n - 1, 0));
  Series r = Series::zero(n);
  r[0] = std::log(s[0]);
  for (int k = 1; k <= n; ++k) r[k] = q[k - 1] / static_cast<long double>(k);
  return r;
}

Series exp_series(const Series& s) {
  const int n = s.order();
  Series r = Series::zero(n);
  r[0] = std::exp(s[0]);
  // r' = s' r  =>  k r_k = sum_{j=1..k} j s_j r_{k-j}
  for (int k = 1; k <= n; ++k) {
    xcplx acc{0.0L, 0.0L};
    for (int j = 1; j <= k; ++j) acc += static_cast<long double>(j) * s[j] * r[k - j];
    r[k] = acc / static_cast<long double>(k);
  }
  return r;
}

Series series_from_moments(const std::vector<xcplx>& moments) {
  std::vector<xcplx> c(moments.size() + 1);
  std::copy(moments.begin(), moments.end(), c.begin() + 1);
  return Series(std::move(c));
}

Series psi_to_eta(const Series& psi) {
  Series one_plus = psi;
  one_plus[0] += 1.0L;
  return psi / one_plus;
}

Series eta_to_psi(const Series& eta) {
  Series one_minus = xcplx{-1.0L, 0.0L} * eta;
  one_minus[0] += 1.0L;
  return eta / one_minus;
}

Series revert(const Series& s) {
  if (s.order() < 1 || s[1] == xcplx{0.0L, 0.0L}) {
    throw Error(ErrorCode::NotInvertible, "series has no linear term");
  }
  if (s[0] != xcplx{0.0L, 0.0L}) {
    throw Error(ErrorCode::NotInvertible, "series must vanish at 0");
  }
  const int n = s.order();
  const Series ds = s.derivative();
  Series r = Series::zero(n);
  r[1] = 1.0L / s[1];
  // Each Newton step doubles the number of correct coefficients.
  for (int correct = 1; correct < n;) {
    const int m = std::min(2 * correct + 1, n);
    const Series rm = r.truncated(m);
    Series residual = compose(s.truncated(m), rm);
    residual[1] -= 1.0L;
    const Series slope = compose(ds.truncated(m), rm);
    r = (rm - residual / slope).truncated(n);
    correct = m;
  }
  return r;
}

Series sigma_series(const Series& eta) {
  const Series inv = revert(eta);
  std::vector<xcplx> c(inv.coeffs().begin() + 1, inv.coeffs().end());
  return Series(std::move(c));
}

Series power_t(const Series& s, long double t) {
  if (s.empty() || s[0] == xcplx{0.0L, 0.0L}) {
    throw Error(ErrorCode::ZeroConstantTerm, "power of a series with zero constant term");
  }
  return exp_series(xcplx{t, 0.0L} * log_series(s));
}

std::vector<xcplx> semigroup_moments(const std::vector<xcplx>& moments, long double t) {
  if (moments.empty()) return {};
  if (t < 1.0L) throw Error(ErrorCode::InvalidArgument, "semigroup parameter must be >= 1");
  if (moments.front() == xcplx{0.0L, 0.0L}) {
    throw Error(ErrorCode::NotInvertible, "first moment vanishes");
  }
  if (t == 1.0L) return moments;
  const int n = static_cast<int>(moments.size());
  const Series eta = psi_to_eta(series_from_moments(moments));
  const Series sigma_t = power_t(sigma_series(eta), t);
  std::vector<xcplx> inv(static_cast<std::size_t>(n) + 1);
  std::copy(sigma_t.coeffs().begin(), sigma_t.coeffs().end(), inv.begin() + 1);
  const Series psi_t = eta_to_psi(revert(Series(std::move(inv))));
  return {psi_t.coeffs().begin() + 1, psi_t.coeffs().end()};
}

std::vector<cplx> semigroup_moments(const std::vector<cplx>& moments, double t) {
  return rounded(semigroup_moments(extended(moments), t));
}

std::vector<cplx> semigroup_moments(const Measure& m, double t, int order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "order must be positive");
  return semigroup_moments(moments(m, order), t);
}

}  // namespace freemul
