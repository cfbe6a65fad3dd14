#include "freemul/transform.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "freemul/error.hpp"
#include "freemul/extrapolate.hpp"

namespace freemul {

namespace {

constexpr double kPoleTolerance = 1e-14;
constexpr double kNearPole = 1e-8;

constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Distance from w to the real segment [a, b].
double segment_distance(cplx w, double a, double b) {
  double dx = 0.0;
  if (w.real() < a) dx = a - w.real();
  if (w.real() > b) dx = w.real() - b;
  return std::hypot(dx, w.imag());
}

bool far_from_cell(cplx z, double a, double b) {
  if (std::abs(z) * b < 1e-3) return true;
  const cplx w = 1.0 / z;
  return segment_distance(w, a, b) > 2.0 * (b - a);
}

}  // namespace

Domain domain_for(Space space) {
  return space == Space::HalfLine ? Domain::OmegaHalfLine : Domain::Disk;
}

EvalPoint EvalPoint::half_line(cplx z) {
  if (z.imag() == 0.0 && z.real() >= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "point lies on [0, inf)");
  }
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw Error(ErrorCode::InvalidArgument, "non-finite evaluation point");
  }
  return {z, Domain::OmegaHalfLine};
}

EvalPoint EvalPoint::disk(cplx z) {
  if (!(std::abs(z) < 1.0)) throw Error(ErrorCode::InvalidArgument, "point outside the open disk");
  return {z, Domain::Disk};
}

EvalPoint EvalPoint::in(Space space, cplx z) {
  return space == Space::HalfLine ? half_line(z) : disk(z);
}

Transformer::Transformer(const Measure& m) : space_(m.space()) {
  for (const auto& a : m.atoms()) {
    nodes_.push_back(space_ == Space::HalfLine ? cplx{a.location, 0.0}
                                               : std::polar(1.0, a.location));
    weights_.push_back(a.mass);
  }
  if (m.density()) {
    const auto& d = *m.density();
    if (space_ == Space::HalfLine) {
      for (std::size_t i = 0; i + 1 < d.grid.size(); ++i) {
        const double a = d.grid[i];
        const double b = d.grid[i + 1];
        const double fa = d.values[i];
        const double fb = d.values[i + 1];
        if (fa == 0.0 && fb == 0.0) continue;
        const double slope = (fb - fa) / (b - a);
        cells_.push_back({a, b, slope, fa - slope * a});
      }
    } else if (m.has_uniform_circle_grid()) {
      const auto w = trapezoid_weights(d, space_);
      const std::size_t n = d.grid.size();
      const std::size_t order = (n - 1) / 2;
      spectral_.assign(order, cplx{0.0, 0.0});
      for (std::size_t j = 0; j < n; ++j) {
        const cplx step = std::polar(1.0, d.grid[j]);
        spectral_mass_ += w[j] * d.values[j];
        cplx p = w[j] * d.values[j];
        for (std::size_t k = 0; k < order; ++k) {
          p *= step;
          spectral_[k] += p;
        }
      }
    } else {
      const auto w = trapezoid_weights(d, space_);
      for (std::size_t j = 0; j < d.grid.size(); ++j) {
        if (d.values[j] == 0.0) continue;
        disc_nodes_.push_back(std::polar(1.0, d.grid[j]));
        disc_weights_.push_back(w[j] * d.values[j]);
      }
    }
  }
  first_moment_ = psi(cplx{0.0, 0.0}).derivative;
}

Transformer::PsiParts Transformer::psi_excluding(cplx z, std::size_t skip_atom) const {
  cplx value{0.0, 0.0};
  cplx deriv{0.0, 0.0};
  // 1 + psi is accumulated separately; adding 1 to psi cancels when psi -> -1.
  cplx resolvent{0.0, 0.0};
  double mass = 0.0;
  auto add_node = [&](cplx node, double weight) {
    const cplx d = 1.0 - z * node;
    if (std::abs(d) < kPoleTolerance) {
      throw Error(ErrorCode::PoleHit, "evaluation point hits an atom pole");
    }
    value += weight * z * node / d;
    deriv += weight * node / (d * d);
    resolvent += weight / d;
    mass += weight;
  };
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (j != skip_atom) add_node(nodes_[j], weights_[j]);
  }
  for (std::size_t j = 0; j < disc_nodes_.size(); ++j) add_node(disc_nodes_[j], disc_weights_[j]);

  if (!spectral_.empty()) {
    cplx p{0.0, 0.0};
    cplx dp{0.0, 0.0};
    for (std::size_t k = spectral_.size(); k-- > 0;) {
      dp = dp * z + p;
      p = p * z + spectral_[k];
    }
    // p = sum c_{k+1} z^k here; psi = z p.
    value += z * p;
    deriv += p + z * dp;
    resolvent += spectral_mass_ + z * p;
    mass += spectral_mass_;
  }

  for (const auto& c : cells_) {
    if (far_from_cell(z, c.a, c.b)) {
      const double half = 0.5 * (c.b - c.a);
      const double mid = 0.5 * (c.a + c.b);
      for (std::size_t g = 0; g < kGaussNodes.size(); ++g) {
        const double s = mid + half * kGaussNodes[g];
        const double f = (c.intercept + c.slope * s) * half * kGaussWeights[g];
        const cplx d = 1.0 - z * s;
        value += f * z * s / d;
        deriv += f * s / (d * d);
        resolvent += f / d;
        mass += f;
      }
    } else {
      const cplx w = 1.0 / z;
      if (w.imag() == 0.0 && w.real() > c.a && w.real() < c.b) {
        throw Error(ErrorCode::PoleHit, "evaluation point on the density support");
      }
      const cplx log_ratio = std::log(w - c.a) - std::log(w - c.b);
      const cplx lin = c.intercept + c.slope * w;
      const cplx cauchy = lin * log_ratio - c.slope * (c.b - c.a);
      const cplx dcauchy = c.slope * log_ratio + lin * (1.0 / (w - c.a) - 1.0 / (w - c.b));
      const double cell_mass = 0.5 * (c.b - c.a) * (2.0 * c.intercept + c.slope * (c.a + c.b));
      value += -cell_mass + w * cauchy;
      deriv += -w * w * (cauchy + w * dcauchy);
      resolvent += w * cauchy;
      mass += cell_mass;
    }
  }
  return {value, deriv, resolvent + (1.0 - mass)};
}

AnalyticValue Transformer::psi(cplx z) const {
  const PsiParts p = psi_excluding(z, nodes_.size());
  return {p.value, p.derivative, 1.0 - p.value};
}

AnalyticValue Transformer::eta(cplx z) const {
  std::size_t nearest = nodes_.size();
  double best = kNearPole;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    const double d = std::abs(1.0 - z * nodes_[j]);
    if (d < best) {
      best = d;
      nearest = j;
    }
  }
  if (nearest == nodes_.size()) {
    const PsiParts p = psi_excluding(z, nodes_.size());
    const cplx one_plus = p.one_plus;
    if (std::abs(one_plus) < kPoleTolerance) throw Error(ErrorCode::EtaPole, "1 + psi vanishes");
    return {p.value / one_plus, p.derivative / (one_plus * one_plus), 1.0 / one_plus};
  }
  // Near the pole of atom j write 1 + psi = (p z s + d (1 + R)) / d with
  // d = 1 - z s, so that eta = 1 - d / (p z s + d (1 + R)) stays finite.
  const auto rest = psi_excluding(z, nearest);
  const cplx s = nodes_[nearest];
  const double p = weights_[nearest];
  const cplx d = 1.0 - z * s;
  const cplx denom = p * z * s + d * rest.one_plus;
  if (std::abs(denom) < kPoleTolerance) throw Error(ErrorCode::EtaPole, "1 + psi vanishes");
  const cplx complement = d / denom;
  const cplx deriv = (p * s + d * d * rest.derivative) / (denom * denom);
  return {1.0 - complement, deriv, complement};
}

cplx Transformer::cauchy(cplx w) const {
  if (space_ != Space::HalfLine) {
    throw Error(ErrorCode::WrongSpace, "the Cauchy transform is used for half-line measures");
  }
  cplx g{0.0, 0.0};
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    const cplx d = w - nodes_[j];
    if (std::abs(d) < kPoleTolerance) throw Error(ErrorCode::PoleHit, "point hits an atom");
    g += weights_[j] / d;
  }
  for (const auto& c : cells_) {
    if (segment_distance(w, c.a, c.b) > 2.0 * (c.b - c.a)) {
      const double half = 0.5 * (c.b - c.a);
      const double mid = 0.5 * (c.a + c.b);
      for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
        const double s = mid + half * kGaussNodes[q];
        g += (c.intercept + c.slope * s) * half * kGaussWeights[q] / (w - s);
      }
    } else {
      if (w.imag() == 0.0 && w.real() > c.a && w.real() < c.b) {
        throw Error(ErrorCode::PoleHit, "point on the density support");
      }
      const cplx log_ratio = std::log(w - c.a) - std::log(w - c.b);
      g += (c.intercept + c.slope * w) * log_ratio - c.slope * (c.b - c.a);
    }
  }
  return g;
}

cplx psi(const Measure& m, const EvalPoint& p) {
  if (p.domain() != domain_for(m.space())) {
    throw Error(ErrorCode::WrongSpace, "evaluation point domain does not match the measure");
  }
  return Transformer(m).psi(p.z()).value;
}

cplx eta(const Measure& m, const EvalPoint& p) {
  if (p.domain() != domain_for(m.space())) {
    throw Error(ErrorCode::WrongSpace, "evaluation point domain does not match the measure");
  }
  return Transformer(m).eta(p.z()).value;
}

cplx cauchy(const Measure& m, cplx w) { return Transformer(m).cauchy(w); }

std::vector<PickViolation> validate_pick_class(const AnalyticFunction& eta_fn, Space space,
                                               const std::vector<EvalPoint>& samples) {
  std::vector<PickViolation> out;
  constexpr double slack = 1e-12;
  for (const auto& p : samples) {
    const cplx z = p.z();
    const cplx e = eta_fn(z);
    if (space == Space::HalfLine) {
      if (z.imag() <= 0.0) continue;
      const double ae = std::arg(e);
      if (!(e.imag() > 0.0) || ae < std::arg(z) - slack || ae >= kPi) {
        out.push_back({z, "arg eta(z) outside [arg z, pi)"});
      }
    } else if (std::abs(e) > std::abs(z) * (1.0 + slack) + 1e-300) {
      out.push_back({z, "|eta(z)| > |z|"});
    }
  }
  if (space == Space::HalfLine) {
    const cplx x{-std::ldexp(1.0, -40), 0.0};
    if (!(std::abs(eta_fn(x)) <= 1e-6)) out.push_back({x, "eta(0-) != 0"});
  } else {
    const cplx zero{0.0, 0.0};
    if (std::abs(eta_fn(zero)) != 0.0) out.push_back({zero, "eta(0) != 0"});
  }
  return out;
}

std::vector<PickViolation> validate_pick_class(const Measure& m,
                                               const std::vector<EvalPoint>& samples) {
  const Transformer tr(m);
  return validate_pick_class([&tr](cplx z) { return tr.eta(z).value; }, m.space(), samples);
}

cplx approach_point(cplx zeta, Space space, int k) {
  const double h = std::ldexp(1.0, -k);
  return space == Space::Circle ? zeta * (1.0 - h) : cplx{zeta.real(), h};
}

BoundaryValue boundary_value(const AnalyticFunction& f, cplx zeta, Space space,
                             const BoundaryConfig& cfg) {
  Richardson table;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    table.push(f(approach_point(zeta, space, k)));
    if (table.size() >= 3) {
      const cplx est = table.latest_estimate();
      const double err = table.latest_error();
      if (std::isfinite(err) && err < cfg.tol * std::max(1.0, std::abs(est))) {
        return {est, true, err, table.size()};
      }
    }
  }
  throw Error(ErrorCode::NoConvergence, "boundary limit did not settle");
}

JcDerivative jc_derivative(const AnalyticFunction& f, cplx zeta, cplx limit, Space space,
                           const BoundaryConfig& cfg) {
  Richardson table;
  std::vector<double> magnitudes;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    const cplx z = approach_point(zeta, space, k);
    const cplx q = (f(z) - limit) / (z - zeta);
    magnitudes.push_back(std::abs(q));
    table.push(q);
    if (table.size() >= 3) {
      const cplx est = table.latest_estimate();
      const double err = table.latest_error();
      if (std::isfinite(err) && err < cfg.tol * std::max(1.0, std::abs(est))) {
        return {est, false, err};
      }
    }
  }
  // Divergence: magnitudes grow over the last levels and end up large.
  const std::size_t n = magnitudes.size();
  bool growing = n >= 8 && magnitudes.back() > 1e6;
  for (std::size_t i = n >= 8 ? n - 8 : 0; growing && i + 1 < n; ++i) {
    growing = magnitudes[i + 1] > magnitudes[i];
  }
  if (growing) {
    return {cplx{std::numeric_limits<double>::infinity(), 0.0}, true, 0.0};
  }
  throw Error(ErrorCode::NoConvergence, "difference quotients did not settle");
}

}  // namespace freemul
