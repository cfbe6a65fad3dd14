#pragma once

#include <functional>
#include <string>
#include <vector>

#include "freemul/measure.hpp"

namespace freemul {

enum class Domain { OmegaHalfLine, Disk };

Domain domain_for(Space space);

/// Interior evaluation point: off [0, inf) for the half-line, |z| < 1 on the disk.
class EvalPoint {
 public:
  static EvalPoint half_line(cplx z);
  static EvalPoint disk(cplx z);
  static EvalPoint in(Space space, cplx z);

  cplx z() const noexcept { return z_; }
  Domain domain() const noexcept { return domain_; }

 private:
  EvalPoint(cplx z, Domain d) : z_(z), domain_(d) {}
  cplx z_;
  Domain domain_;
};

struct AnalyticValue {
  cplx value;
  cplx derivative;
  cplx complement;  // 1 - value, computed without cancellation
};

/// Precomputed evaluator for psi, eta and the Cauchy transform of one measure.
///
/// Atoms contribute exact rational terms. Half-line densities are integrated
/// exactly as piecewise-linear functions near the pole and by 8-point
/// Gauss-Legendre on cells far from it. Circle densities on an equispaced grid
/// are evaluated through their trapezoid moments (the psi series of the
/// trigonometric interpolant); other circle grids fall back to the trapezoid sum.
class Transformer {
 public:
  explicit Transformer(const Measure& m);

  Space space() const noexcept { return space_; }
  cplx first_moment() const noexcept { return first_moment_; }

  /// psi(z) = integral of z s/(1 - z s) dmu(s). Accepts any z off the closed
  /// support (on the half-line this includes points of spectral gaps).
  AnalyticValue psi(cplx z) const;

  /// eta = psi/(1 + psi). Removable singularities at atom poles are handled,
  /// so eta is finite (equal to 1) exactly at an atom pole.
  AnalyticValue eta(cplx z) const;

  /// Cauchy transform G(w) = integral of dmu(s)/(w - s); half-line only.
  cplx cauchy(cplx w) const;

 private:
  struct Cell {
    double a, b;
    double slope, intercept;  // density = intercept + slope * s on [a, b]
  };

  struct PsiParts {
    cplx value;
    cplx derivative;
    cplx one_plus;  // 1 + value, summed as the resolvent integral of dmu/(1 - z s)
  };

  PsiParts psi_excluding(cplx z, std::size_t skip_atom) const;

  Space space_;
  std::vector<cplx> nodes_;      // atom nodes: s on the half-line, e^{i phi} on the circle
  std::vector<double> weights_;  // atom masses
  std::vector<Cell> cells_;      // half-line density
  std::vector<cplx> spectral_;   // circle, uniform grid: coefficients m_1..m_K
  double spectral_mass_ = 0.0;
  std::vector<cplx> disc_nodes_;
  std::vector<double> disc_weights_;
  cplx first_moment_;
};

cplx psi(const Measure& m, const EvalPoint& p);
cplx eta(const Measure& m, const EvalPoint& p);
cplx cauchy(const Measure& m, cplx w);

struct PickViolation {
  cplx z;
  std::string reason;
};

using AnalyticFunction = std::function<cplx(cplx)>;

/// Half-line: arg eta(z) in [arg z, pi) on upper-half-plane samples and
/// eta(0-) = 0. Circle: |eta(z)| <= |z| and eta(0) = 0. Empty result = pass.
std::vector<PickViolation> validate_pick_class(const Measure& m,
                                               const std::vector<EvalPoint>& samples);
std::vector<PickViolation> validate_pick_class(const AnalyticFunction& eta_fn, Space space,
                                               const std::vector<EvalPoint>& samples);

struct BoundaryConfig {
  double tol = 1e-8;
  int k_min = 4;
  int k_max = 40;
};

struct BoundaryValue {
  cplx limit;
  bool converged = false;
  double residual_estimate = 0.0;
  int levels = 0;
};

struct JcDerivative {
  cplx value;
  bool infinite = false;
  double residual_estimate = 0.0;
};

/// Approach point for level k: zeta (1 - 2^-k) on the disk, x + i 2^-k on the
/// half-line boundary.
cplx approach_point(cplx zeta, Space space, int k);

/// Radial limit of f at a boundary point, Richardson-accelerated over the
/// levels k = k_min..k_max. Throws NoConvergence when the extrapolants do not
/// settle. `f` is called with increasing k, so it may warm-start internally.
BoundaryValue boundary_value(const AnalyticFunction& f, cplx zeta, Space space,
                             const BoundaryConfig& cfg = {});

/// Julia-Caratheodory derivative: limit of (f(z_k) - limit)/(z_k - zeta) along
/// the same approach. Divergent quotients give the `infinite` marker.
JcDerivative jc_derivative(const AnalyticFunction& f, cplx zeta, cplx limit, Space space,
                           const BoundaryConfig& cfg = {});

}  // namespace freemul
