#include "freemul/subordination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "freemul/error.hpp"
#include "freemul/extrapolate.hpp"
#include "freemul/parallel.hpp"

namespace freemul {

namespace {

constexpr double kBaseRadius = 1e-3;
constexpr double kBranchJump = 1.0;
constexpr int kMaxSubdivision = 12;
constexpr int kNewtonProbe = 25;

double residual_limit(const SolverConfig& cfg, cplx z) {
  return cfg.tol_residual * std::max(1.0, std::abs(z));
}

void check_config(double t, const SolverConfig& cfg) {
  if (!(t >= 1.0) || !std::isfinite(t)) {
    throw Error(ErrorCode::InvalidArgument, "semigroup parameter must be >= 1");
  }
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1 || !(cfg.damping > 0.0 && cfg.damping <= 1.0) ||
      cfg.path_steps < 1 || !(cfg.tol_residual > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid solver configuration");
  }
}

void check_target(Space space, cplx z) { (void)EvalPoint::in(space, z); }

// eta, its derivative and the continued log of w/eta(w) at one point.
struct Local {
  cplx eta;
  cplx deta;
  cplx ell;
  cplx complement;
};

Local local(const EtaSource& src, cplx w, BranchState& branch) {
  const AnalyticValue ev = src.eta(w);
  if (std::abs(ev.value) == 0.0 || !std::isfinite(std::abs(ev.value))) {
    throw Error(ErrorCode::EtaVanishes, "eta vanishes away from the origin");
  }
  const cplx ratio = w / ev.value;
  const cplx ell = branch.tracked ? nearest_log(ratio, branch.log_ratio) : std::log(ratio);
  branch.log_ratio = ell;
  return {ev.value, ev.derivative, ell, ev.complement};
}

cplx phi_from(cplx w, const Local& l, double t) { return w * std::exp((t - 1.0) * l.ell); }

// Phi_t'(w) = [w/eta]^{t-1} (t - (t-1) w eta'/eta); finite as w -> 0.
cplx dphi_from(cplx w, const Local& l, double t) {
  return std::exp((t - 1.0) * l.ell) * (t - (t - 1.0) * w * l.deta / l.eta);
}

bool in_domain(Space space, cplx w, cplx z) {
  if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) return false;
  if (space == Space::Circle) return std::abs(w) <= std::max(std::abs(z), 1e-300) * (1.0 + 1e-9);
  // Upper-half representative: omega stays in the closed upper half-plane, off [0, inf).
  if (w.imag() < -1e-10 * std::abs(w)) return false;
  return !(w.imag() <= 0.0 && w.real() >= 0.0);
}

// Core iteration for a target z (already in the upper half-plane on the
// half-line). Fixed-point steps first; Newton once they have settled.
OmegaResult iterate(const EtaSource& src, double t, cplx z, cplx omega, BranchState branch,
                    const SolverConfig& cfg) {
  const Space space = src.space();
  const double limit = residual_limit(cfg, z);
  const BranchState start = branch;

  OmegaResult out;
  out.z = z;
  if (space == Space::Circle && z == cplx{0.0, 0.0}) {
    out.omega = 0.0;
    out.eta_t = 0.0;
    out.one_minus_eta_t = 1.0;
    out.branch = branch;
    return out;
  }
  if (t == 1.0) {
    const Local l = local(src, z, branch);
    out.omega = z;
    out.eta_t = l.eta;
    out.one_minus_eta_t = l.complement;
    out.branch = branch;
    return out;
  }

  bool fixed_point = true;
  double switch_factor = 1e-3;
  double previous_step = std::numeric_limits<double>::infinity();
  int settled = 0;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Local l = local(src, omega, branch);
    double step = 0.0;
    if (fixed_point) {
      const cplx ratio = z / l.eta;
      const cplx lam = branch.tracked ? nearest_log(ratio, t * l.ell) : std::log(ratio);
      const cplx next = l.eta * std::exp(lam / t);
      if (!in_domain(space, next, z)) {
        throw Error(ErrorCode::DomainEscape, "fixed-point iterate left the domain");
      }
      step = std::abs(next - omega);
      const double rate = step / previous_step;
      previous_step = step;
      omega = next;
      const double remaining = rate < 1.0 ? step * rate / (1.0 - rate) : step;
      if (it >= 3 && remaining < switch_factor * std::abs(omega)) fixed_point = false;
      // Near-neutral fixed points contract too slowly for the estimate above.
      if (it % kNewtonProbe == 0) fixed_point = false;
    } else {
      const cplx r = phi_from(omega, l, t) - z;
      const cplx d = dphi_from(omega, l, t);
      const cplx s = r / d;
      const double trust = 0.25 * std::abs(omega);
      bool accepted = false;
      if (std::abs(d) > 0.0 && std::abs(s) <= trust) {
        double lambda = cfg.damping;
        for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
          const cplx trial = omega - lambda * s;
          if (!in_domain(space, trial, z)) continue;
          BranchState b = branch;
          try {
            const Local lt = local(src, trial, b);
            const double rt = std::abs(phi_from(trial, lt, t) - z);
            if (rt < std::abs(r) || rt <= 0.5 * limit) {
              step = std::abs(trial - omega);
              omega = trial;
              branch = b;
              accepted = true;
              break;
            }
          } catch (const Error& e) {
            if (e.code() != ErrorCode::PoleHit && e.code() != ErrorCode::EtaPole) throw;
          }
        }
      }
      if (!accepted) {
        fixed_point = true;
        switch_factor *= 1e-2;
        previous_step = std::numeric_limits<double>::infinity();
        continue;
      }
    }
    out.iterations = it;
    if (step <= cfg.tol * std::max(std::abs(omega), 1e-300)) {
      if (++settled >= 1) {
        BranchState b = branch;
        const Local lf = local(src, omega, b);
        const double res = std::abs(phi_from(omega, lf, t) - z);
        if (res <= limit) {
          if (b.tracked && std::abs((b.log_ratio - start.log_ratio).imag()) > kBranchJump) {
            throw Error(ErrorCode::BranchLost, "log branch jumped during a solve");
          }
          out.omega = omega;
          out.eta_t = lf.eta;
          out.one_minus_eta_t = lf.complement;
          out.residual = res;
          out.branch = b;
          out.branch_winding = static_cast<int>(
              std::lround((b.log_ratio.imag() - std::arg(omega / lf.eta)) / kTwoPi));
          return out;
        }
        fixed_point = false;
        settled = 0;
      }
    }
  }
  throw Error(ErrorCode::MaxIterExceeded, "subordination solve did not converge");
}

cplx upper(cplx z) { return z.imag() < 0.0 ? std::conj(z) : z; }

OmegaResult conjugated(OmegaResult r) {
  r.z = std::conj(r.z);
  r.omega = std::conj(r.omega);
  r.eta_t = std::conj(r.eta_t);
  r.one_minus_eta_t = std::conj(r.one_minus_eta_t);
  r.branch.log_ratio = std::conj(r.branch.log_ratio);
  r.branch_winding = -r.branch_winding;
  return r;
}

// Cold solve near the base region: omega ~ z Sigma(0)^{-(t-1)}.
OmegaResult cold_near_base(const EtaSource& src, double t, cplx z, const SolverConfig& cfg) {
  const BranchState b = initial_branch(src);
  const cplx guess = z * std::exp(-(t - 1.0) * b.log_ratio);
  const bool ok = in_domain(src.space(), guess, z);
  return iterate(src, t, z, ok ? guess : z, b, cfg);
}

OmegaResult half_line_cold(const EtaSource& src, double t, cplx z, const SolverConfig& cfg) {
  const cplx zu = upper(z);
  OmegaResult r = iterate(src, t, zu, zu, initial_branch(src), cfg);
  return z.imag() < 0.0 ? conjugated(r) : r;
}

// Warm step from a neighbouring solution, with a first-order predictor.
OmegaResult warm_step(const EtaSource& src, double t, const OmegaResult& from, cplx z,
                      const SolverConfig& cfg) {
  const bool flip = src.space() == Space::HalfLine && z.imag() < 0.0;
  const cplx zu = flip ? std::conj(z) : z;
  OmegaResult base = from;
  if (src.space() == Space::HalfLine && base.z.imag() < 0.0) base = conjugated(base);
  if (src.space() == Space::Circle && base.z == cplx{0.0, 0.0}) {
    return cold_near_base(src, t, z, cfg);
  }
  BranchState b = base.branch;
  cplx guess = base.omega;
  try {
    const Local l = local(src, base.omega, b);
    const cplx d = dphi_from(base.omega, l, t);
    const cplx predicted = base.omega + (zu - base.z) / d;
    if (std::abs(d) > 0.0 && in_domain(src.space(), predicted, zu)) guess = predicted;
  } catch (const Error&) {
  }
  if (!in_domain(src.space(), guess, zu)) guess = src.space() == Space::Circle ? zu * 0.5 : zu;
  OmegaResult r = iterate(src, t, zu, guess, base.branch, cfg);
  return flip ? conjugated(r) : r;
}

std::vector<cplx> radial_points(cplx z, int steps) {
  const double r = std::abs(z);
  const cplx u = z / r;
  std::vector<cplx> pts;
  if (r <= kBaseRadius) {
    pts.push_back(z);
    return pts;
  }
  const double g0 = 1.0 - kBaseRadius;
  const double g1 = 1.0 - r;
  for (int j = 0; j <= steps; ++j) {
    const double gap = g0 * std::pow(g1 / g0, static_cast<double>(j) / steps);
    pts.push_back((1.0 - gap) * u);
  }
  pts.back() = z;
  return pts;
}

std::vector<cplx> half_line_points(cplx z, int steps) {
  const cplx zu = upper(z);
  const double r = std::abs(zu);
  const int n1 = std::max(1, steps / 2);
  const int n2 = std::max(1, steps - n1);
  std::vector<cplx> pts;
  for (int j = 0; j <= n1; ++j) {
    pts.push_back(-kBaseRadius * std::pow(r / kBaseRadius, static_cast<double>(j) / n1));
  }
  const double a = std::arg(zu);
  if (a < kPi) {
    for (int j = 1; j <= n2; ++j) {
      pts.push_back(std::polar(r, kPi + (a - kPi) * j / n2));
    }
  }
  pts.back() = zu;
  if (z.imag() < 0.0) {
    for (auto& p : pts) p = std::conj(p);
  }
  return pts;
}

}  // namespace

MeasureEta::MeasureEta(const Measure& m) : tr_(m) {
  const cplx m1 = tr_.first_moment();
  if (std::abs(m1) == 0.0) throw Error(ErrorCode::ZeroFirstMomentCircle, "first moment vanishes");
  log_sigma0_ = std::log(1.0 / m1);
}

BranchState initial_branch(const EtaSource& src) {
  BranchState b;
  b.log_ratio = src.log_sigma0();
  b.tracked = src.space() == Space::Circle;
  return b;
}

cplx phi_t(const EtaSource& src, double t, cplx w, BranchState& branch) {
  if (src.space() == Space::Circle && w == cplx{0.0, 0.0}) {
    branch.log_ratio = src.log_sigma0();
    return 0.0;
  }
  check_target(src.space(), w);
  if (src.space() == Space::HalfLine && w.imag() < 0.0) {
    BranchState b{std::conj(branch.log_ratio), false};
    const cplx v = phi_t(src, t, std::conj(w), b);
    branch.log_ratio = std::conj(b.log_ratio);
    return std::conj(v);
  }
  const cplx before = branch.log_ratio;
  const Local l = local(src, w, branch);
  if (branch.tracked && std::abs((l.ell - before).imag()) > kBranchJump) {
    throw Error(ErrorCode::BranchLost, "continuation step too large");
  }
  return phi_from(w, l, t);
}

OmegaResult solve_omega(const EtaSource& src, double t, cplx z, const SolverConfig& cfg) {
  check_config(t, cfg);
  if (src.space() == Space::Circle && z == cplx{0.0, 0.0}) {
    return iterate(src, t, z, 0.0, initial_branch(src), cfg);
  }
  check_target(src.space(), z);
  if (src.space() == Space::HalfLine) {
    try {
      return half_line_cold(src, t, z, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MaxIterExceeded && e.code() != ErrorCode::DomainEscape) throw;
    }
  }
  return continuation_path(src, t, z, cfg).back();
}

OmegaResult solve_omega_from(const EtaSource& src, double t, cplx z, const OmegaResult& warm,
                             const SolverConfig& cfg) {
  check_config(t, cfg);
  if (src.space() == Space::Circle && z == cplx{0.0, 0.0}) return solve_omega(src, t, z, cfg);
  check_target(src.space(), z);
  return warm_step(src, t, warm, z, cfg);
}

cplx omega_via_formula(cplx eta_t, cplx z, double t, Space space, cplx reference_log) {
  if (z == cplx{0.0, 0.0}) return 0.0;
  if (std::abs(eta_t) == 0.0) throw Error(ErrorCode::EtaVanishes, "eta_t vanishes at z != 0");
  const cplx ratio = z / eta_t;
  cplx lam;
  if (space == Space::HalfLine) {
    lam = std::log(ratio);
  } else {
    lam = nearest_log(ratio, reference_log);
    if (std::abs((lam - reference_log).imag()) > kBranchJump) {
      throw Error(ErrorCode::BranchLost, "reference log too far from the value");
    }
  }
  return eta_t * std::exp(lam / t);
}

const OmegaResult& PathSolver::advance(cplx z) {
  check_config(t_, cfg_);
  if (!state_) {
    state_ = solve_omega(*src_, t_, z, cfg_);
  } else {
    if (!(src_->space() == Space::Circle && z == cplx{0.0, 0.0})) check_target(src_->space(), z);
    state_ = step(*state_, z, 0);
  }
  return *state_;
}

OmegaResult PathSolver::step(const OmegaResult& from, cplx z, int depth) {
  try {
    return warm_step(*src_, t_, from, z, cfg_);
  } catch (const Error& e) {
    const bool retry = e.code() == ErrorCode::BranchLost || e.code() == ErrorCode::MaxIterExceeded ||
                       e.code() == ErrorCode::DomainEscape;
    if (!retry || depth >= kMaxSubdivision) throw;
  }
  cplx a = from.z;
  cplx b = z;
  if (src_->space() == Space::HalfLine && (a.imag() < 0.0) != (b.imag() < 0.0)) {
    a = upper(a);
    b = upper(b);
  }
  const cplx mid = 0.5 * (a + b);
  if (src_->space() == Space::HalfLine && mid.imag() == 0.0 && mid.real() >= 0.0) {
    throw Error(ErrorCode::BranchLost, "path crosses the support");
  }
  const OmegaResult half = step(from, mid, depth + 1);
  return step(half, z, depth + 1);
}

std::vector<OmegaResult> solve_along(const EtaSource& src, double t,
                                     const std::vector<cplx>& points, const SolverConfig& cfg) {
  PathSolver ps(src, t, cfg);
  std::vector<OmegaResult> out;
  out.reserve(points.size());
  for (cplx p : points) out.push_back(ps.advance(p));
  return out;
}

std::vector<OmegaResult> continuation_path(const EtaSource& src, double t, cplx z,
                                           const SolverConfig& cfg) {
  check_config(t, cfg);
  check_target(src.space(), z);
  if (src.space() == Space::HalfLine) {
    const std::vector<cplx> pts = half_line_points(z, cfg.path_steps);
    PathSolver ps(src, t, cfg);
    ps.seed(half_line_cold(src, t, pts.front(), cfg));
    std::vector<OmegaResult> out;
    out.reserve(pts.size());
    out.push_back(*ps.state());
    for (std::size_t i = 1; i < pts.size(); ++i) out.push_back(ps.advance(pts[i]));
    return out;
  }
  const std::vector<cplx> pts = radial_points(z, cfg.path_steps);
  std::vector<OmegaResult> out;
  out.reserve(pts.size());
  PathSolver ps(src, t, cfg);
  ps.seed(cold_near_base(src, t, pts.front(), cfg));
  out.push_back(*ps.state());
  for (std::size_t i = 1; i < pts.size(); ++i) out.push_back(ps.advance(pts[i]));
  return out;
}

SemigroupEta::SemigroupEta(std::shared_ptr<const EtaSource> base, double t, SolverConfig cfg)
    : base_(std::move(base)), t_(t), cfg_(cfg) {
  check_config(t, cfg);
}

AnalyticValue SemigroupEta::eta(cplx z) const {
  if (base_->space() == Space::Circle && z == cplx{0.0, 0.0}) {
    return {0.0, std::exp(-log_sigma0()), 1.0};
  }
  const OmegaResult r = solve_omega(*base_, t_, z, cfg_);
  BranchState b = r.branch;
  const Local l = local(*base_, r.omega, b);
  return {r.eta_t, l.deta / dphi_from(r.omega, l, t_), r.one_minus_eta_t};
}

std::vector<GridValue> eta_t_grid(const EtaSource& src, double t, const std::vector<cplx>& points,
                                  const SolverConfig& cfg, int threads) {
  std::vector<GridValue> out(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    out[i].z = points[i];
    try {
      out[i].result = solve_omega(src, t, points[i], cfg);
      out[i].ok = true;
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

}  // namespace freemul
