#include "freemul/recover.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "freemul/error.hpp"
#include "freemul/extrapolate.hpp"
#include "freemul/grid.hpp"
#include "freemul/parallel.hpp"

namespace freemul {

namespace {

constexpr int kScanLevel = 20;
constexpr double kGolden = 0.6180339887498949;

double angle_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

// eta_t(zeta u) along an approach u -> 1, memoized so that the boundary limit
// and the difference quotients reuse the same solves.
class Approach {
 public:
  Approach(const EtaSource& src, double t, const SolverConfig& cfg, cplx zeta)
      : solver_(src, t, cfg), zeta_(zeta) {}

  cplx operator()(cplx u) {
    const auto key = std::make_pair(u.real(), u.imag());
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const cplx v = solver_.advance(zeta_ * u).eta_t;
    cache_.emplace(key, v);
    return v;
  }

 private:
  PathSolver solver_;
  cplx zeta_;
  std::map<std::pair<double, double>, cplx> cache_;
};

// Boundary point for the scan parameter: 1/x on the half-line, e^{i theta} on the disk.
cplx boundary_point(Space space, double p) {
  return space == Space::HalfLine ? cplx{1.0 / p, 0.0} : std::polar(1.0, p);
}

double atom_location(Space space, double p) {
  if (space == Space::HalfLine) return p;
  const double a = wrap_angle(-p);
  return kTwoPi - a < 1e-12 ? 0.0 : a;
}

struct Probe {
  cplx limit;
  bool ok = false;
};

Probe probe_limit(const EtaSource& src, double t, double p, const RecoverConfig& cfg) {
  const Space space = src.space();
  Approach f(src, t, cfg.solver, boundary_point(space, p));
  try {
    const auto bv = boundary_value([&f](cplx u) { return f(u); }, 1.0, space, cfg.boundary);
    return {bv.limit, true};
  } catch (const Error&) {
    return {};
  }
}

// Coarse value at a fixed small offset from the boundary.
cplx probe_scan(const EtaSource& src, double t, double p, const SolverConfig& cfg) {
  const Space space = src.space();
  const cplx zeta = boundary_point(space, p);
  const cplx z = zeta * approach_point(1.0, space, kScanLevel);
  return solve_omega(src, t, z, cfg).eta_t;
}

double signed_part(Space space, cplx eta) {
  return space == Space::HalfLine ? eta.real() - 1.0 : eta.imag();
}

struct Refined {
  double p = 0.0;
  cplx limit;
  bool ok = false;
};

// Bisection on the signed part of eta_t - 1 between a and b, falling back to
// golden-section minimization of |eta_t - 1| when the sign does not change.
Refined refine(const EtaSource& src, double t, double a, double b, double center,
               const RecoverConfig& cfg) {
  const Space space = src.space();
  const double width_goal = cfg.bisection_tol * (space == Space::HalfLine ? center : 1.0);
  Probe pa = probe_limit(src, t, a, cfg);
  Probe pb = probe_limit(src, t, b, cfg);
  if (pa.ok && pb.ok) {
    double sa = signed_part(space, pa.limit);
    const double sb = signed_part(space, pb.limit);
    if (sa == 0.0) return {a, pa.limit, true};
    if (sb == 0.0) return {b, pb.limit, true};
    if ((sa < 0.0) != (sb < 0.0)) {
      Probe best;
      double mid = 0.5 * (a + b);
      for (int i = 0; i < 200 && b - a > width_goal; ++i) {
        mid = 0.5 * (a + b);
        Probe pm = probe_limit(src, t, mid, cfg);
        if (!pm.ok) break;
        best = pm;
        const double sm = signed_part(space, pm.limit);
        if (sm == 0.0) break;
        if ((sm < 0.0) == (sa < 0.0)) {
          a = mid;
          sa = sm;
        } else {
          b = mid;
        }
      }
      mid = 0.5 * (a + b);
      Probe pm = probe_limit(src, t, mid, cfg);
      if (pm.ok) return {mid, pm.limit, true};
      return {mid, best.limit, best.ok};
    }
  }
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  auto dist = [&](double p) {
    const Probe q = probe_limit(src, t, p, cfg);
    return q.ok ? std::abs(q.limit - 1.0) : std::numeric_limits<double>::infinity();
  };
  double f1 = dist(x1);
  double f2 = dist(x2);
  for (int i = 0; i < 200 && b - a > width_goal; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = dist(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = dist(x2);
    }
  }
  const double p = 0.5 * (a + b);
  const Probe q = probe_limit(src, t, p, cfg);
  return {p, q.limit, q.ok};
}

std::vector<double> scan_parameters(Space space, double lo, double hi, double resolution) {
  const int n = std::max(8, static_cast<int>(std::ceil(1.0 / resolution)));
  std::vector<double> ps(n + (space == Space::HalfLine ? 1 : 0));
  for (std::size_t j = 0; j < ps.size(); ++j) {
    ps[j] = space == Space::HalfLine
                ? std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * j / n)
                : kTwoPi * static_cast<double>(j) / n;
  }
  return ps;
}

void fill_failed(DensityEstimate& d) {
  const std::size_t n = d.grid.size();
  std::vector<std::size_t> good;
  for (std::size_t i = 0; i < n; ++i) {
    if (d.converged[i]) good.push_back(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (d.converged[i]) continue;
    ++d.filled;
    if (good.empty()) {
      d.values[i] = 0.0;
      continue;
    }
    const auto it = std::lower_bound(good.begin(), good.end(), i);
    if (it == good.begin()) {
      d.values[i] = d.values[*it];
    } else if (it == good.end()) {
      d.values[i] = d.values[good.back()];
    } else {
      const std::size_t l = *(it - 1);
      const std::size_t r = *it;
      const double w = (d.grid[i] - d.grid[l]) / (d.grid[r] - d.grid[l]);
      d.values[i] = (1.0 - w) * d.values[l] + w * d.values[r];
    }
  }
  if (d.filled > 0) {
    d.warnings.push_back(std::to_string(d.filled) +
                         " density points did not converge and were interpolated");
  }
}

template <class Sample>
DensityEstimate recover_density(const EtaSource& src, Space space, const std::vector<double>& grid,
                                const std::vector<double>& scales, const RecoverConfig& cfg,
                                Sample&& sample) {
  if (cfg.k_min < 0 || cfg.k_max < cfg.k_min + 2) {
    throw Error(ErrorCode::InvalidArgument, "height schedule needs at least three levels");
  }
  DensityEstimate d;
  d.space = space;
  d.grid = grid;
  d.scales = scales;
  const std::size_t n = grid.size();
  d.values.assign(n, 0.0);
  d.errors.assign(n, 0.0);
  d.converged.assign(n, false);
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) d.y_schedule.push_back(std::ldexp(1.0, -k));

  std::vector<char> ok(n, 0);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    (void)src;
    Richardson table;
    try {
      auto next = sample(i);
      for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        table.push(next(k));
        if (table.size() < 3) continue;
        const double est = table.latest_estimate().real();
        const double err = table.latest_error();
        if (std::isfinite(err) &&
            err <= std::max(cfg.density_tol * std::abs(est), cfg.density_floor)) {
          d.values[i] = est;
          d.errors[i] = err;
          ok[i] = 1;
          return;
        }
      }
      d.values[i] = table.estimate().real();
      d.errors[i] = table.error();
    } catch (const Error&) {
      d.errors[i] = std::numeric_limits<double>::infinity();
    }
  });
  for (std::size_t i = 0; i < n; ++i) d.converged[i] = ok[i] != 0;

  for (std::size_t i = 0; i < n; ++i) {
    if (!d.converged[i] || d.values[i] >= 0.0) continue;
    if (d.values[i] >= -cfg.clamp) {
      d.max_clamp = std::max(d.max_clamp, -d.values[i]);
      d.values[i] = 0.0;
      ++d.clamped;
    } else {
      d.converged[i] = false;
    }
  }
  if (d.clamped > 0) {
    std::ostringstream msg;
    msg << d.clamped << " density values in [-" << cfg.clamp << ", 0) clamped to 0";
    d.warnings.push_back(msg.str());
  }
  fill_failed(d);
  return d;
}

}  // namespace

DensityEstimate density_rplus(const EtaSource& src, double t, const std::vector<double>& grid,
                              const Singularities& singular, const RecoverConfig& cfg) {
  if (src.space() != Space::HalfLine) throw Error(ErrorCode::WrongSpace, "half-line density");
  std::vector<double> scales(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    if (!(x > 0.0) || (i > 0 && !(x > grid[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "density grid must be positive and increasing");
    }
    double s = std::min(1.0, x);
    for (const auto& a : singular.atoms) {
      if (x != a.location) s = std::min(s, std::abs(x - a.location));
    }
    for (double p : singular.points) {
      if (x != p) s = std::min(s, std::abs(x - p));
    }
    scales[i] = s;
  }
  return recover_density(src, Space::HalfLine, grid, scales, cfg, [&](std::size_t i) {
    const double x = grid[i];
    const double s = scales[i];
    return [&singular, x, s, solver = PathSolver(src, t, cfg.solver)](int k) mutable {
      const double y = s * std::ldexp(1.0, -k);
      const cplx u = 1.0 / cplx{x, -y};
      const cplx c = solver.advance(u).one_minus_eta_t;
      double v = (u / c).imag();
      for (const auto& a : singular.atoms) {
        const double dx = x - a.location;
        v -= a.mass * y / (dx * dx + y * y);
      }
      return cplx{v / kPi, 0.0};
    };
  });
}

DensityEstimate density_circle(const EtaSource& src, double t, const std::vector<double>& grid,
                               const Singularities& singular, const RecoverConfig& cfg) {
  if (src.space() != Space::Circle) throw Error(ErrorCode::WrongSpace, "circle density");
  std::vector<double> scales(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] < kTwoPi) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "circle grid must be increasing in [0, 2pi)");
    }
    double s = 1.0;
    for (const auto& a : singular.atoms) {
      const double dist = angle_distance(grid[i], a.location);
      if (dist > 0.0) s = std::min(s, dist);
    }
    for (double p : singular.points) {
      const double dist = angle_distance(grid[i], p);
      if (dist > 0.0) s = std::min(s, dist);
    }
    scales[i] = s;
  }
  return recover_density(src, Space::Circle, grid, scales, cfg, [&](std::size_t i) {
    const cplx dir = std::polar(1.0, -grid[i]);
    const double s = scales[i];
    return [&singular, dir, s, solver = PathSolver(src, t, cfg.solver)](int k) mutable {
      const double gap = s * std::ldexp(1.0, -k);
      const cplx z = dir * (1.0 - gap);
      const cplx c = solver.advance(z).one_minus_eta_t;
      double v = (2.0 / c).real() - 1.0;
      const double r = 1.0 - gap;
      for (const auto& a : singular.atoms) {
        v -= a.mass * (1.0 - r * r) / std::norm(1.0 - z * std::polar(1.0, a.location));
      }
      return cplx{v, 0.0};
    };
  });
}

BoundaryValue boundary_eta_t(const EtaSource& src, double t, cplx zeta,
                             const RecoverConfig& cfg) {
  Approach f(src, t, cfg.solver, zeta);
  return boundary_value([&f](cplx u) { return f(u); }, 1.0, src.space(), cfg.boundary);
}

AtomReport detect_atoms(const EtaSource& src, double t, double lo, double hi,
                        const RecoverConfig& cfg) {
  if (!(cfg.scan_resolution > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "scan resolution must be positive");
  }
  const Space space = src.space();
  if (space == Space::HalfLine && !(lo > 0.0 && hi > lo)) {
    throw Error(ErrorCode::InvalidArgument, "half-line scan range must satisfy 0 < lo < hi");
  }
  AtomReport report;
  report.scan_resolution = cfg.scan_resolution;
  const std::vector<double> ps = scan_parameters(space, lo, hi, cfg.scan_resolution);
  const std::size_t n = ps.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  parallel_for(n, cfg.threads, [&](std::size_t j) {
    try {
      dist[j] = std::abs(probe_scan(src, t, ps[j], cfg.solver) - 1.0);
    } catch (const Error&) {
    }
  });

  // Runs of consecutive candidates; on the circle a run may wrap around.
  std::vector<std::vector<std::size_t>> runs;
  std::size_t start = 0;
  if (space == Space::Circle) {
    while (start < n && dist[start] < cfg.candidate_tol) ++start;
    if (start == n) start = 0;
  }
  std::vector<std::size_t> current;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t j = (start + step) % n;
    if (dist[j] < cfg.candidate_tol) {
      current.push_back(j);
    } else if (!current.empty()) {
      runs.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) runs.push_back(std::move(current));

  const double step_size = space == Space::HalfLine ? 0.0 : kTwoPi / static_cast<double>(n);
  for (const auto& run : runs) {
    std::size_t best = run.front();
    for (std::size_t j : run) {
      if (dist[j] < dist[best]) best = j;
    }
    double center = ps[best];
    double a;
    double b;
    if (space == Space::HalfLine) {
      a = ps[best > 0 ? best - 1 : 0];
      b = ps[std::min(best + 1, n - 1)];
    } else {
      a = center - step_size;
      b = center + step_size;
    }
    const Refined r = refine(src, t, a, b, center, cfg);
    const double location = atom_location(space, r.p);
    if (!r.ok) {
      report.rejected.push_back({location, "boundary value did not converge"});
      continue;
    }
    const double residual = std::abs(r.limit - 1.0);
    if (!(residual < cfg.atom_tol)) {
      report.rejected.push_back({location, "|eta - 1| = " + std::to_string(residual)});
      continue;
    }
    const cplx zeta = boundary_point(space, r.p);
    Approach f(src, t, cfg.solver, zeta);
    JcDerivative jc;
    try {
      jc = jc_derivative([&f](cplx u) { return f(u); }, 1.0, r.limit, space, cfg.boundary);
    } catch (const Error&) {
      report.rejected.push_back({location, "difference quotient did not settle"});
      continue;
    }
    if (jc.infinite) {
      report.rejected.push_back({location, "infinite angular derivative"});
      continue;
    }
    // jc.value is d/du eta_t(zeta u) at u = 1, i.e. zeta eta_t'(zeta).
    const cplx inverse_mass = jc.value;
    double mass = (1.0 / inverse_mass).real();
    if (std::abs(inverse_mass.imag()) > 1e-6 * std::abs(inverse_mass)) {
      report.rejected.push_back({location, "angular derivative is not real"});
      continue;
    }
    if (mass > 1.0 && mass <= 1.0 + 1e-6) mass = 1.0;
    if (!(mass > 0.0 && mass <= 1.0)) {
      report.rejected.push_back({location, "mass " + std::to_string(mass) + " outside (0, 1]"});
      continue;
    }
    const bool duplicate = std::any_of(report.atoms.begin(), report.atoms.end(), [&](const auto& x) {
      return space == Space::HalfLine ? std::abs(x.location - location) <= 1e-8 * location
                                      : angle_distance(x.location, location) <= 1e-8;
    });
    if (duplicate) continue;
    report.atoms.push_back({location, mass, jc.value / zeta, residual});
  }
  std::sort(report.atoms.begin(), report.atoms.end(),
            [](const auto& x, const auto& y) { return x.location < y.location; });
  return report;
}

MassAtZero mass_at_zero(const EtaSource& src, double t, const RecoverConfig& cfg) {
  if (src.space() != Space::HalfLine) throw Error(ErrorCode::WrongSpace, "mass at zero");
  PathSolver solver(src, t, cfg.solver);
  // omega_t(z) grows like z^(1/t), so the error expands in powers of z^(-1/t).
  Richardson table(8, std::exp2(1.0 / t));
  std::vector<double> raw;
  MassAtZero out;
  bool settled = false;
  for (int k = 0; k <= 40; ++k) {
    const double e = solver.advance(cplx{-std::ldexp(1.0, k), 0.0}).eta_t.real();
    const double m = 1.0 / (1.0 - e);
    raw.push_back(m);
    table.push(m);
    out.levels = k + 1;
    if (table.size() >= 4 && table.latest_error() <= 1e-10) {
      out.mass = table.latest_estimate().real();
      out.error = table.latest_error();
      settled = true;
      break;
    }
  }
  if (!settled) {
    // Slow (fractional-power) approach: Aitken on the raw tail.
    const std::size_t n = raw.size();
    const double d1 = raw[n - 2] - raw[n - 3];
    const double d2 = raw[n - 1] - raw[n - 2];
    if (std::abs(d2) < std::abs(d1) && std::abs(d2) < 1e-6) {
      out.mass = d1 != d2 ? raw[n - 1] - d2 * d2 / (d2 - d1) : raw[n - 1];
      out.error = std::abs(out.mass - raw[n - 1]);
    } else if (raw.back() < 1e-9 && raw.back() < raw[n - 2]) {
      out.mass = 0.0;
      out.error = raw.back();
    } else {
      throw Error(ErrorCode::NoConvergence, "ray limit of eta_t did not settle");
    }
  }
  if (out.mass < 1e-9) {
    out.mass = 0.0;
    out.diverges = true;
    out.limit = -std::numeric_limits<double>::infinity();
  } else {
    out.mass = std::min(out.mass, 1.0);
    out.limit = 1.0 - 1.0 / out.mass;
  }
  return out;
}

AssembledMeasure assemble_measure(const AtomReport& atoms, const DensityEstimate& density,
                                  double zero_mass, Space space) {
  std::vector<PointMass> pts;
  double atom_mass = 0.0;
  for (const auto& a : atoms.atoms) {
    pts.push_back({a.location, a.mass});
    atom_mass += a.mass;
  }
  if (zero_mass > 0.0) {
    if (space != Space::HalfLine) throw Error(ErrorCode::WrongSpace, "mass at zero on the circle");
    pts.push_back({0.0, zero_mass});
  }
  double density_mass = 0.0;
  std::optional<DensityPart> part;
  if (!density.grid.empty()) {
    DensityPart d{density.grid, density.values};
    density_mass = density_integral(d, space);
    if (density_mass > 0.0) part = std::move(d);
  }
  const double total = atom_mass + zero_mass + density_mass;
  if (!(total >= 0.99 && total <= 1.01)) {
    std::ostringstream msg;
    msg << "total mass " << total << " (atoms " << atom_mass << ", zero " << zero_mass
        << ", density " << density_mass << ") outside [0.99, 1.01]";
    throw Error(ErrorCode::MassAuditFailure, msg.str());
  }
  double scale = 1.0;
  if (part) {
    scale = std::max(0.0, (1.0 - atom_mass - zero_mass) / density_mass);
    for (double& v : part->values) v *= scale;
  }
  Measure m = Measure::make(space, std::move(pts), std::move(part));
  return {std::move(m), atom_mass, density_mass, zero_mass, total, scale};
}

Singularities singularities_of(const AtomReport& atoms, double zero_mass) {
  Singularities s;
  for (const auto& a : atoms.atoms) s.atoms.push_back({a.location, a.mass});
  if (zero_mass > 0.0) s.atoms.push_back({0.0, zero_mass});
  for (const auto& c : atoms.rejected) s.points.push_back(c.location);
  return s;
}

namespace {

// x^t for the positive atoms x of m: the only places where mu_t can carry an
// atom, and where its density may blow up when it does not.
std::vector<double> atom_images(const Measure& m, double t) {
  std::vector<double> out;
  for (const auto& a : m.atoms()) {
    if (a.location > 0.0) out.push_back(std::pow(a.location, t));
  }
  return out;
}

double density_mass_of(const DensityEstimate& d) {
  return d.grid.empty() ? 0.0 : density_integral(DensityPart{d.grid, d.values}, d.space);
}

constexpr double kEdgeLevel = 1e-8;
constexpr double kBandPeak = 1e-6;
constexpr int kEdgeBisections = 60;
constexpr double kDeepFloor = 1e-30;
constexpr double kDeepRatio = 1e-3;
constexpr int kDeepPoints = 1200;
constexpr double kAtomClearance = 1e-9;

// Ends of the intervals where the recovered density vanishes, located by
// bisection between adjacent grid points on opposite sides of kEdgeLevel.
// Only bands whose peak exceeds kBandPeak count; lower bumps are noise.
std::vector<double> support_edges(const EtaSource& src, double t, const DensityEstimate& d,
                                  const Singularities& singular, const RecoverConfig& cfg) {
  const Space space = d.space;
  const std::size_t n = d.grid.size();
  RecoverConfig one = cfg;
  one.threads = 1;
  auto positive_at = [&](double x) -> std::optional<bool> {
    const double at = space == Space::Circle ? wrap_angle(x) : x;
    const DensityEstimate e = space == Space::HalfLine ? density_rplus(src, t, {at}, singular, one)
                                                       : density_circle(src, t, {at}, singular, one);
    if (!e.converged[0]) return std::nullopt;
    return e.values[0] > kEdgeLevel;
  };
  // Peak of the band of values above kEdgeLevel that contains each point.
  std::vector<double> peak(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    double top = 0.0;
    while (j < n && d.values[j] > kEdgeLevel) top = std::max(top, d.values[j++]);
    for (std::size_t k = i; k < j; ++k) peak[k] = top;
    i = j == i ? i + 1 : j;
  }
  if (space == Space::Circle && n > 0 && peak.front() > 0.0 && peak.back() > 0.0) {
    const double top = std::max(peak.front(), peak.back());
    for (std::size_t k = 0; k < n && d.values[k] > kEdgeLevel; ++k) peak[k] = top;
    for (std::size_t k = n; k-- > 0 && d.values[k] > kEdgeLevel;) peak[k] = top;
  }
  std::vector<std::size_t> brackets;
  const std::size_t pairs = space == Space::Circle ? n : n - 1;
  for (std::size_t i = 0; n >= 2 && i < pairs; ++i) {
    const std::size_t j = (i + 1) % n;
    if (!d.converged[i] || !d.converged[j]) continue;
    if ((d.values[i] > kEdgeLevel) == (d.values[j] > kEdgeLevel)) continue;
    if (std::max(peak[i], peak[j]) > kBandPeak) brackets.push_back(i);
  }
  std::vector<double> edges(brackets.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(brackets.size(), cfg.threads, [&](std::size_t b) {
    const std::size_t i = brackets[b];
    double lo = d.grid[i];
    double hi = i + 1 < n ? d.grid[i + 1] : d.grid[0] + kTwoPi;
    const bool lo_positive = d.values[i] > kEdgeLevel;
    for (int it = 0; it < kEdgeBisections; ++it) {
      if (hi - lo <= 1e-13 * std::max(1.0, std::abs(lo))) break;
      const double mid = 0.5 * (lo + hi);
      std::optional<bool> p;
      try {
        p = positive_at(mid);
      } catch (const Error&) {
      }
      if (!p) break;
      (*p == lo_positive ? lo : hi) = mid;
    }
    edges[b] = 0.5 * (lo + hi);
  });
  std::vector<double> out;
  for (double e : edges) {
    if (std::isfinite(e)) out.push_back(space == Space::Circle ? wrap_angle(e) : e);
  }
  return out;
}

}  // namespace

std::vector<double> auto_density_grid(const Measure& m, double t, const AtomReport& atoms,
                                      int count, const std::vector<double>& extra,
                                      const DensityEstimate* previous) {
  std::vector<double> breaks = extra;
  if (m.space() == Space::HalfLine) {
    for (double x : atom_images(m, t)) breaks.push_back(x);
  }
  for (const auto& a : atoms.atoms) breaks.push_back(a.location);
  for (const auto& c : atoms.rejected) breaks.push_back(c.location);
  // Idle: the previous pass saw no density inside the segment.
  std::function<bool(double, double)> idle;
  if (previous && !previous->grid.empty()) {
    idle = [previous, circle = m.space() == Space::Circle](double a, double b) {
      bool seen = false;
      for (std::size_t i = 0; i < previous->grid.size(); ++i) {
        const double x = previous->grid[i];
        const double offset = circle ? wrap_angle(x - a) : x - a;
        if (!(offset > 0.0 && offset < b - a)) continue;
        if (previous->values[i] > kEdgeLevel) return false;
        seen = true;
      }
      return seen;
    };
  }
  // Grid points are kept at least kAtomClearance away from detected atoms.
  std::vector<double> holes;
  for (const auto& a : atoms.atoms) holes.push_back(a.location);
  auto clear_of_atoms = [&](std::vector<double> g) {
    std::erase_if(g, [&](double x) {
      return std::any_of(holes.begin(), holes.end(), [&](double h) {
        const double gap = m.space() == Space::Circle ? std::abs(wrap_angle(x - h + kPi) - kPi)
                                                      : std::abs(x - h);
        return gap < kAtomClearance * std::max(1.0, std::abs(h));
      });
    });
    return g;
  };
  if (m.space() == Space::Circle) {
    return clear_of_atoms(break_point_grid(Space::Circle, breaks, count, idle));
  }
  const Hull h = support_hull(m);
  const double lo = h.lo > 0.0 ? std::pow(h.lo, t) : 0.0;
  const double hi = std::pow(h.hi, t);
  if (!(hi > lo * (1.0 + 1e-12))) return {};
  std::vector<double> inside{lo, hi};
  for (double b : breaks) {
    if (b > lo * (1.0 + 1e-8) && b < hi * (1.0 - 1e-8)) inside.push_back(b);
  }
  const bool zero_atom = std::any_of(m.atoms().begin(), m.atoms().end(),
                                     [](const auto& a) { return a.location == 0.0 && a.mass > 0.0; });
  if (lo > 0.0 || !zero_atom) return clear_of_atoms(break_point_grid(Space::HalfLine, inside, count, idle));
  // Mass at 0: geometric run from kDeepFloor up to kDeepRatio times the first break.
  std::sort(inside.begin(), inside.end());
  const double first = inside[1];
  inside[0] = first * kDeepRatio;
  std::vector<double> g = geometric_grid(first * kDeepFloor, first * kDeepRatio, kDeepPoints);
  g.pop_back();
  for (double x : break_point_grid(Space::HalfLine, inside, count, idle)) g.push_back(x);
  return clear_of_atoms(std::move(g));
}

SemigroupResult compute_semigroup(const Measure& m, double t, const RecoverConfig& cfg,
                                  const std::optional<std::vector<double>>& grid) {
  if (!(t >= 1.0)) throw Error(ErrorCode::InvalidArgument, "semigroup parameter must be >= 1");
  const MeasureEta src(m);
  const Space space = m.space();
  MassAtZero zero;
  AtomReport atoms;
  if (space == Space::HalfLine) {
    const Hull h = support_hull(m);
    const double hi = std::pow(h.hi, t) * 1.05;
    const double lo = h.lo > 0.0 ? std::pow(h.lo, t) / 1.05 : hi * 1e-6;
    zero = mass_at_zero(src, t, cfg);
    atoms = detect_atoms(src, t, lo, hi, cfg);
  } else {
    atoms = detect_atoms(src, t, 0.0, kTwoPi, cfg);
  }
  Singularities singular = singularities_of(atoms, zero.mass);
  if (space == Space::HalfLine) {
    // The density may blow up at the ends of the support.
    const Hull h = support_hull(m);
    if (h.lo > 0.0) singular.points.push_back(std::pow(h.lo, t));
    singular.points.push_back(std::pow(h.hi, t));
    for (double x : atom_images(m, t)) singular.points.push_back(x);
  }
  auto recover = [&](const std::vector<double>& g) {
    return space == Space::HalfLine ? density_rplus(src, t, g, singular, cfg)
                                    : density_circle(src, t, g, singular, cfg);
  };
  DensityEstimate density;
  if (grid) {
    density = recover(*grid);
  } else {
    density = recover(auto_density_grid(m, t, atoms, cfg.grid_points));
    const std::vector<double> edges = support_edges(src, t, density, singular, cfg);
    if (!edges.empty()) {
      Singularities refined_singular = singular;
      for (double e : edges) refined_singular.points.push_back(e);
      const std::vector<double> g = auto_density_grid(m, t, atoms, cfg.grid_points, edges, &density);
      DensityEstimate refined = space == Space::HalfLine
                                    ? density_rplus(src, t, g, refined_singular, cfg)
                                    : density_circle(src, t, g, refined_singular, cfg);
      double target = 1.0 - zero.mass;
      for (const auto& a : atoms.atoms) target -= a.mass;
      const double before = std::abs(density_mass_of(density) - target);
      const double after = std::abs(density_mass_of(refined) - target);
      if (after <= before) density = std::move(refined);
    }
  }
  AssembledMeasure assembled = assemble_measure(atoms, density, zero.mass, space);
  return SemigroupResult{t, space, std::move(atoms), zero, std::move(density), std::move(assembled)};
}

std::string density_csv(const DensityEstimate& d) {
  std::string out = d.space == Space::HalfLine ? "x,value,extrapolation_error\n"
                                               : "theta,value,extrapolation_error\n";
  char line[128];
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.6g\n", d.grid[i], d.values[i], d.errors[i]);
    out += line;
  }
  return out;
}

std::string atom_report_json(const AtomReport& r, Space space) {
  nlohmann::ordered_json doc;
  doc["space"] = std::string(to_string(space));
  doc["atoms"] = nlohmann::ordered_json::array();
  for (const auto& a : r.atoms) {
    doc["atoms"].push_back({{"location", a.location},
                            {"mass", a.mass},
                            {"jc_derivative", {a.jc_derivative.real(), a.jc_derivative.imag()}},
                            {"residual", a.residual}});
  }
  doc["rejected"] = nlohmann::ordered_json::array();
  for (const auto& c : r.rejected) {
    doc["rejected"].push_back({{"location", c.location}, {"reason", c.reason}});
  }
  doc["scan_resolution"] = r.scan_resolution;
  return doc.dump(2);
}

}  // namespace freemul
