#include "freemul/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "freemul/error.hpp"
#include "freemul/extrapolate.hpp"
#include "freemul/parallel.hpp"
#include "freemul/transform.hpp"

namespace freemul {

namespace {

// Integral of the linear interpolant of (x0, f0), (x1, f1) over [lo, hi].
double linear_piece(double x0, double f0, double x1, double f1, double lo, double hi) {
  lo = std::max(lo, x0);
  hi = std::min(hi, x1);
  if (!(hi > lo)) return 0.0;
  const double slope = (f1 - f0) / (x1 - x0);
  const double flo = f0 + slope * (lo - x0);
  const double fhi = f0 + slope * (hi - x0);
  return 0.5 * (flo + fhi) * (hi - lo);
}

double ccw_length(double alpha1, double alpha2) {
  const double l = wrap_angle(alpha2 - alpha1);
  return l == 0.0 ? kTwoPi : l;
}

bool same_location(Space space, double a, double b) {
  if (space == Space::HalfLine) return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
  const double d = std::abs(wrap_angle(a - b));
  return std::min(d, kTwoPi - d) <= 1e-12;
}

void check_consistency(const Measure& mu_t, const AtomReport& atoms) {
  for (const auto& a : atoms.atoms) {
    const bool found = std::any_of(mu_t.atoms().begin(), mu_t.atoms().end(), [&](const auto& p) {
      return same_location(mu_t.space(), p.location, a.location);
    });
    if (!found) {
      throw Error(ErrorCode::InconsistentRun, "atom report does not match the assembled measure");
    }
  }
}

struct Boundary {
  cplx eta;
  cplx omega;
};

// Radial limits of eta_t and omega_t at e^{i theta}.
Boundary boundary_pair(const EtaSource& src, double t, double theta, const RecoverConfig& cfg) {
  const cplx zeta = std::polar(1.0, theta);
  PathSolver solver(src, t, cfg.solver);
  Richardson eta_table;
  Richardson omega_table;
  for (int k = cfg.boundary.k_min; k <= cfg.boundary.k_max; ++k) {
    const OmegaResult& r = solver.advance(approach_point(zeta, Space::Circle, k));
    eta_table.push(r.eta_t);
    omega_table.push(r.omega);
    if (eta_table.size() >= 3 && eta_table.latest_error() <= cfg.boundary.tol &&
        omega_table.latest_error() <= cfg.boundary.tol) {
      return {eta_table.latest_estimate(), omega_table.latest_estimate()};
    }
  }
  throw Error(ErrorCode::NoConvergence, "boundary values on the arc did not settle");
}

double argument_increment(const Transformer& tr, double radius, double a, double b, cplx fa,
                          cplx fb, int depth, ZeroCount& out) {
  const double step = std::arg(fb / fa);
  if (std::abs(step) <= 0.3 || depth == 0) return step;
  const double mid = 0.5 * (a + b);
  const cplx z = std::polar(radius, mid);
  const cplx fm = tr.psi(z).value / z;
  ++out.samples;
  out.min_modulus = std::min(out.min_modulus, std::abs(fm));
  return argument_increment(tr, radius, a, mid, fa, fm, depth - 1, out) +
         argument_increment(tr, radius, mid, b, fm, fb, depth - 1, out);
}

}  // namespace

ZeroCount eta_zero_count(const Measure& m, double radius) {
  if (m.space() != Space::Circle) throw Error(ErrorCode::WrongSpace, "zero count");
  if (!(radius > 0.0 && radius < 1.0)) throw Error(ErrorCode::InvalidArgument, "radius in (0, 1)");
  const Transformer tr(m);
  ZeroCount out;
  out.radius = radius;
  out.min_modulus = std::numeric_limits<double>::infinity();
  constexpr int kCoarse = 2048;
  std::vector<cplx> f(kCoarse + 1);
  for (int j = 0; j < kCoarse; ++j) {
    const cplx z = std::polar(radius, kTwoPi * j / kCoarse);
    f[j] = tr.psi(z).value / z;
    out.min_modulus = std::min(out.min_modulus, std::abs(f[j]));
  }
  f[kCoarse] = f[0];
  out.samples = kCoarse;
  double total = 0.0;
  for (int j = 0; j < kCoarse; ++j) {
    total += argument_increment(tr, radius, kTwoPi * j / kCoarse, kTwoPi * (j + 1) / kCoarse,
                                f[j], f[j + 1], 30, out);
  }
  out.zeros = static_cast<int>(std::lround(total / kTwoPi));
  return out;
}

double winding_combination(double t, double dg, double dtheta) {
  return (1.0 - 1.0 / t) * dg + dtheta / t;
}

double interval_mass(const Measure& m, double a, double b) {
  if (m.space() != Space::HalfLine) throw Error(ErrorCode::WrongSpace, "interval mass");
  if (!m.density()) return 0.0;
  const auto& d = *m.density();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < d.grid.size(); ++i) {
    total += linear_piece(d.grid[i], d.values[i], d.grid[i + 1], d.values[i + 1], a, b);
  }
  return total;
}

double arc_mass(const Measure& m, double alpha1, double alpha2) {
  if (m.space() != Space::Circle) throw Error(ErrorCode::WrongSpace, "arc mass");
  if (!m.density()) return 0.0;
  const auto& d = *m.density();
  const std::size_t n = d.grid.size();
  const double lo = wrap_angle(alpha1);
  const double hi = lo + ccw_length(alpha1, alpha2);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = d.grid[i];
    const double x1 = i + 1 < n ? d.grid[i + 1] : d.grid[0] + kTwoPi;
    const double f1 = d.values[(i + 1) % n];
    for (int shift = -1; shift <= 1; ++shift) {
      total += linear_piece(x0 + shift * kTwoPi, d.values[i], x1 + shift * kTwoPi, f1, lo, hi);
    }
  }
  return total / kTwoPi;
}

std::vector<GapReport> check_gap_mass(const Measure& mu_t, const AtomReport& atoms,
                                      double zero_mass, const RegularityConfig& cfg,
                                      const BoundaryEta& eta) {
  if (mu_t.space() != Space::HalfLine) throw Error(ErrorCode::WrongSpace, "gap check");
  check_consistency(mu_t, atoms);
  if (zero_mass > 0.0) {
    const bool found = std::any_of(mu_t.atoms().begin(), mu_t.atoms().end(),
                                   [](const auto& p) { return p.location == 0.0; });
    if (!found) throw Error(ErrorCode::InconsistentRun, "mass at zero missing from the measure");
  }
  std::vector<double> points;
  if (zero_mass > 0.0) points.push_back(0.0);
  for (const auto& a : atoms.atoms) points.push_back(a.location);
  std::sort(points.begin(), points.end());

  std::vector<GapReport> out;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    GapReport g;
    g.a = points[i];
    g.b = points[i + 1];
    g.interior_mass = interval_mass(mu_t, g.a, g.b);
    g.min_density_sample = std::numeric_limits<double>::infinity();
    if (mu_t.density()) {
      const auto& d = *mu_t.density();
      for (std::size_t j = 0; j < d.grid.size(); ++j) {
        if (d.grid[j] > g.a && d.grid[j] < g.b) {
          g.min_density_sample = std::min(g.min_density_sample, d.values[j]);
        }
      }
    }
    if (!std::isfinite(g.min_density_sample)) g.min_density_sample = 0.0;

    if (eta && cfg.eta_samples > 0) {
      // z runs over (1/b, 1/a); for a = 0 the upper end is taken far out.
      const double z_lo = 1.0 / g.b;
      const double z_hi = g.a > 0.0 ? 1.0 / g.a : 1e6 / g.b;
      std::optional<double> previous;
      for (int j = 0; j < cfg.eta_samples; ++j) {
        const double s = (j + 0.5) / cfg.eta_samples;
        const double z = std::exp(std::log(z_lo) + (std::log(z_hi) - std::log(z_lo)) * s);
        ++g.eta_samples;
        const std::optional<cplx> v = eta(cplx{z, 0.0});
        if (!v || std::abs(v->imag()) > 1e-9 * std::max(1.0, std::abs(*v))) {
          previous.reset();
          continue;
        }
        ++g.eta_real_samples;
        if (previous && v->real() < *previous - 1e-12 * std::max(1.0, std::abs(*previous))) {
          ++g.eta_monotonicity_violations;
        }
        previous = v->real();
      }
    }
    g.pass = g.interior_mass > cfg.mass_floor;
    out.push_back(g);
  }
  return out;
}

std::vector<double> unwrap_arguments(const std::vector<double>& raw) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i == 0) {
      out[i] = raw[i];
      continue;
    }
    out[i] = unwrap_against(raw[i], out[i - 1]);
    if (std::abs(out[i] - out[i - 1]) >= kPi) {
      throw Error(ErrorCode::UnwrapFailure, "adjacent arguments differ by pi or more");
    }
  }
  return out;
}

WindingReport arc_winding(const EtaSource& src, double t, double theta1, double theta2,
                          int samples, const RecoverConfig& cfg) {
  if (src.space() != Space::Circle) throw Error(ErrorCode::WrongSpace, "arc winding");
  if (samples < 64) throw Error(ErrorCode::InvalidArgument, "arc winding needs >= 64 samples");
  if (!(theta2 > theta1) || theta2 - theta1 > kTwoPi) {
    throw Error(ErrorCode::InvalidArgument, "arc must satisfy theta1 < theta2 <= theta1 + 2pi");
  }
  WindingReport w;
  w.theta1 = theta1;
  w.theta2 = theta2;
  w.theta.resize(samples);
  std::vector<Boundary> values(samples);
  for (int j = 0; j < samples; ++j) {
    w.theta[j] = theta1 + (theta2 - theta1) * j / (samples - 1);
  }
  parallel_for(static_cast<std::size_t>(samples), cfg.threads, [&](std::size_t j) {
    values[j] = boundary_pair(src, t, w.theta[j], cfg);
  });
  std::vector<double> g_raw(samples);
  std::vector<double> h_raw(samples);
  for (int j = 0; j < samples; ++j) {
    g_raw[j] = std::arg(values[j].eta);
    h_raw[j] = std::arg(values[j].omega);
    w.max_modulus_defect = std::max(w.max_modulus_defect, std::abs(std::abs(values[j].eta) - 1.0));
  }
  w.g = unwrap_arguments(g_raw);
  w.h = unwrap_arguments(h_raw);
  w.min_step = std::numeric_limits<double>::infinity();
  for (int j = 0; j + 1 < samples; ++j) w.min_step = std::min(w.min_step, w.g[j + 1] - w.g[j]);
  w.increment = w.g.back() - w.g.front();
  w.h_increment = w.h.back() - w.h.front();
  w.combined = winding_combination(t, w.increment, w.theta.back() - w.theta.front());
  w.winding_residual = std::abs(w.h_increment - w.combined);
  w.predicted_if_gap = winding_combination(t, kTwoPi, theta2 - theta1);
  w.monotone = w.min_step >= 0.0;
  return w;
}

std::vector<std::pair<double, double>> zero_mass_arcs(const DensityEstimate& d,
                                                      const AtomReport& atoms,
                                                      double zero_density) {
  std::vector<std::pair<double, double>> arcs;
  const std::size_t n = d.grid.size();
  if (n < 2) return arcs;
  auto atom_between = [&](std::size_t i) {
    const double x0 = d.grid[i];
    const double len = ccw_length(x0, d.grid[(i + 1) % n]);
    return std::any_of(atoms.atoms.begin(), atoms.atoms.end(), [&](const auto& a) {
      const double off = wrap_angle(a.location - x0);
      return off > 0.0 && off < len;
    }) || std::any_of(atoms.atoms.begin(), atoms.atoms.end(), [&](const auto& a) {
      return same_location(Space::Circle, a.location, x0);
    });
  };
  auto empty = [&](std::size_t i) { return d.values[i] <= zero_density; };
  // Start right after a break so that no run is split by the wrap-around.
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i + n - 1) % n;
    if (!empty(i) || !empty(prev) || atom_between(prev)) {
      start = i;
      break;
    }
  }
  if (start == n) return arcs;  // no break at all: nothing sensible to report
  std::vector<std::size_t> run;
  auto flush = [&] {
    if (run.size() >= 8) {
      const double a1 = d.grid[run.front()];
      const double len = ccw_length(a1, d.grid[run.back()]);
      if (len >= 1e-3) arcs.emplace_back(wrap_angle(a1 + 0.02 * len), wrap_angle(a1 + 0.98 * len));
    }
    run.clear();
  };
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t i = (start + step) % n;
    if (empty(i)) {
      run.push_back(i);
      if (atom_between(i)) flush();
    } else {
      flush();
    }
  }
  flush();
  return arcs;
}

RegularityReport verify_regularity(const Measure& m, double t, const RegularityConfig& cfg,
                                   const std::optional<std::vector<double>>& grid) {
  if (!(t > 1.0)) throw Error(ErrorCode::InvalidArgument, "regularity needs t > 1");
  RegularityReport rep;
  rep.space = m.space();
  rep.t = t;
  SemigroupResult res = compute_semigroup(m, t, cfg.recover, grid);
  rep.stages.push_back("recover: ok");
  for (const auto& w : res.density.warnings) rep.warnings.push_back(w);

  Measure mu_t = res.assembled.measure;
  AtomReport atoms = res.atoms;
  double zero_mass = res.zero.mass;
  rep.audit_total = res.assembled.raw_total;

  const MeasureEta semigroup_src(m);
  std::optional<MeasureEta> synthetic_src;
  double eta_t_param = t;
  if (cfg.inject_gap) {
    // Negative control: remove all density between the outermost atoms.
    std::vector<double> locs;
    for (const auto& a : atoms.atoms) locs.push_back(a.location);
    std::vector<PointMass> pts = mu_t.atoms();
    std::optional<DensityPart> dens = mu_t.density();
    if (dens && locs.size() >= 2) {
      for (std::size_t i = 0; i < dens->grid.size(); ++i) {
        const double x = dens->grid[i];
        const bool inside = m.space() == Space::HalfLine ? (x > locs.front() && x < locs.back())
                                                         : true;
        if (inside) dens->values[i] = 0.0;
      }
    }
    double total = 0.0;
    for (const auto& p : pts) total += p.mass;
    if (dens) total += density_integral(*dens, m.space());
    for (auto& p : pts) p.mass /= total;
    if (dens) {
      for (double& v : dens->values) v /= total;
      if (density_integral(*dens, m.space()) == 0.0) dens.reset();
    }
    mu_t = Measure::make(m.space(), pts, dens);
    for (auto& a : atoms.atoms) a.mass /= total;
    zero_mass /= total;
    synthetic_src.emplace(mu_t);
    eta_t_param = 1.0;
    rep.stages.push_back("inject-gap: density between atoms removed");
  }
  const EtaSource& src = synthetic_src ? static_cast<const EtaSource&>(*synthetic_src)
                                       : static_cast<const EtaSource&>(semigroup_src);
  rep.atoms = atoms.atoms;
  rep.zero_mass = zero_mass;

  bool pass = true;
  if (m.space() == Space::HalfLine) {
    const RecoverConfig rc = cfg.recover;
    BoundaryEta eta = [&src, eta_t_param, rc](cplx z) -> std::optional<cplx> {
      try {
        return boundary_eta_t(src, eta_t_param, z, rc).limit;
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    rep.gaps = check_gap_mass(mu_t, atoms, zero_mass, cfg, eta);
    for (const auto& g : rep.gaps) pass = pass && g.pass;
    rep.stages.push_back("gaps: " + std::to_string(rep.gaps.size()) + " checked");
  } else {
    check_consistency(mu_t, atoms);
    rep.eta_zeros = eta_zero_count(m);
    const bool hypothesis = rep.eta_zeros->zeros == 0;
    if (!hypothesis) {
      rep.warnings.push_back("eta of the input has " + std::to_string(rep.eta_zeros->zeros) +
                             " zero(s) in the disk; arc masses are reported but not asserted");
    }
    const auto& list = atoms.atoms;
    if (list.size() >= 2) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        ArcCheck a;
        a.alpha1 = list[i].location;
        a.alpha2 = list[(i + 1) % list.size()].location;
        a.interior_mass = arc_mass(mu_t, a.alpha1, a.alpha2);
        a.pass = a.interior_mass > cfg.mass_floor;
        if (hypothesis) pass = pass && a.pass;
        rep.arcs.push_back(a);
      }
    }
    if (!cfg.inject_gap) {
      for (const auto& [a1, a2] : zero_mass_arcs(res.density, atoms, cfg.zero_density)) {
        // Locations alpha correspond to boundary points e^{-i alpha}.
        const double len = ccw_length(a1, a2);
        const double theta1 = -a1 - len;
        WindingReport w = arc_winding(src, t, theta1, theta1 + len, cfg.arc_samples, cfg.recover);
        pass = pass && w.min_step >= -cfg.monotone_slack && w.winding_residual <= cfg.winding_tol;
        rep.windings.push_back(std::move(w));
      }
    }
    if (t >= 2.0) {
      rep.at_most_one_atom = list.size() <= 1;
      pass = pass && *rep.at_most_one_atom;
    }
    rep.stages.push_back("arcs: " + std::to_string(rep.arcs.size()) + " checked, " +
                         std::to_string(rep.windings.size()) + " zero-mass arcs wound");
  }
  rep.pass = pass;
  return rep;
}

std::string regularity_json(const RegularityReport& r) {
  using json = nlohmann::ordered_json;
  json doc;
  doc["space"] = std::string(to_string(r.space));
  doc["t"] = r.t;
  doc["verdict"] = r.pass ? "PASS" : "FAIL";
  doc["stages"] = r.stages;
  doc["warnings"] = r.warnings;
  doc["atoms"] = json::array();
  for (const auto& a : r.atoms) doc["atoms"].push_back({{"location", a.location}, {"mass", a.mass}});
  doc["zero_mass"] = r.zero_mass;
  doc["audit_total"] = r.audit_total;
  doc["gaps"] = json::array();
  for (const auto& g : r.gaps) {
    doc["gaps"].push_back({{"atom_pair", {g.a, g.b}},
                           {"interior_mass", g.interior_mass},
                           {"min_density_sample", g.min_density_sample},
                           {"eta_samples", g.eta_samples},
                           {"eta_real_samples", g.eta_real_samples},
                           {"eta_monotonicity_violations", g.eta_monotonicity_violations},
                           {"verdict", g.pass ? "PASS" : "FAIL"}});
  }
  doc["arcs"] = json::array();
  for (const auto& a : r.arcs) {
    doc["arcs"].push_back({{"arc", {a.alpha1, a.alpha2}},
                           {"interior_mass", a.interior_mass},
                           {"verdict", a.pass ? "PASS" : "FAIL"}});
  }
  doc["windings"] = json::array();
  for (const auto& w : r.windings) {
    doc["windings"].push_back({{"arc", {w.theta1, w.theta2}},
                               {"samples", w.theta.size()},
                               {"increment", w.increment},
                               {"min_step", w.min_step},
                               {"monotone", w.monotone},
                               {"h_increment", w.h_increment},
                               {"combined", w.combined},
                               {"winding_residual", w.winding_residual},
                               {"predicted_if_gap", w.predicted_if_gap},
                               {"max_modulus_defect", w.max_modulus_defect}});
  }
  if (r.eta_zeros) {
    doc["eta_zeros"] = {{"zeros", r.eta_zeros->zeros},
                        {"radius", r.eta_zeros->radius},
                        {"min_modulus", r.eta_zeros->min_modulus},
                        {"samples", r.eta_zeros->samples}};
  }
  if (r.at_most_one_atom) {
    doc["at_most_one_atom"] = *r.at_most_one_atom;
  } else {
    doc["at_most_one_atom"] = nullptr;
  }
  return doc.dump(2);
}

std::string regularity_summary(const RegularityReport& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "space %s, t = %g: %zu atom(s), mass at zero %.6g\n",
                std::string(to_string(r.space)).c_str(), r.t, r.atoms.size(), r.zero_mass);
  out << line;
  for (const auto& g : r.gaps) {
    std::snprintf(line, sizeof line, "  gap (%.10g, %.10g): mass %.6e, eta violations %d  %s\n",
                  g.a, g.b, g.interior_mass, g.eta_monotonicity_violations,
                  g.pass ? "PASS" : "FAIL");
    out << line;
  }
  for (const auto& a : r.arcs) {
    std::snprintf(line, sizeof line, "  arc (%.10g, %.10g): mass %.6e  %s\n", a.alpha1, a.alpha2,
                  a.interior_mass, a.pass ? "PASS" : "FAIL");
    out << line;
  }
  for (const auto& w : r.windings) {
    std::snprintf(line, sizeof line,
                  "  zero-mass arc theta in (%.6g, %.6g): dg %.6g, min step %.3e, "
                  "winding residual %.3e\n",
                  w.theta1, w.theta2, w.increment, w.min_step, w.winding_residual);
    out << line;
  }
  if (r.eta_zeros) {
    std::snprintf(line, sizeof line, "  zeros of eta in |z| < %g: %d (min |psi/z| %.3e)\n",
                  r.eta_zeros->radius, r.eta_zeros->zeros, r.eta_zeros->min_modulus);
    out << line;
  }
  if (r.at_most_one_atom) {
    out << "  at most one atom: " << (*r.at_most_one_atom ? "yes" : "no") << "\n";
  }
  for (const auto& w : r.warnings) out << "  warning: " << w << "\n";
  out << (r.pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace freemul
