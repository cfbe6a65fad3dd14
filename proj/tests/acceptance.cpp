// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "freemul/error.hpp"
#include "freemul/measure.hpp"
#include "freemul/parallel.hpp"
#include "freemul/recover.hpp"
#include "freemul/regularity.hpp"
#include "freemul/series.hpp"
#include "freemul/subordination.hpp"
#include "freemul/transform.hpp"
#include "oracles.hpp"

using namespace freemul;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Named {
  std::string name;
  Measure measure;
};

Measure half(std::vector<PointMass> atoms) { return Measure::make(Space::HalfLine, atoms); }

Measure atom_uniform() {
  DensityPart d;
  for (int i = 0; i <= 100; ++i) {
    d.grid.push_back(1.0 + 0.02 * i);
    d.values.push_back(0.25);
  }
  return Measure::make(Space::HalfLine, {{0.5, 0.5}}, d);
}

std::vector<Named> half_line_suite() {
  return {
      {"delta_1", half({{1.0, 1.0}})},
      {"1/2 delta_1 + 1/2 delta_2", half({{1.0, 0.5}, {2.0, 0.5}})},
      {"1/2 delta_0 + 1/2 delta_1", half({{0.0, 0.5}, {1.0, 0.5}})},
      {"1/2 delta_1 + 1/2 delta_4", half({{1.0, 0.5}, {4.0, 0.5}})},
      {"three atoms", half({{0.5, 0.2}, {1.0, 0.5}, {3.0, 0.3}})},
      {"atom + uniform", atom_uniform()},
  };
}

Measure circle_atom_haar() {
  DensityPart d;
  for (int i = 0; i < 64; ++i) {
    d.grid.push_back(kTwoPi * i / 64);
    d.values.push_back(0.2);
  }
  return Measure::make(Space::Circle, {{0.0, 0.8}}, d);
}

Measure circle_trig(double sign) {
  DensityPart d;
  for (int i = 0; i < 128; ++i) {
    const double th = kTwoPi * i / 128;
    d.grid.push_back(th);
    d.values.push_back(1.0 + 0.8 * std::cos(sign * th - 1.0));
  }
  return Measure::make(Space::Circle, {}, d);
}

std::vector<Named> circle_suite() {
  return {
      {"circle delta_1", Measure::make(Space::Circle, {{1.0, 1.0}})},
      {"circle atom + Haar", circle_atom_haar()},
      {"circle two atoms", Measure::make(Space::Circle, {{0.4, 0.7}, {2.0, 0.3}})},
  };
}

const double kTimes[] = {1.25, 1.5, 2.0, 3.7};

std::vector<cplx> interior_points(unsigned seed) {
  std::vector<cplx> pts = oracle::upper_half_plane(150, seed);
  for (const cplx z : oracle::upper_half_plane(40, seed + 1)) pts.push_back(std::conj(z));
  for (int j = 0; j < 10; ++j) pts.push_back(-std::exp(-3.0 + 0.6 * j));
  return pts;
}

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Line {
  bool pass = false;
  std::string detail;
};

void report(int n, const Line& l) {
  std::printf("criterion %2d: %s  %s\n", n, l.pass ? "PASS" : "FAIL", l.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Criteria 1 and 2 share one solve per point.
struct SolveStats {
  double residual = 0.0;      // max |Phi_t(omega) - z| / max(1, |z|)
  double cross = 0.0;         // max |omega - eta_t [z/eta_t]^{1/t}|
  int failures = 0;
  int points = 0;
  double elapsed = 0.0;
  std::string first_failure;
};

SolveStats residual_suite() {
  SolveStats s;
  const auto t0 = Clock::now();
  const std::vector<cplx> pts = interior_points(101);
  for (const auto& [name, m] : half_line_suite()) {
    const MeasureEta src(m);
    for (double t : kTimes) {
      std::vector<double> res(pts.size(), 0.0);
      std::vector<double> cross(pts.size(), 0.0);
      std::vector<char> failed(pts.size(), 0);
      parallel_for(pts.size(), threads(), [&](std::size_t i) {
        const cplx z = pts[i];
        try {
          const OmegaResult r = solve_omega(src, t, z);
          BranchState b = initial_branch(src);
          res[i] = std::abs(phi_t(src, t, r.omega, b) - z) / std::max(1.0, std::abs(z));
          const cplx et = src.eta(r.omega).value;
          cross[i] = std::abs(r.omega - omega_via_formula(et, z, t, Space::HalfLine));
        } catch (const Error&) {
          failed[i] = 1;
        }
      });
      for (std::size_t i = 0; i < pts.size(); ++i) {
        ++s.points;
        if (failed[i]) {
          if (s.failures++ == 0) s.first_failure = name + fmt(" t=%g", t);
          continue;
        }
        s.residual = std::max(s.residual, res[i]);
        s.cross = std::max(s.cross, cross[i]);
      }
    }
  }
  s.elapsed = seconds_since(t0);
  return s;
}

double rel_moment_error(const std::vector<cplx>& got, const std::vector<cplx>& want) {
  double worst = 0.0;
  for (std::size_t k = 0; k < want.size(); ++k) {
    worst = std::max(worst, std::abs(got[k] - want[k]) / std::abs(want[k]));
  }
  return worst;
}

struct Computed {
  std::string name;
  double t = 1.0;
  Measure input;
  std::optional<SemigroupResult> result;
  std::string error;
};

std::vector<Computed> compute_all() {
  std::vector<Computed> out;
  RecoverConfig cfg;
  cfg.threads = threads();
  auto run = [&](const Named& n, double t) {
    Computed c{n.name, t, n.measure, std::nullopt, {}};
    try {
      c.result.emplace(compute_semigroup(n.measure, t, cfg));
    } catch (const Error& e) {
      c.error = e.what();
    }
    out.push_back(std::move(c));
  };
  for (const auto& n : half_line_suite()) {
    for (double t : kTimes) run(n, t);
  }
  for (const auto& n : circle_suite()) {
    for (double t : kTimes) run(n, t);
  }
  return out;
}

Line criterion3(const std::vector<Computed>& runs) {
  double worst = 0.0;
  std::string where;
  int errors = 0;
  for (const auto& c : runs) {
    if (!c.result) {
      ++errors;
      where = c.name + fmt(" t=%g: ", c.t) + c.error;
      continue;
    }
    const double e = rel_moment_error(moments(c.result->assembled.measure, 8),
                                      semigroup_moments(c.input, c.t, 8));
    if (e > worst) {
      worst = e;
      if (errors == 0) where = c.name + fmt(" t=%g", c.t);
    }
  }
  // Extended-precision series layer, s = 1.25, u = 1.6.
  double law = 0.0;
  auto law_on = [&](const std::vector<Named>& suite) {
    for (const auto& n : suite) {
      const auto base = extended(moments(n.measure, 8));
      const auto direct = semigroup_moments(base, 2.0L);
      const auto twice = semigroup_moments(semigroup_moments(base, 1.25L), 1.6L);
      for (int k = 0; k < 8; ++k) law = std::max(law, static_cast<double>(std::abs(direct[k] - twice[k])));
    }
  };
  law_on(half_line_suite());
  law_on(circle_suite());
  Line l;
  l.pass = errors == 0 && worst <= 1e-3 && law <= 1e-9;
  l.detail = fmt("max relative moment error %.3e over %zu runs (worst: %s, errors: %d); "
                 "semigroup law max |m_k(mu_2) - m_k((mu_1.25)_1.6)| %.3e",
                 worst, runs.size(), where.c_str(), errors, law);
  return l;
}

Line criterion4(const std::vector<Computed>& runs) {
  double series = 0.0;
  double assembled = 0.0;
  std::string where;
  std::vector<Named> all = half_line_suite();
  for (auto& n : circle_suite()) all.push_back(n);
  for (const auto& n : all) {
    const cplx m1 = moments(n.measure, 1)[0];
    for (double t : kTimes) {
      const cplx want = n.measure.space() == Space::HalfLine
                            ? cplx{std::pow(m1.real(), t), 0.0}
                            : std::exp(t * std::log(m1));
      series = std::max(series, std::abs(semigroup_moments(n.measure, t, 1)[0] - want));
    }
  }
  for (const auto& c : runs) {
    if (!c.result) continue;
    const cplx m1 = moments(c.input, 1)[0];
    const cplx want = c.input.space() == Space::HalfLine ? cplx{std::pow(m1.real(), c.t), 0.0}
                                                         : std::exp(c.t * std::log(m1));
    const double e = std::abs(moments(c.result->assembled.measure, 1)[0] - want);
    if (e > assembled) {
      assembled = e;
      where = c.name + fmt(" t=%g", c.t);
    }
  }
  Line l;
  l.pass = series <= 1e-12 && assembled <= 1e-4;
  l.detail = fmt("series %.3e (<= 1e-12), assembled %.3e (<= 1e-4, worst: %s)", series,
                 assembled, where.c_str());
  return l;
}

Line criterion5() {
  RecoverConfig cfg;
  cfg.threads = threads();
  double loc = 0.0;
  double mass = 0.0;
  int bad = 0;
  for (double a : {0.3, 1.0, 2.5}) {
    for (double t : {1.25, 2.0, 3.7}) {
      const SemigroupResult r = compute_semigroup(Measure::make(Space::Circle, {{a, 1.0}}), t, cfg);
      if (r.atoms.atoms.size() != 1) {
        ++bad;
        continue;
      }
      const double d = std::abs(wrap_angle(r.atoms.atoms[0].location - a * t));
      loc = std::max(loc, std::min(d, kTwoPi - d));
      mass = std::max(mass, std::abs(r.atoms.atoms[0].mass - 1.0));
    }
  }
  for (double x : {0.5, 1.0, 3.0}) {
    for (double t : {1.25, 2.0, 3.7}) {
      const SemigroupResult r = compute_semigroup(half({{x, 1.0}}), t, cfg);
      if (r.atoms.atoms.size() != 1) {
        ++bad;
        continue;
      }
      loc = std::max(loc, std::abs(r.atoms.atoms[0].location - std::pow(x, t)));
      mass = std::max(mass, std::abs(r.atoms.atoms[0].mass - 1.0));
    }
  }
  Line l;
  l.pass = bad == 0 && loc <= 1e-8 && mass <= 1e-8;
  l.detail = fmt("max location error %.3e, max mass error %.3e, runs without a single atom: %d",
                 loc, mass, bad);
  return l;
}

Line criterion6() {
  RegularityConfig cfg;
  cfg.recover.threads = threads();
  const Measure b14 = half({{1.0, 0.5}, {4.0, 0.5}});
  bool ok = true;
  double min_gap = std::numeric_limits<double>::infinity();
  for (double t : {1.2, 1.5}) {
    const RegularityReport r = verify_regularity(b14, t, cfg);
    ok = ok && r.pass && r.atoms.size() == 2 && !r.gaps.empty();
    for (const auto& g : r.gaps) {
      min_gap = std::min(min_gap, g.interior_mass);
      ok = ok && g.interior_mass > 1e-6;
    }
  }
  RegularityConfig neg = cfg;
  neg.inject_gap = true;
  const RegularityReport control = verify_regularity(b14, 1.2, neg);
  Line l;
  l.pass = ok && !control.pass;
  l.detail = fmt("min gap mass %.6f, negative control %s", min_gap, control.pass ? "PASS" : "FAIL");
  return l;
}

Line criterion7() {
  RegularityConfig cfg;
  cfg.recover.threads = threads();
  double min_step = std::numeric_limits<double>::infinity();
  double residual = 0.0;
  int arcs = 0;
  bool atoms_ok = true;
  bool ok = true;
  std::string notes;
  for (const auto& n : circle_suite()) {
    for (double t : {1.3, 2.0, 2.5, 3.7}) {
      const RegularityReport r = verify_regularity(n.measure, t, cfg);
      for (const auto& w : r.windings) {
        ++arcs;
        min_step = std::min(min_step, w.min_step);
        residual = std::max(residual, w.winding_residual);
      }
      if (t >= 2.0) atoms_ok = atoms_ok && r.at_most_one_atom.value_or(false);
      ok = ok && r.pass;
    }
  }
  Line l;
  l.pass = arcs > 0 && min_step >= -1e-9 && atoms_ok && residual <= 1e-6 && ok;
  l.detail = fmt("%d zero-mass arcs, min argument step %.3e, max winding residual %.3e, "
                 "at most one atom for t >= 2: %s, all reports PASS: %s",
                 arcs, min_step, residual, atoms_ok ? "yes" : "no", ok ? "yes" : "no");
  return l;
}

Line criterion8() {
  int violations = 0;
  double herglotz = std::numeric_limits<double>::infinity();
  double symmetry = 0.0;
  for (const auto& n : half_line_suite()) {
    std::vector<EvalPoint> pts;
    for (const cplx z : oracle::upper_half_plane(100, 81)) pts.push_back(EvalPoint::half_line(z));
    violations += static_cast<int>(validate_pick_class(n.measure, pts).size());
    const Transformer tr(n.measure);
    for (const cplx z : oracle::upper_half_plane(100, 82)) {
      symmetry = std::max(symmetry, std::abs(tr.eta(std::conj(z)).value - std::conj(tr.eta(z).value)));
    }
    const auto base = std::make_shared<MeasureEta>(n.measure);
    const SemigroupEta mu_t(base, 1.5);
    violations += static_cast<int>(
        validate_pick_class([&](cplx z) { return mu_t.eta(z).value; }, Space::HalfLine, pts).size());
  }
  std::vector<Named> circles = circle_suite();
  circles.push_back({"circle trig density", circle_trig(1.0)});
  for (const auto& n : circles) {
    std::vector<EvalPoint> pts;
    for (const cplx z : oracle::disk(100, 83, 0.99)) pts.push_back(EvalPoint::disk(z));
    violations += static_cast<int>(validate_pick_class(n.measure, pts).size());
    const Transformer tr(n.measure);
    for (const EvalPoint& p : pts) herglotz = std::min(herglotz, tr.psi(p.z()).value.real() + 0.5);
    const auto base = std::make_shared<MeasureEta>(n.measure);
    const SemigroupEta mu_t(base, 1.5);
    violations += static_cast<int>(
        validate_pick_class([&](cplx z) { return mu_t.eta(z).value; }, Space::Circle, pts).size());
  }
  // Reflection theta -> -theta conjugates eta.
  const Transformer a(circle_trig(1.0));
  const Transformer b(circle_trig(-1.0));
  for (const cplx z : oracle::disk(100, 84, 0.99)) {
    symmetry = std::max(symmetry, std::abs(b.eta(std::conj(z)).value - std::conj(a.eta(z).value)));
  }
  Line l;
  l.pass = violations == 0 && herglotz >= -1e-12 && symmetry <= 1e-12;
  l.detail = fmt("Pick/Schur violations %d, min Re psi + 1/2 on the disk %.3e, "
                 "conjugate symmetry %.3e",
                 violations, herglotz, symmetry);
  return l;
}

Line criterion9() {
  const Measure b01 = half({{0.0, 0.5}, {1.0, 0.5}});
  const MassAtZero z1 = mass_at_zero(MeasureEta(b01), 1.0);
  RecoverConfig cfg;
  cfg.threads = threads();
  const SemigroupResult r = compute_semigroup(b01, 1.5, cfg);
  const double audit = std::abs(r.assembled.raw_total - 1.0);
  Line l;
  l.pass = std::abs(z1.mass - 0.5) <= 1e-6 && audit <= 1e-4;
  l.detail = fmt("mass at zero for t = 1: %.12f; t = 1.5: mass at zero %.9f, |total - 1| %.3e",
                 z1.mass, r.zero.mass, audit);
  return l;
}

std::string serialize(const SemigroupResult& r) {
  return density_csv(r.density) + atom_report_json(r.atoms, r.space) +
         dump_measure(r.assembled.measure);
}

Line criterion10(double elapsed_before) {
  const auto t0 = Clock::now();
  bool same = true;
  for (const Named& n : {Named{"b14", half({{1.0, 0.5}, {4.0, 0.5}})},
                         Named{"circle", circle_atom_haar()}}) {
    RecoverConfig one;
    one.threads = 1;
    RecoverConfig many;
    many.threads = std::max(3, threads());
    const std::string a = serialize(compute_semigroup(n.measure, 1.5, one));
    const std::string b = serialize(compute_semigroup(n.measure, 1.5, one));
    const std::string c = serialize(compute_semigroup(n.measure, 1.5, many));
    same = same && a == b && a == c;
    RegularityConfig rc;
    rc.recover = one;
    same = same && regularity_json(verify_regularity(n.measure, 1.5, rc)) ==
                       regularity_json(verify_regularity(n.measure, 1.5, rc));
  }
  const double total = elapsed_before + seconds_since(t0);
  Line l;
  l.pass = same && total <= 300.0;
  l.detail = fmt("outputs byte-identical: %s (1 and %d threads), suite wall-clock %.1f s (<= 300 s)",
                 same ? "yes" : "no", std::max(3, threads()), total);
  return l;
}

}  // namespace

int main() {
  const auto start = Clock::now();
  bool all = true;
  auto record = [&](int n, const Line& l) {
    report(n, l);
    all = all && l.pass;
  };
  auto guarded = [&](int n, const std::function<Line()>& f) {
    try {
      record(n, f());
    } catch (const std::exception& e) {
      record(n, Line{false, std::string("error: ") + e.what()});
    }
  };

  const SolveStats s = residual_suite();
  record(1, Line{s.failures == 0 && s.residual <= 1e-9 && s.elapsed <= 60.0,
                 fmt("max residual / max(1,|z|) %.3e over %d solves, %d failed%s%s, %.1f s (<= 60 s)",
                     s.residual, s.points, s.failures, s.failures ? " first: " : "",
                     s.first_failure.c_str(), s.elapsed)});
  record(2, Line{s.failures == 0 && s.cross <= 1e-9,
                 fmt("max |omega - eta_t (z/eta_t)^(1/t)| %.3e", s.cross)});

  std::vector<Computed> runs;
  try {
    runs = compute_all();
  } catch (const std::exception& e) {
    std::printf("semigroup runs aborted: %s\n", e.what());
  }
  guarded(3, [&] { return criterion3(runs); });
  guarded(4, [&] { return criterion4(runs); });
  guarded(5, criterion5);
  guarded(6, criterion6);
  guarded(7, criterion7);
  guarded(8, criterion8);
  guarded(9, criterion9);
  const double elapsed = seconds_since(start);
  guarded(10, [&] { return criterion10(elapsed); });
  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
