// freemul: command-line front end for the free multiplicative semigroup engine.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "freemul/error.hpp"
#include "freemul/grid.hpp"
#include "freemul/measure.hpp"
#include "freemul/recover.hpp"
#include "freemul/regularity.hpp"
#include "freemul/series.hpp"
#include "freemul/subordination.hpp"
#include "freemul/transform.hpp"

namespace {

using freemul::cplx;

constexpr int kExitFail = 2;

struct RunConfig {
  std::string measure_path;
  double t = 1.0;
  std::string grid;
  std::string points_path;
  double imag = 0.0;
  std::string which = "eta";
  int order = 8;
  std::string out;
  int threads = 0;
  bool verbose = false;
  unsigned long long seed = 1;
  int validate = 0;
  bool inject_gap = false;
  freemul::RegularityConfig reg;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw freemul::Error(freemul::ErrorCode::InvalidArgument, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw freemul::Error(freemul::ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

freemul::Measure load(const RunConfig& c) {
  if (c.measure_path.empty()) {
    throw freemul::Error(freemul::ErrorCode::InvalidArgument, "--measure is required");
  }
  return freemul::load_measure(read_file(c.measure_path));
}

std::string fmt(const char* spec, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, a);
  return buf;
}

std::string num(double a) { return fmt("%.17g", a); }

// Points file: one point per line as "re,im" or "re"; lines that do not start
// with a number are skipped.
std::vector<cplx> read_points(const std::string& path) {
  std::vector<cplx> pts;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const char* p = line.c_str();
    char* end = nullptr;
    const double re = std::strtod(p, &end);
    if (end == p) continue;
    double im = 0.0;
    while (*end == ' ' || *end == '\t') ++end;
    if (*end == ',') {
      const char* q = end + 1;
      im = std::strtod(q, &end);
      if (end == q) im = 0.0;
    }
    pts.emplace_back(re, im);
  }
  return pts;
}

std::vector<cplx> transform_points(const RunConfig& c) {
  if (!c.points_path.empty()) return read_points(c.points_path);
  if (c.grid.empty()) {
    throw freemul::Error(freemul::ErrorCode::InvalidArgument, "--points or --grid is required");
  }
  std::vector<cplx> pts;
  for (double x : freemul::parse_grid(c.grid)) pts.emplace_back(x, c.imag);
  return pts;
}

std::vector<freemul::EvalPoint> random_samples(freemul::Space space, int n,
                                               unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<freemul::EvalPoint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (space == freemul::Space::HalfLine) {
      const double r = std::exp(-6.0 + 12.0 * unit(rng));
      const double th = freemul::kPi * (0.001 + 0.998 * unit(rng));
      out.push_back(freemul::EvalPoint::half_line(std::polar(r, th)));
    } else {
      const double r = 0.999 * std::sqrt(unit(rng));
      const double th = freemul::kTwoPi * unit(rng);
      out.push_back(freemul::EvalPoint::disk(std::polar(r, th)));
    }
  }
  return out;
}

int cmd_transform(const RunConfig& c) {
  const freemul::Measure m = load(c);
  const freemul::Transformer tr(m);
  const bool semigroup = c.which == "eta_t";
  if (semigroup && !(c.t >= 1.0)) {
    throw freemul::Error(freemul::ErrorCode::InvalidArgument, "--t must be >= 1");
  }
  // MeasureEta rejects circle inputs with vanishing first moment.
  std::optional<freemul::MeasureEta> src;
  if (semigroup || m.space() == freemul::Space::Circle) src.emplace(m);

  if (c.validate > 0) {
    const auto samples = random_samples(m.space(), c.validate, c.seed);
    std::vector<freemul::PickViolation> bad;
    if (semigroup) {
      const freemul::SolverConfig cfg = c.reg.recover.solver;
      const freemul::MeasureEta& s = *src;
      const double t = c.t;
      bad = freemul::validate_pick_class(
          [&s, t, cfg](cplx z) { return freemul::solve_omega(s, t, z, cfg).eta_t; }, m.space(),
          samples);
    } else {
      bad = freemul::validate_pick_class(m, samples);
    }
    std::printf("pick_validation,samples,%d,violations,%zu\n", c.validate, bad.size());
    for (const auto& v : bad) {
      std::printf("violation,%s,%s,%s\n", num(v.z.real()).c_str(), num(v.z.imag()).c_str(),
                  v.reason.c_str());
    }
    return bad.empty() ? 0 : kExitFail;
  }

  const std::vector<cplx> pts = transform_points(c);
  std::ostringstream out;
  if (semigroup) {
    out << "re,im,value_re,value_im,omega_re,omega_im";
    if (c.verbose) out << ",iterations,residual,branch_winding";
    out << "\n";
    const auto values =
        freemul::eta_t_grid(*src, c.t, pts, c.reg.recover.solver, c.reg.recover.threads);
    for (const auto& v : values) {
      if (!v.ok) {
        throw freemul::Error(freemul::ErrorCode::NoConvergence,
                             "eta_t at " + num(v.z.real()) + "," + num(v.z.imag()) + ": " + v.error);
      }
      out << num(v.z.real()) << ',' << num(v.z.imag()) << ',' << num(v.result.eta_t.real()) << ','
          << num(v.result.eta_t.imag()) << ',' << num(v.result.omega.real()) << ','
          << num(v.result.omega.imag());
      if (c.verbose) {
        out << ',' << v.result.iterations << ',' << fmt("%.3e", v.result.residual) << ','
            << v.result.branch_winding;
      }
      out << "\n";
    }
  } else {
    out << "re,im,value_re,value_im\n";
    for (const cplx z : pts) {
      cplx v;
      if (c.which == "psi") {
        v = freemul::psi(m, freemul::EvalPoint::in(m.space(), z));
      } else if (c.which == "eta") {
        v = freemul::eta(m, freemul::EvalPoint::in(m.space(), z));
      } else if (c.which == "cauchy") {
        v = freemul::cauchy(m, z);
      } else {
        throw freemul::Error(freemul::ErrorCode::InvalidArgument, "unknown --which " + c.which);
      }
      out << num(z.real()) << ',' << num(z.imag()) << ',' << num(v.real()) << ','
          << num(v.imag()) << "\n";
    }
  }
  if (c.out.empty()) {
    std::cout << out.str();
  } else {
    write_file(c.out, out.str());
  }
  return 0;
}

std::string atoms_csv(const freemul::AtomReport& r) {
  std::ostringstream out;
  out << "location,mass,jc_re,jc_im,residual\n";
  for (const auto& a : r.atoms) {
    out << num(a.location) << ',' << num(a.mass) << ',' << num(a.jc_derivative.real()) << ','
        << num(a.jc_derivative.imag()) << ',' << fmt("%.3e", a.residual) << "\n";
  }
  return out.str();
}

int cmd_semigroup(const RunConfig& c) {
  const freemul::Measure m = load(c);
  if (!(c.t >= 1.0)) throw freemul::Error(freemul::ErrorCode::InvalidArgument, "--t must be >= 1");
  if (c.t == 1.0) {
    // Pass-through: mu_1 = mu.
    if (!c.out.empty()) write_file(c.out + "_measure.json", freemul::dump_measure(m));
    std::printf("t = 1: measure passed through unchanged\n");
    std::printf("audit,total,%s,PASS\n", num(freemul::total_mass(m)).c_str());
    return 0;
  }
  const freemul::RecoverConfig& rc = c.reg.recover;
  std::optional<freemul::SemigroupResult> run;
  try {
    run.emplace(freemul::compute_semigroup(m, c.t, rc));
  } catch (const freemul::Error& e) {
    if (e.code() != freemul::ErrorCode::MassAuditFailure) throw;
    std::printf("audit,FAIL,%s\n", e.what());
    return kExitFail;
  }
  const freemul::SemigroupResult& res = *run;
  freemul::DensityEstimate shown = res.density;
  if (!c.grid.empty()) {
    const freemul::MeasureEta src(m);
    const auto singular = freemul::singularities_of(res.atoms, res.zero.mass);
    const auto g = freemul::parse_grid(c.grid);
    shown = m.space() == freemul::Space::HalfLine
                ? freemul::density_rplus(src, c.t, g, singular, rc)
                : freemul::density_circle(src, c.t, g, singular, rc);
  }

  std::printf("space,%s\n", std::string(freemul::to_string(m.space())).c_str());
  std::printf("t,%s\n", num(c.t).c_str());
  for (const auto& a : res.atoms.atoms) {
    std::printf("atom,%s,%s\n", num(a.location).c_str(), num(a.mass).c_str());
  }
  if (m.space() == freemul::Space::HalfLine) {
    std::printf("mass_at_zero,%s\n", num(res.zero.mass).c_str());
  }
  std::printf("density_points,%zu\n", res.density.grid.size());
  std::printf("audit,atoms,%s,zero,%s,density,%s,total,%s,PASS\n",
              num(res.assembled.atom_mass).c_str(), num(res.assembled.zero_mass).c_str(),
              num(res.assembled.density_mass).c_str(), num(res.assembled.raw_total).c_str());
  if (c.verbose) {
    for (const auto& r : res.atoms.rejected) {
      std::fprintf(stderr, "rejected candidate %s: %s\n", num(r.location).c_str(),
                   r.reason.c_str());
    }
    for (const auto& w : shown.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  if (!c.out.empty()) {
    write_file(c.out + "_density.csv", freemul::density_csv(shown));
    write_file(c.out + "_atoms.csv", atoms_csv(res.atoms));
    write_file(c.out + "_measure.json", freemul::dump_measure(res.assembled.measure));
  }
  return 0;
}

std::string regularity_csv(const freemul::RegularityReport& r) {
  std::ostringstream out;
  out << "check,start,end,value,detail,verdict\n";
  for (const auto& g : r.gaps) {
    out << "gap," << num(g.a) << ',' << num(g.b) << ',' << num(g.interior_mass) << ','
        << g.eta_monotonicity_violations << ',' << (g.pass ? "PASS" : "FAIL") << "\n";
  }
  for (const auto& a : r.arcs) {
    out << "arc," << num(a.alpha1) << ',' << num(a.alpha2) << ',' << num(a.interior_mass)
        << ",," << (a.pass ? "PASS" : "FAIL") << "\n";
  }
  for (const auto& w : r.windings) {
    out << "winding," << num(w.theta1) << ',' << num(w.theta2) << ',' << num(w.min_step) << ','
        << num(w.winding_residual) << ',' << (w.monotone ? "monotone" : "not_monotone") << "\n";
  }
  if (r.at_most_one_atom) {
    out << "at_most_one_atom,,," << r.atoms.size() << ",,"
        << (*r.at_most_one_atom ? "PASS" : "FAIL") << "\n";
  }
  out << "overall,,,,," << (r.pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

int cmd_verify(const RunConfig& c) {
  const freemul::Measure m = load(c);
  if (!(c.t > 1.0)) throw freemul::Error(freemul::ErrorCode::InvalidArgument, "--t must be > 1");
  freemul::RegularityConfig cfg = c.reg;
  cfg.inject_gap = c.inject_gap;
  const auto rep = freemul::verify_regularity(m, c.t, cfg);
  std::cout << freemul::regularity_summary(rep);
  if (c.verbose) std::cout << freemul::regularity_json(rep) << "\n";
  if (!c.out.empty()) write_file(c.out, regularity_csv(rep));
  return rep.pass ? 0 : kExitFail;
}

int cmd_oracle(const RunConfig& c) {
  const freemul::Measure m = load(c);
  if (c.order < 1 || c.order > freemul::kDefaultSeriesOrder) {
    throw freemul::Error(freemul::ErrorCode::InvalidArgument, "--order must be in [1, 16]");
  }
  if (!(c.t >= 1.0)) throw freemul::Error(freemul::ErrorCode::InvalidArgument, "--t must be >= 1");
  const auto mom = freemul::semigroup_moments(m, c.t, c.order);
  std::ostringstream out;
  out << "k,re,im\n";
  for (int k = 0; k < c.order; ++k) {
    out << k + 1 << ',' << num(mom[k].real()) << ',' << num(mom[k].imag()) << "\n";
  }
  if (c.out.empty()) {
    std::cout << out.str();
  } else {
    write_file(c.out, out.str());
  }
  return 0;
}

void add_common(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--measure", c.measure_path, "Measure document (JSON)")->required();
  cmd->add_option("--out", c.out, "Output path (semigroup: file prefix)");
  cmd->add_option("--threads", c.threads, "Worker threads (default: available parallelism)");
  cmd->add_flag("--verbose", c.verbose, "Diagnostics");
}

void add_tolerances(CLI::App* cmd, RunConfig& c) {
  auto& s = c.reg.recover.solver;
  cmd->add_option("--tol", s.tol, "Fixed-point step tolerance")->capture_default_str();
  cmd->add_option("--tol-residual", s.tol_residual,
                  "Residual tolerance |Phi_t(omega) - z| / max(1,|z|) "
                  "(also FREEMUL_TOL_RESIDUAL)")
      ->capture_default_str();
  cmd->add_option("--max-iter", s.max_iter, "Solver iteration cap")->capture_default_str();
  cmd->add_option("--path-steps", s.path_steps, "Continuation steps")->capture_default_str();
  auto& r = c.reg.recover;
  cmd->add_option("--density-tol", r.density_tol, "Relative density extrapolation tolerance")
      ->capture_default_str();
  cmd->add_option("--atom-tol", r.atom_tol, "|eta_t - 1| required for an atom")
      ->capture_default_str();
  cmd->add_option("--grid-points", r.grid_points, "Size of the automatic density grid")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free multiplicative convolution semigroups on the half-line and the circle"};
  app.require_subcommand(1);
  RunConfig c;
  if (const char* env = std::getenv("FREEMUL_TOL_RESIDUAL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) c.reg.recover.solver.tol_residual = v;
  }

  auto* transform = app.add_subcommand("transform", "Evaluate psi, eta, G or eta_t at points");
  add_common(transform, c);
  add_tolerances(transform, c);
  transform->add_option("--which", c.which, "psi | eta | cauchy | eta_t")
      ->check(CLI::IsMember({"psi", "eta", "cauchy", "eta_t"}))
      ->capture_default_str();
  transform->add_option("--points", c.points_path, "CSV of points (re,im per line)");
  transform->add_option("--grid", c.grid, "Real parts start:end:count or geom:start:end:count");
  transform->add_option("--imag", c.imag, "Imaginary part for --grid points")->capture_default_str();
  transform->add_option("--t", c.t, "Semigroup parameter for eta_t");
  transform->add_option("--validate", c.validate, "Check the Pick class on N random samples");
  transform->add_option("--seed", c.seed, "Seed for --validate samples")->capture_default_str();

  auto* semigroup = app.add_subcommand("semigroup", "Compute mu_t: atoms, mass at zero, density");
  add_common(semigroup, c);
  add_tolerances(semigroup, c);
  semigroup->add_option("--t", c.t, "Semigroup parameter t >= 1")->required();
  semigroup->add_option("--grid", c.grid, "Density output grid (default: automatic)");

  auto* verify = app.add_subcommand("verify", "Check positive mass between atoms of mu_t");
  add_common(verify, c);
  add_tolerances(verify, c);
  verify->add_option("--t", c.t, "Semigroup parameter t > 1")->required();
  verify->add_option("--mass-floor", c.reg.mass_floor, "Positive-mass threshold")
      ->capture_default_str();
  verify->add_option("--arc-samples", c.reg.arc_samples, "Samples per zero-mass arc")
      ->capture_default_str();
  verify->add_flag("--inject-gap", c.inject_gap, "Debug: remove density between atoms");

  auto* oracle = app.add_subcommand("oracle", "Moments of mu_t from the series oracle");
  add_common(oracle, c);
  oracle->add_option("--t", c.t, "Semigroup parameter t >= 1")->capture_default_str();
  oracle->add_option("--order", c.order, "Number of moments (<= 16)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  c.reg.recover.threads =
      c.threads > 0 ? c.threads : std::max(1u, std::thread::hardware_concurrency());

  try {
    if (*transform) return cmd_transform(c);
    if (*semigroup) return cmd_semigroup(c);
    if (*verify) return cmd_verify(c);
    if (*oracle) return cmd_oracle(c);
  } catch (const freemul::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
