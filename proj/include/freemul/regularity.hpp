#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "freemul/measure.hpp"
#include "freemul/recover.hpp"
#include "freemul/subordination.hpp"

namespace freemul {

struct GapReport {
  double a = 0.0;
  double b = 0.0;
  double interior_mass = 0.0;
  double min_density_sample = 0.0;
  int eta_samples = 0;                 // boundary samples of eta_t on (1/b, 1/a)
  int eta_real_samples = 0;            // of those, samples where eta_t is real
  int eta_monotonicity_violations = 0;
  bool pass = false;
};

struct WindingReport {
  double theta1 = 0.0;                 // arc of boundary points e^{i theta}
  double theta2 = 0.0;
  std::vector<double> theta;
  std::vector<double> g;               // unwrapped arg eta_t(e^{i theta})
  std::vector<double> h;               // unwrapped arg omega_t(e^{i theta})
  double increment = 0.0;              // g(last) - g(first)
  double min_step = 0.0;               // min of g(theta_{j+1}) - g(theta_j)
  bool monotone = false;
  double h_increment = 0.0;
  double combined = 0.0;               // (1 - 1/t) dg + (1/t) dtheta
  double winding_residual = 0.0;       // |dh - combined|
  double predicted_if_gap = 0.0;       // (1 - 1/t) 2pi + (1/t)(theta2 - theta1)
  double max_modulus_defect = 0.0;     // max | |eta_t| - 1 | on the samples
};

struct RegularityConfig {
  double mass_floor = 1e-6;
  int eta_samples = 64;
  int arc_samples = 128;
  double monotone_slack = 1e-9;
  double winding_tol = 1e-6;
  double zero_density = 1e-8;          // density values treated as no mass
  bool inject_gap = false;             // zero the density between atoms (negative control)
  RecoverConfig recover;
};

/// Boundary value of eta_t at a boundary point; nullopt when it cannot be computed.
using BoundaryEta = std::function<std::optional<cplx>(cplx)>;

/// Winding identity for the subordination function:
/// (1 - 1/t) dg + (1/t) dtheta.
double winding_combination(double t, double dg, double dtheta);

/// Mass of the density part of a half-line measure on (a, b), integrating the
/// piecewise-linear interpolant exactly.
double interval_mass(const Measure& m, double a, double b);

/// Mass of the density part of a circle measure on the counterclockwise arc
/// from alpha1 to alpha2.
double arc_mass(const Measure& m, double alpha1, double alpha2);

/// One report per adjacent atom pair, plus (0, first atom) when mu_t({0}) > 0.
/// When `eta` is given, eta_t is sampled on (1/b, 1/a) and decreases between
/// consecutive real samples are counted.
std::vector<GapReport> check_gap_mass(const Measure& mu_t, const AtomReport& atoms,
                                      double zero_mass, const RegularityConfig& cfg = {},
                                      const BoundaryEta& eta = nullptr);

/// Argument of the boundary values of eta_t and omega_t along the arc
/// {e^{i theta}: theta1 <= theta <= theta2}. Throws UnwrapFailure if adjacent
/// samples jump by pi or more.
WindingReport arc_winding(const EtaSource& src, double t, double theta1, double theta2,
                          int samples, const RecoverConfig& cfg = {});

/// Unwraps sampled arguments into a continuous function; UnwrapFailure on a
/// jump of pi or more.
std::vector<double> unwrap_arguments(const std::vector<double>& raw);

/// Maximal location arcs (alpha1, alpha2) where the recovered circle density
/// vanishes and no atom sits, shrunk slightly away from their ends.
/// Arcs shorter than 1e-3 are dropped.
std::vector<std::pair<double, double>> zero_mass_arcs(const DensityEstimate& d,
                                                      const AtomReport& atoms,
                                                      double zero_density);

/// Zeros of eta_mu in the open disk of the given radius, away from 0, counted
/// with the argument principle applied to psi(z)/z.
struct ZeroCount {
  int zeros = 0;
  double radius = 0.0;
  double min_modulus = 0.0;   // min |psi(z)/z| on the contour
  int samples = 0;
};

ZeroCount eta_zero_count(const Measure& m, double radius = 0.999);

struct ArcCheck {
  double alpha1 = 0.0;   // counterclockwise location arc between adjacent atoms
  double alpha2 = 0.0;
  double interior_mass = 0.0;
  bool pass = false;
};

struct RegularityReport {
  Space space = Space::HalfLine;
  double t = 1.0;
  bool pass = false;
  std::vector<std::string> stages;
  std::vector<std::string> warnings;
  std::vector<DetectedAtom> atoms;
  double zero_mass = 0.0;
  double audit_total = 0.0;
  std::vector<GapReport> gaps;
  std::vector<ArcCheck> arcs;
  std::vector<WindingReport> windings;
  std::optional<bool> at_most_one_atom;
  std::optional<ZeroCount> eta_zeros;  // circle only
};

/// Full pipeline: recover mu_t, then check every gap (half-line) or arc
/// (circle), with the winding diagnostics on zero-mass arcs.
RegularityReport verify_regularity(const Measure& m, double t, const RegularityConfig& cfg = {},
                                   const std::optional<std::vector<double>>& grid = std::nullopt);

std::string regularity_json(const RegularityReport& r);
std::string regularity_summary(const RegularityReport& r);

}  // namespace freemul
