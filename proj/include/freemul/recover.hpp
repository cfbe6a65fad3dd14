#pragma once

#include <optional>
#include <string>
#include <vector>

#include "freemul/measure.hpp"
#include "freemul/subordination.hpp"
#include "freemul/transform.hpp"

namespace freemul {

struct RecoverConfig {
  int k_min = 6;                    // regularization heights scale * 2^-k
  int k_max = 20;
  double density_tol = 1e-7;        // relative Richardson stopping
  double density_floor = 1e-9;      // absolute part of the stopping rule
  double clamp = 1e-8;              // negative noise up to this size is set to 0
  double scan_resolution = 1e-3;    // fraction of the boundary parameter range
  double candidate_tol = 0.1;       // |eta - 1| below this starts a refinement
  double atom_tol = 1e-7;           // |eta - 1| required for an atom
  double bisection_tol = 1e-10;     // relative width of the refined bracket
  int grid_points = 4000;           // size of the automatic density grid
  int threads = 1;
  SolverConfig solver;
  BoundaryConfig boundary{1e-9, 6, 40};
};

struct DensityEstimate {
  Space space = Space::HalfLine;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> errors;            // extrapolation error per point
  std::vector<double> scales;            // heights used are scale * y_schedule
  std::vector<bool> converged;
  std::vector<double> y_schedule;
  int filled = 0;                        // failed points replaced by interpolation
  int clamped = 0;
  double max_clamp = 0.0;
  std::vector<std::string> warnings;
};

struct DetectedAtom {
  double location = 0.0;     // x on the half-line, angle in [0, 2pi) on the circle
  double mass = 0.0;
  cplx jc_derivative;        // eta_t'(zeta) at the boundary point zeta = 1/x or conj(e^{i theta})
  double residual = 0.0;     // |eta_t(zeta) - 1|
};

struct RejectedCandidate {
  double location = 0.0;
  std::string reason;
};

struct AtomReport {
  std::vector<DetectedAtom> atoms;
  std::vector<RejectedCandidate> rejected;
  double scan_resolution = 0.0;
};

struct MassAtZero {
  double mass = 0.0;
  double limit = 0.0;        // lim eta_t(z), z -> -inf; -inf when it diverges
  bool diverges = false;
  int levels = 0;
  double error = 0.0;
};

/// Known singular structure of mu_t: atoms (whose exact Cauchy/Poisson terms
/// are subtracted before extrapolating) and further points where the density
/// may blow up.
struct Singularities {
  std::vector<PointMass> atoms;
  std::vector<double> points;
};

/// Density of mu_t on the half-line from G(1/z) = z/(1 - eta_t(z)), with
/// w = x + i y and heights y = scale 2^-k, where scale is the distance from x
/// to the nearest singular point (0 included), capped at 1.
DensityEstimate density_rplus(const EtaSource& src, double t, const std::vector<double>& grid,
                              const Singularities& singular = {}, const RecoverConfig& cfg = {});

/// Density of mu_t at e^{i phi} with respect to dtheta/2pi: radial limit of
/// Re[(1 + eta_t)/(1 - eta_t)] at z = r e^{-i phi}.
DensityEstimate density_circle(const EtaSource& src, double t, const std::vector<double>& grid,
                               const Singularities& singular = {}, const RecoverConfig& cfg = {});

/// Boundary points with eta_t = 1 and a finite Julia-Caratheodory derivative.
/// On the half-line the scan covers x in [lo, hi] (lo > 0) log-uniformly; on
/// the circle the whole circle is scanned and lo, hi are ignored.
AtomReport detect_atoms(const EtaSource& src, double t, double lo, double hi,
                        const RecoverConfig& cfg = {});

/// Boundary value of eta_t at zeta (1/x on the half-line, e^{i theta} on the
/// circle), approached along zeta (1 + i 2^-k) or zeta (1 - 2^-k).
BoundaryValue boundary_eta_t(const EtaSource& src, double t, cplx zeta,
                             const RecoverConfig& cfg = {});

/// mu_t({0}) = lim 1/(1 - eta_t(z)) along z = -2^k.
MassAtZero mass_at_zero(const EtaSource& src, double t, const RecoverConfig& cfg = {});

struct AssembledMeasure {
  Measure measure;
  double atom_mass = 0.0;
  double density_mass = 0.0;
  double zero_mass = 0.0;
  double raw_total = 0.0;     // before the density part is rescaled
  double density_scale = 1.0;
};

/// Builds mu_t from its parts. The mass gap is closed by rescaling the density
/// part only; totals outside [0.99, 1.01] raise MassAuditFailure.
AssembledMeasure assemble_measure(const AtomReport& atoms, const DensityEstimate& density,
                                  double zero_mass, Space space);

struct SemigroupResult {
  double t = 1.0;
  Space space = Space::HalfLine;
  AtomReport atoms;
  MassAtZero zero;
  DensityEstimate density;
  AssembledMeasure assembled;
};

/// Automatic density grid: clustered between the support ends [lo^t, hi^t],
/// the images x^t of the atoms of m, the detected or rejected atom candidates
/// and the `extra` break points (half-line), or between the candidates and
/// `extra` (circle). Segments where a `previous` estimate found no density
/// get few points. A mass of m at 0 adds a geometric run of points reaching
/// far below the first break. Empty when the support of mu_t is a single point.
std::vector<double> auto_density_grid(const Measure& m, double t, const AtomReport& atoms,
                                      int count, const std::vector<double>& extra = {},
                                      const DensityEstimate* previous = nullptr);

/// Atoms and rejected candidates of a report as density singularities.
Singularities singularities_of(const AtomReport& atoms, double zero_mass);

/// Full pipeline: atoms, mass at zero, density, assembly. Without a grid the
/// density is computed on the automatic grid, and once more on a grid that
/// also breaks at the edges of the intervals where the first pass vanishes.
SemigroupResult compute_semigroup(const Measure& m, double t, const RecoverConfig& cfg = {},
                                  const std::optional<std::vector<double>>& grid = std::nullopt);

std::string density_csv(const DensityEstimate& d);
std::string atom_report_json(const AtomReport& r, Space space);

}  // namespace freemul
