#pragma once

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace freemul {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Where a measure lives: the half-line [0, inf) or the unit circle.
/// Circle locations are angles in [0, 2pi).
enum class Space { HalfLine, Circle };

std::string_view to_string(Space space);
Space space_from_string(std::string_view name);

struct PointMass {
  double location = 0.0;
  double mass = 0.0;
};

/// Sampled density. On the half-line the values are a density with respect to
/// Lebesgue measure and the part is the piecewise-linear interpolant, zero off
/// [grid.front(), grid.back()]. On the circle the values are a density with
/// respect to dtheta/2pi and the grid is read periodically.
struct DensityPart {
  std::vector<double> grid;
  std::vector<double> values;
};

/// Probability measure on the half-line or the circle: finitely many atoms plus
/// an optional sampled density. Immutable once built; every constructor path
/// runs the same validation and normalization.
class Measure {
 public:
  /// Validates, merges atoms closer than 1e-12, reduces circle angles mod 2pi
  /// and renormalizes when the total mass is within 1% of one.
  static Measure make(Space space, std::vector<PointMass> atoms,
                      std::optional<DensityPart> density = std::nullopt);

  Space space() const noexcept { return space_; }
  const std::vector<PointMass>& atoms() const noexcept { return atoms_; }
  const std::optional<DensityPart>& density() const noexcept { return density_; }

  double atom_mass() const;
  double density_mass() const;

  /// Circle densities on an equispaced periodic grid are evaluated spectrally.
  bool has_uniform_circle_grid() const noexcept { return uniform_circle_grid_; }

 private:
  Measure() = default;

  Space space_ = Space::HalfLine;
  std::vector<PointMass> atoms_;
  std::optional<DensityPart> density_;
  bool uniform_circle_grid_ = false;
};

/// Trapezoid quadrature weights for a density grid; circle weights are periodic
/// and already include the 1/2pi normalization.
std::vector<double> trapezoid_weights(const DensityPart& density, Space space);

/// Mass of a density part under the trapezoid rule.
double density_integral(const DensityPart& density, Space space);

Measure load_measure(std::string_view text);
std::string dump_measure(const Measure& m);

/// m_k = integral of zeta^k, k = 1..order. Circle atoms use zeta = e^{i location}.
std::vector<cplx> moments(const Measure& m, int order);

/// Circle measure rotated by `angle`, i.e. the convolution with a point mass at
/// e^{i angle}.
Measure rotate(const Measure& m, double angle);

double total_mass(const Measure& m);

/// Reduces an angle to [0, 2pi).
double wrap_angle(double angle);

}  // namespace freemul
