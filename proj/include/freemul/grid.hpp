#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "freemul/measure.hpp"

namespace freemul {

/// Parses `start:end:count` (uniform, inclusive) or `geom:start:end:count`
/// (geometric, inclusive, start > 0).
std::vector<double> parse_grid(std::string_view spec);

std::vector<double> uniform_grid(double start, double end, int count);
std::vector<double> geometric_grid(double start, double end, int count);

/// Points strictly inside (a, b), clustered double-exponentially toward both
/// ends so that integrable endpoint singularities are resolved. `count`
/// points come from a tanh-sinh map; short geometric runs then continue
/// toward each end, down to about 1e-15 (b - a).
std::vector<double> clustered_interior(double a, double b, int count);

/// Grid for a recovered density: clustered on every segment between
/// consecutive break points (support ends and atom locations). Half-line
/// segments away from 0 are clustered in log x and sized by their log length.
/// On the circle the break points are angles and the segments wrap around;
/// without break points the circle grid is uniform. `count` is the
/// approximate total size. Segments for which `idle(a, b)` holds get the
/// minimum of 16 points.
std::vector<double> break_point_grid(Space space, std::vector<double> breaks, int count,
                                     const std::function<bool(double, double)>& idle = {});

/// [inf supp, sup supp] of a half-line measure.
struct Hull {
  double lo = 0.0;
  double hi = 0.0;
};
Hull support_hull(const Measure& m);

}  // namespace freemul
