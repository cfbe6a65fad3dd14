#include "freemul/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "freemul/error.hpp"

namespace freemul {

namespace {

constexpr double kClusterScale = 2.59;  // end gap ~1e-9 of the segment
constexpr double kEndFloor = 1e-15;
constexpr double kEndStep = 1.7782794100389228;  // four points per decade
constexpr int kMinSegment = 16;

double parse_number(std::string_view s) {
  try {
    std::size_t used = 0;
    const std::string str(s);
    const double v = std::stod(str, &used);
    if (used != str.size()) throw Error(ErrorCode::InvalidArgument, "bad number in grid spec");
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, "bad number in grid spec");
  }
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    parts.push_back(s.substr(pos, next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

}  // namespace

std::vector<double> uniform_grid(double start, double end, int count) {
  if (count < 1 || !std::isfinite(start) || !std::isfinite(end)) {
    throw Error(ErrorCode::InvalidArgument, "grid needs a positive count and finite ends");
  }
  if (count == 1) return {start};
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = start + (end - start) * i / (count - 1);
  g.back() = end;
  return g;
}

std::vector<double> geometric_grid(double start, double end, int count) {
  if (!(start > 0.0) || !(end > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "geometric grid needs positive ends");
  }
  std::vector<double> g = uniform_grid(std::log(start), std::log(end), count);
  for (double& v : g) v = std::exp(v);
  g.front() = start;
  g.back() = end;
  return g;
}

std::vector<double> parse_grid(std::string_view spec) {
  std::vector<std::string_view> parts = split(spec, ':');
  bool geometric = false;
  if (!parts.empty() && parts.front() == "geom") {
    geometric = true;
    parts.erase(parts.begin());
  }
  if (parts.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "grid spec must be start:end:count");
  }
  const double a = parse_number(parts[0]);
  const double b = parse_number(parts[1]);
  int n = 0;
  const auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), n);
  if (ec != std::errc() || ptr != parts[2].data() + parts[2].size() || n < 1) {
    throw Error(ErrorCode::InvalidArgument, "grid count must be a positive integer");
  }
  return geometric ? geometric_grid(a, b, n) : uniform_grid(a, b, n);
}

std::vector<double> clustered_interior(double a, double b, int count) {
  if (!(b > a) || count < 1) throw Error(ErrorCode::InvalidArgument, "empty segment");
  std::vector<double> g(count);
  for (int j = 0; j < count; ++j) {
    const double u = 2.0 * (j + 0.5) / count - 1.0;
    const double s = std::tanh(0.5 * kPi * std::sinh(kClusterScale * u));
    g[j] = a + 0.5 * (b - a) * (1.0 + s);
  }
  // Geometric runs carry both ends further in, down to kEndFloor (b - a).
  const double first = 0.5 * (1.0 + std::tanh(0.5 * kPi * std::sinh(kClusterScale * (1.0 / count - 1.0))));
  std::vector<double> low;
  std::vector<double> high;
  for (double r = first / kEndStep; r >= kEndFloor; r /= kEndStep) {
    const double lo = a + (b - a) * r;
    const double hi = b - (b - a) * r;
    if (lo > a && lo < (low.empty() ? g.front() : low.back())) low.push_back(lo);
    if (hi < b && hi > (high.empty() ? g.back() : high.back())) high.push_back(hi);
  }
  std::vector<double> out(low.rbegin(), low.rend());
  out.insert(out.end(), g.begin(), g.end());
  out.insert(out.end(), high.begin(), high.end());
  return out;
}

std::vector<double> break_point_grid(Space space, std::vector<double> breaks, int count,
                                     const std::function<bool(double, double)>& idle) {
  if (count < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two points");
  std::sort(breaks.begin(), breaks.end());
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-8 * std::max(1.0, std::abs(x)); };
  breaks.erase(std::unique(breaks.begin(), breaks.end(), close), breaks.end());
  auto is_idle = [&](double a, double b) { return idle && idle(a, b); };
  std::vector<double> grid;
  if (space == Space::Circle) {
    for (double& b : breaks) b = wrap_angle(b);
    std::sort(breaks.begin(), breaks.end());
    if (breaks.empty()) return uniform_grid(0.0, kTwoPi * (count - 1) / count, count);
    const std::size_t n = breaks.size();
    auto end_of = [&](std::size_t i) { return i + 1 < n ? breaks[i + 1] : breaks[0] + kTwoPi; };
    double span = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_idle(breaks[i], end_of(i))) span += end_of(i) - breaks[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double a = breaks[i];
      const double b = end_of(i);
      const int c = is_idle(a, b) || span <= 0.0
                        ? kMinSegment
                        : std::max(kMinSegment, static_cast<int>(std::lround(count * (b - a) / span)));
      for (double v : clustered_interior(a, b, c)) grid.push_back(wrap_angle(v));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
  }
  if (breaks.size() < 2) throw Error(ErrorCode::InvalidArgument, "half-line grid needs a support");
  // Log-x spacing away from 0; a segment starting at 0 weighs one e-fold.
  auto weight = [](double a, double b) { return a > 0.0 ? std::log(b / a) : 1.0; };
  double span = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!is_idle(breaks[i], breaks[i + 1])) span += weight(breaks[i], breaks[i + 1]);
  }
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    const int c = is_idle(a, b) || span <= 0.0
                      ? kMinSegment
                      : std::max(kMinSegment, static_cast<int>(std::lround(count * weight(a, b) / span)));
    // Drops points that round onto a break or a neighbour.
    auto push = [&](double v) {
      if (v > a && v < b && (grid.empty() || v > grid.back())) grid.push_back(v);
    };
    if (a > 0.0) {
      for (double v : clustered_interior(std::log(a), std::log(b), c)) push(std::exp(v));
    } else {
      for (double v : clustered_interior(a, b, c)) push(v);
    }
  }
  return grid;
}

Hull support_hull(const Measure& m) {
  if (m.space() != Space::HalfLine) throw Error(ErrorCode::WrongSpace, "hull of a circle measure");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& a : m.atoms()) {
    lo = std::min(lo, a.location);
    hi = std::max(hi, a.location);
  }
  if (m.density()) {
    const auto& d = *m.density();
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
      const bool live = d.values[i] > 0.0 || (i > 0 && d.values[i - 1] > 0.0) ||
                        (i + 1 < d.grid.size() && d.values[i + 1] > 0.0);
      if (!live) continue;
      lo = std::min(lo, d.grid[i]);
      hi = std::max(hi, d.grid[i]);
    }
  }
  return {lo, hi};
}

}  // namespace freemul
