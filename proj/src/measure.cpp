#include "freemul/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "freemul/error.hpp"

namespace freemul {

namespace {

constexpr double kMergeDistance = 1e-12;
constexpr double kNormalizationSlack = 0.01;
constexpr double kMinFirstMoment = 1e-10;

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::MalformedDocument, std::string("non-finite ") + what);
  }
}

std::vector<PointMass> merge_atoms(std::vector<PointMass> atoms, Space space) {
  for (auto& a : atoms) {
    check_finite(a.location, "atom location");
    check_finite(a.mass, "atom mass");
    if (a.mass <= 0.0) {
      throw Error(ErrorCode::MalformedDocument, "atom masses must be positive");
    }
    if (space == Space::HalfLine && a.location < 0.0) {
      throw Error(ErrorCode::MalformedDocument, "half-line atom at negative location");
    }
    if (space == Space::Circle) a.location = wrap_angle(a.location);
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const PointMass& a, const PointMass& b) { return a.location < b.location; });
  std::vector<PointMass> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && a.location - merged.back().location < kMergeDistance) {
      merged.back().mass += a.mass;
    } else {
      merged.push_back(a);
    }
  }
  if (space == Space::Circle && merged.size() > 1 &&
      merged.front().location + kTwoPi - merged.back().location < kMergeDistance) {
    merged.front().mass += merged.back().mass;
    merged.pop_back();
  }
  return merged;
}

DensityPart canonical_density(DensityPart d, Space space) {
  if (d.grid.size() != d.values.size()) {
    throw Error(ErrorCode::MalformedDocument, "density grid and values differ in length");
  }
  if (d.grid.size() < 2) {
    throw Error(ErrorCode::MalformedDocument, "density needs at least two grid points");
  }
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    check_finite(d.grid[i], "density grid point");
    check_finite(d.values[i], "density value");
    if (d.values[i] < 0.0) {
      throw Error(ErrorCode::MalformedDocument, "negative density value");
    }
  }
  if (space == Space::Circle) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(d.grid.size());
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
      pts.emplace_back(wrap_angle(d.grid[i]), d.values[i]);
    }
    std::sort(pts.begin(), pts.end());
    // An inclusive [0, 2pi] grid maps its last point onto the first.
    std::vector<std::pair<double, double>> uniq;
    for (const auto& p : pts) {
      if (!uniq.empty() && p.first - uniq.back().first < kMergeDistance) continue;
      uniq.push_back(p);
    }
    if (uniq.size() > 1 && uniq.front().first + kTwoPi - uniq.back().first < kMergeDistance) {
      uniq.pop_back();
    }
    if (uniq.size() < 2) {
      throw Error(ErrorCode::MalformedDocument, "circle density needs two distinct angles");
    }
    d.grid.clear();
    d.values.clear();
    for (const auto& [g, v] : uniq) {
      d.grid.push_back(g);
      d.values.push_back(v);
    }
  } else {
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
      if (d.grid[i] < 0.0) {
        throw Error(ErrorCode::MalformedDocument, "half-line density grid below zero");
      }
      if (i > 0 && !(d.grid[i] > d.grid[i - 1])) {
        throw Error(ErrorCode::MalformedDocument, "density grid must be strictly increasing");
      }
    }
  }
  return d;
}

bool is_uniform_periodic(const DensityPart& d) {
  const std::size_t n = d.grid.size();
  const double h = kTwoPi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double next = (i + 1 < n) ? d.grid[i + 1] : d.grid[0] + kTwoPi;
    if (std::abs(next - d.grid[i] - h) > 1e-9 * h) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(Space space) {
  return space == Space::HalfLine ? "r_plus" : "circle";
}

Space space_from_string(std::string_view name) {
  if (name == "r_plus") return Space::HalfLine;
  if (name == "circle") return Space::Circle;
  throw Error(ErrorCode::MalformedDocument, "unknown space '" + std::string(name) + "'");
}

double wrap_angle(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

std::vector<double> trapezoid_weights(const DensityPart& density, Space space) {
  const auto& g = density.grid;
  const std::size_t n = g.size();
  std::vector<double> w(n, 0.0);
  if (space == Space::HalfLine) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double h = g[i + 1] - g[i];
      w[i] += 0.5 * h;
      w[i + 1] += 0.5 * h;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double next = (i + 1 < n) ? g[i + 1] : g[0] + kTwoPi;
      const double h = next - g[i];
      w[i] += 0.5 * h / kTwoPi;
      w[(i + 1) % n] += 0.5 * h / kTwoPi;
    }
  }
  return w;
}

double density_integral(const DensityPart& density, Space space) {
  const auto w = trapezoid_weights(density, space);
  return std::inner_product(w.begin(), w.end(), density.values.begin(), 0.0);
}

Measure Measure::make(Space space, std::vector<PointMass> atoms,
                      std::optional<DensityPart> density) {
  Measure m;
  m.space_ = space;
  m.atoms_ = merge_atoms(std::move(atoms), space);
  if (density) {
    m.density_ = canonical_density(std::move(*density), space);
    if (density_integral(*m.density_, space) <= 0.0) m.density_.reset();
  }

  const double atom_total = m.atom_mass();
  const double dens_total = m.density_mass();
  const double total = atom_total + dens_total;
  if (!(std::abs(total - 1.0) <= kNormalizationSlack)) {
    throw Error(ErrorCode::MassNotNormalizable,
                "total mass " + std::to_string(total) + " is not within 1% of 1");
  }
  if (m.density_ && atom_total < 1.0) {
    const double scale = (1.0 - atom_total) / dens_total;
    for (auto& v : m.density_->values) v *= scale;
  } else {
    if (m.density_) {
      for (auto& v : m.density_->values) v /= total;
    }
    for (auto& a : m.atoms_) a.mass /= total;
  }

  if (space == Space::HalfLine) {
    const bool only_zero = !m.density_ && m.atoms_.size() == 1 && m.atoms_[0].location == 0.0;
    if (only_zero) throw Error(ErrorCode::DeltaZeroHalfLine, "measure is the point mass at 0");
  } else {
    m.uniform_circle_grid_ = m.density_ && is_uniform_periodic(*m.density_);
    const cplx m1 = moments(m, 1).front();
    if (std::abs(m1) < kMinFirstMoment) {
      throw Error(ErrorCode::ZeroFirstMomentCircle, "circle measure has vanishing first moment");
    }
  }
  return m;
}

double Measure::atom_mass() const {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.mass;
  return s;
}

double Measure::density_mass() const {
  return density_ ? density_integral(*density_, space_) : 0.0;
}

double total_mass(const Measure& m) { return m.atom_mass() + m.density_mass(); }

std::vector<cplx> moments(const Measure& m, int order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "moment order must be positive");
  std::vector<cplx> out(static_cast<std::size_t>(order), cplx{0.0, 0.0});
  auto accumulate = [&](double location, double weight) {
    const cplx zeta = m.space() == Space::HalfLine ? cplx{location, 0.0}
                                                    : std::polar(1.0, location);
    cplx p = weight;
    for (int k = 0; k < order; ++k) {
      p *= zeta;
      out[static_cast<std::size_t>(k)] += p;
    }
  };
  for (const auto& a : m.atoms()) accumulate(a.location, a.mass);
  if (m.density()) {
    const auto w = trapezoid_weights(*m.density(), m.space());
    for (std::size_t i = 0; i < w.size(); ++i) {
      accumulate(m.density()->grid[i], w[i] * m.density()->values[i]);
    }
  }
  return out;
}

Measure rotate(const Measure& m, double angle) {
  if (m.space() != Space::Circle) {
    throw Error(ErrorCode::WrongSpace, "rotation is defined for circle measures only");
  }
  std::vector<PointMass> atoms = m.atoms();
  for (auto& a : atoms) a.location = wrap_angle(a.location + angle);
  std::optional<DensityPart> density = m.density();
  if (density) {
    for (auto& g : density->grid) g += angle;
  }
  return Measure::make(Space::Circle, std::move(atoms), std::move(density));
}

Measure load_measure(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  try {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "expected an object");
    const Space space = space_from_string(doc.at("space").get<std::string>());
    std::vector<PointMass> atoms;
    if (doc.contains("atoms")) {
      for (const auto& a : doc.at("atoms")) {
        atoms.push_back({a.at("location").get<double>(), a.at("mass").get<double>()});
      }
    }
    std::optional<DensityPart> density;
    if (doc.contains("density") && !doc.at("density").is_null()) {
      DensityPart d;
      d.grid = doc.at("density").at("grid").get<std::vector<double>>();
      d.values = doc.at("density").at("values").get<std::vector<double>>();
      density = std::move(d);
    }
    return Measure::make(space, std::move(atoms), std::move(density));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
}

std::string dump_measure(const Measure& m) {
  nlohmann::ordered_json doc;
  doc["space"] = std::string(to_string(m.space()));
  doc["atoms"] = nlohmann::ordered_json::array();
  for (const auto& a : m.atoms()) {
    doc["atoms"].push_back({{"location", a.location}, {"mass", a.mass}});
  }
  if (m.density()) {
    doc["density"] = {{"grid", m.density()->grid}, {"values", m.density()->values}};
  }
  return doc.dump(2);
}

}  // namespace freemul
