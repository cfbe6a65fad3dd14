#include <doctest.h>

#include <cmath>
#include <memory>

#include <nlohmann/json.hpp>

#include "freemul/error.hpp"
#include "freemul/measure.hpp"
#include "freemul/recover.hpp"
#include "freemul/series.hpp"
#include "freemul/subordination.hpp"
#include "oracles.hpp"

using namespace freemul;

namespace {

Measure half(std::vector<PointMass> atoms) { return Measure::make(Space::HalfLine, atoms); }

Measure atom_plus_haar() {
  DensityPart d;
  for (int i = 0; i < 64; ++i) {
    d.grid.push_back(kTwoPi * i / 64);
    d.values.push_back(0.2);
  }
  return Measure::make(Space::Circle, {{0.0, 0.8}}, d);
}

cplx atom_haar_eta2(cplx z) {
  return (1.0 - 0.32 * z - std::sqrt(1.0 - 0.64 * z)) / (0.08 * z);
}

double moment_error(const Measure& m, double t, const Measure& mu_t) {
  const auto got = moments(mu_t, 8);
  const auto want = semigroup_moments(m, t, 8);
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) worst = std::max(worst, std::abs(got[k] - want[k]) / std::abs(want[k]));
  return worst;
}

}  // namespace

TEST_SUITE("recover") {
  TEST_CASE("point mass has no density") {
    const MeasureEta d1(half({{1.0, 1.0}}));
    std::vector<double> grid;
    for (int i = 0; i < 40; ++i) grid.push_back(0.3 + 0.05 * i + (i >= 14 ? 0.01 : 0.0));
    const DensityEstimate d = density_rplus(d1, 1.7, grid, {{{1.0, 1.0}}, {}});
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(d.values[i]) <= 1e-9);
  }

  TEST_CASE("arcsine density at t = 2") {
    const MeasureEta b01(half({{0.0, 0.5}, {1.0, 0.5}}));
    std::vector<double> grid;
    for (int i = 1; i < 50; ++i) grid.push_back(i / 50.0);
    const DensityEstimate d = density_rplus(b01, 2.0, grid, {{{0.0, 0.5}}, {1.0}});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid[i];
      const double ref = 1.0 / (2.0 * kPi * std::sqrt(x * (1.0 - x)));
      CHECK(d.converged[i]);
      CHECK(std::abs(d.values[i] - ref) <= 1e-6 * ref);
    }
    const MassAtZero z = mass_at_zero(b01, 2.0);
    CHECK(std::abs(z.mass - 0.5) <= 1e-6);
  }

  TEST_CASE("atom plus Haar: circle density at t = 2") {
    const MeasureEta src(atom_plus_haar());
    std::vector<double> grid;
    for (int i = 1; i < 60; ++i) grid.push_back(kTwoPi * i / 60.0);
    const DensityEstimate d = density_circle(src, 2.0, grid, {});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const cplx e = atom_haar_eta2(std::polar(1.0, -grid[i]));
      const double ref = ((1.0 + e) / (1.0 - e)).real();
      CHECK(std::abs(d.values[i] - ref) <= 1e-6 * std::max(1.0, ref));
    }
  }

  TEST_CASE("point masses are detected exactly") {
    const MeasureEta d1(half({{1.0, 1.0}}));
    for (double t : {1.3, 2.5}) {
      const AtomReport r = detect_atoms(d1, t, 0.2, 5.0);
      REQUIRE(r.atoms.size() == 1);
      CHECK(std::abs(r.atoms[0].location - 1.0) <= 1e-8);
      CHECK(std::abs(r.atoms[0].mass - 1.0) <= 1e-8);
    }
    for (double a : {0.3, 1.0, 2.0}) {
      const MeasureEta da(Measure::make(Space::Circle, {{a, 1.0}}));
      const double t = 2.0;
      const AtomReport r = detect_atoms(da, t, 0.0, 0.0);
      REQUIRE(r.atoms.size() == 1);
      const double d = std::abs(wrap_angle(r.atoms[0].location - a * t));
      CHECK(std::min(d, kTwoPi - d) <= 1e-8);
      CHECK(std::abs(r.atoms[0].mass - 1.0) <= 1e-8);
    }
  }

  TEST_CASE("atoms of two-point measures") {
    // mu_t has an atom at x^t of mass t mu({x}) - (t - 1) whenever this is positive.
    const MeasureEta b14(half({{1.0, 0.5}, {4.0, 0.5}}));
    for (double t : {1.2, 1.5}) {
      const AtomReport r = detect_atoms(b14, t, 0.5, 20.0);
      REQUIRE(r.atoms.size() == 2);
      const double mass = t * 0.5 - (t - 1.0);
      CHECK(std::abs(r.atoms[0].location - 1.0) <= 1e-8);
      CHECK(std::abs(r.atoms[1].location - std::pow(4.0, t)) <= 1e-8 * std::pow(4.0, t));
      for (const auto& a : r.atoms) {
        CHECK(a.mass > 0.0);
        CHECK(a.mass <= 0.5);
        CHECK(std::abs(a.mass - mass) <= 1e-7);
      }
    }
    const MeasureEta b12(half({{1.0, 0.5}, {2.0, 0.5}}));
    CHECK(detect_atoms(b12, 2.0, 0.5, 5.0).atoms.empty());
  }

  TEST_CASE("Julia-Caratheodory masses at t = 1") {
    const MeasureEta src(half({{0.5, 0.2}, {1.0, 0.5}, {3.0, 0.3}}));
    const AtomReport r = detect_atoms(src, 1.0, 0.2, 5.0);
    REQUIRE(r.atoms.size() == 3);
    const double masses[] = {0.2, 0.5, 0.3};
    for (int i = 0; i < 3; ++i) CHECK(std::abs(r.atoms[i].mass - masses[i]) <= 1e-6);
    const MeasureEta c(Measure::make(Space::Circle, {{0.4, 0.7}, {2.0, 0.3}}));
    const AtomReport rc = detect_atoms(c, 1.0, 0.0, 0.0);
    REQUIRE(rc.atoms.size() == 2);
    CHECK(std::abs(rc.atoms[0].mass - 0.7) <= 1e-6);
    CHECK(std::abs(rc.atoms[1].mass - 0.3) <= 1e-6);
  }

  TEST_CASE("mass at zero") {
    const MeasureEta d1(half({{1.0, 1.0}}));
    const MassAtZero none = mass_at_zero(d1, 2.0);
    CHECK(none.mass == 0.0);
    CHECK(none.diverges);
    const MeasureEta b01(half({{0.0, 0.5}, {1.0, 0.5}}));
    CHECK(std::abs(mass_at_zero(b01, 1.0).mass - 0.5) <= 1e-6);
    const MassAtZero z = mass_at_zero(b01, 1.5);
    CHECK(z.mass >= 0.0);
    CHECK(z.mass <= 0.5 + 1e-9);
    const MeasureEta three(half({{0.0, 0.3}, {1.0, 0.4}, {2.0, 0.3}}));
    CHECK(std::abs(mass_at_zero(three, 1.0).mass - 0.3) <= 1e-6);
  }

  TEST_CASE("assembly") {
    DensityEstimate empty;
    AtomReport one;
    one.atoms.push_back({1.0, 1.0, 1.0, 0.0});
    const AssembledMeasure d = assemble_measure(one, empty, 0.0, Space::HalfLine);
    CHECK(d.measure.atoms().size() == 1);
    CHECK_FALSE(d.measure.density().has_value());

    DensityEstimate flat;
    flat.space = Space::HalfLine;
    for (int i = 0; i <= 10; ++i) {
      flat.grid.push_back(1.0 + 0.1 * i);
      flat.values.push_back(1.0);
    }
    const AssembledMeasure f = assemble_measure(AtomReport{}, flat, 0.0, Space::HalfLine);
    CHECK(f.measure.atoms().empty());
    CHECK(total_mass(f.measure) == doctest::Approx(1.0).epsilon(1e-12));

    AtomReport light;
    light.atoms.push_back({1.0, 0.6, 1.0, 0.0});
    for (double& v : flat.values) v = 0.15;
    try {
      assemble_measure(light, flat, 0.0, Space::HalfLine);
      FAIL("expected MassAuditFailure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MassAuditFailure);
    }
  }

  TEST_CASE("pipeline audits") {
    SUBCASE("1/2 delta_1 + 1/2 delta_2 at t = 1.5") {
      const Measure m = half({{1.0, 0.5}, {2.0, 0.5}});
      const SemigroupResult r = compute_semigroup(m, 1.5);
      CHECK(std::abs(r.assembled.raw_total - 1.0) <= 1e-4);
      for (double v : r.density.values) CHECK(v >= 0.0);
      CHECK(r.density.max_clamp <= 1e-8);
      CHECK(moment_error(m, 1.5, r.assembled.measure) <= 1e-3);
    }
    SUBCASE("atom plus Haar at t = 1.3") {
      const Measure m = atom_plus_haar();
      const SemigroupResult r = compute_semigroup(m, 1.3);
      CHECK(std::abs(r.assembled.raw_total - 1.0) <= 1e-4);
      REQUIRE(r.atoms.atoms.size() == 1);
      CHECK(std::abs(r.atoms.atoms[0].mass - (1.3 * 0.8 - 0.3)) <= 1e-7);
      CHECK(moment_error(m, 1.3, r.assembled.measure) <= 1e-3);
    }
    SUBCASE("1/2 delta_0 + 1/2 delta_1 at t = 1.5") {
      const Measure m = half({{0.0, 0.5}, {1.0, 0.5}});
      const SemigroupResult r = compute_semigroup(m, 1.5);
      CHECK(std::abs(r.assembled.raw_total - 1.0) <= 1e-4);
      CHECK(moment_error(m, 1.5, r.assembled.measure) <= 1e-3);
    }
  }

  TEST_CASE("Herglotz positivity of mu_t") {
    const auto base = std::make_shared<MeasureEta>(atom_plus_haar());
    const SemigroupEta mu_t(base, 1.7);
    for (const cplx z : oracle::disk(100, 43, 0.99)) {
      const cplx e = mu_t.eta(z).value;
      CHECK(((1.0 + e) / (1.0 - e)).real() >= -1e-12);
    }
  }

  TEST_CASE("non-convergence at an atom") {
    const MeasureEta b14(half({{1.0, 0.5}, {4.0, 0.5}}));
    const DensityEstimate d = density_rplus(b14, 1.2, {1.0, 2.0}, {});
    CHECK_FALSE(d.converged[0]);
  }

  TEST_CASE("automatic grid and outputs") {
    const Measure d1 = half({{1.0, 1.0}});
    const SemigroupResult r = compute_semigroup(d1, 2.5);
    CHECK(r.density.grid.empty());
    CHECK(density_csv(r.density) == "x,value,extrapolation_error\n");
    const auto doc = nlohmann::json::parse(atom_report_json(r.atoms, Space::HalfLine));
    CHECK(doc.at("space") == "r_plus");
    REQUIRE(doc.at("atoms").size() == 1);
    CHECK(doc.at("atoms")[0].at("mass").get<double>() == doctest::Approx(1.0).epsilon(1e-8));
  }
}
