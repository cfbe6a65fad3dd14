#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "freemul/error.hpp"
#include "freemul/grid.hpp"
#include "freemul/measure.hpp"

using namespace freemul;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

DensityPart flat(double a, double b, int n, double v) {
  DensityPart d;
  for (int i = 0; i < n; ++i) {
    d.grid.push_back(a + (b - a) * i / (n - 1));
    d.values.push_back(v);
  }
  return d;
}

DensityPart periodic(int n, double v) {
  DensityPart d;
  for (int i = 0; i < n; ++i) {
    d.grid.push_back(kTwoPi * i / n);
    d.values.push_back(v);
  }
  return d;
}

}  // namespace

TEST_SUITE("measure") {
  TEST_CASE("load a single atom") {
    const Measure m = load_measure(R"({"space": "r_plus", "atoms": [{"location": 1, "mass": 1}]})");
    CHECK(m.space() == Space::HalfLine);
    REQUIRE(m.atoms().size() == 1);
    CHECK(m.atoms()[0].location == 1.0);
    CHECK(m.atoms()[0].mass == 1.0);
    CHECK_FALSE(m.density().has_value());
  }

  TEST_CASE("two atoms including the origin") {
    const Measure m = load_measure(
        R"({"space": "r_plus", "atoms": [{"location": 0, "mass": 0.5}, {"location": 1, "mass": 0.5}]})");
    REQUIRE(m.atoms().size() == 2);
    CHECK(total_mass(m) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("Haar measure is rejected") {
    CHECK(code_of([] { Measure::make(Space::Circle, {}, periodic(64, 1.0)); }) ==
          ErrorCode::ZeroFirstMomentCircle);
  }

  TEST_CASE("point mass at zero is rejected") {
    CHECK(code_of([] { Measure::make(Space::HalfLine, {{0.0, 1.0}}); }) ==
          ErrorCode::DeltaZeroHalfLine);
  }

  TEST_CASE("normalization window") {
    const Measure m = Measure::make(Space::HalfLine, {{1.0, 0.995}});
    CHECK(total_mass(m) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(code_of([] { Measure::make(Space::HalfLine, {{1.0, 0.5}}); }) ==
          ErrorCode::MassNotNormalizable);
    // The density absorbs the deficit; atoms stay as given.
    const Measure mix = Measure::make(Space::HalfLine, {{0.5, 0.5}}, flat(1.0, 3.0, 11, 0.252));
    CHECK(mix.atoms()[0].mass == 0.5);
    CHECK(total_mass(mix) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("malformed documents") {
    CHECK(code_of([] { load_measure("{"); }) == ErrorCode::MalformedDocument);
    CHECK(code_of([] { load_measure(R"({"space": "line", "atoms": []})"); }) ==
          ErrorCode::MalformedDocument);
    CHECK(code_of([] { load_measure(R"({"space": "r_plus", "atoms": [{"location": 1}]})"); }) ==
          ErrorCode::MalformedDocument);
    CHECK(code_of([] {
            load_measure(R"({"space": "r_plus", "atoms": [{"location": -1, "mass": 1}]})");
          }) == ErrorCode::MalformedDocument);
    CHECK(code_of([] {
            load_measure(
                R"({"space": "r_plus", "atoms": [], "density": {"grid": [0, 1], "values": [1]}})");
          }) == ErrorCode::MalformedDocument);
  }

  TEST_CASE("close atoms merge and circle angles wrap") {
    const Measure m = Measure::make(Space::HalfLine, {{1.0, 0.5}, {1.0 + 1e-13, 0.5}});
    REQUIRE(m.atoms().size() == 1);
    CHECK(m.atoms()[0].mass == doctest::Approx(1.0));
    const Measure c = Measure::make(Space::Circle, {{kTwoPi + 1.0, 1.0}});
    CHECK(c.atoms()[0].location == doctest::Approx(1.0).epsilon(1e-14));
    const Measure neg = Measure::make(Space::Circle, {{-1.0, 1.0}});
    CHECK(neg.atoms()[0].location == doctest::Approx(kTwoPi - 1.0).epsilon(1e-14));
  }

  TEST_CASE("moments") {
    const auto d1 = moments(Measure::make(Space::HalfLine, {{1.0, 1.0}}), 3);
    for (const auto& v : d1) CHECK(std::abs(v - cplx{1.0, 0.0}) == 0.0);
    const auto b = moments(Measure::make(Space::HalfLine, {{1.0, 0.5}, {2.0, 0.5}}), 2);
    CHECK(std::abs(b[0] - 1.5) < 1e-15);
    CHECK(std::abs(b[1] - 2.5) < 1e-15);
    const auto c = moments(Measure::make(Space::Circle, {{0.0, 0.5}, {kPi / 2, 0.5}}), 2);
    CHECK(std::abs(c[0] - cplx{0.5, 0.5}) < 1e-15);
    CHECK(std::abs(c[1]) < 1e-15);
  }

  TEST_CASE("density moments use the trapezoid rule") {
    // Uniform on [0, 2]: m_k = 2^k/(k+1) up to O(h^2).
    const Measure m = Measure::make(Space::HalfLine, {}, flat(0.0, 2.0, 2001, 0.5));
    const auto mo = moments(m, 3);
    CHECK(mo[0].real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mo[1].real() == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
    CHECK(mo[2].real() == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(total_mass(m) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("total mass examples") {
    CHECK(total_mass(Measure::make(Space::HalfLine, {{1.0, 1.0}})) == 1.0);
    CHECK(total_mass(Measure::make(Space::HalfLine, {{0.0, 0.5}, {1.0, 0.5}})) == 1.0);
    CHECK(total_mass(Measure::make(Space::HalfLine, {}, flat(0.0, 2.0, 3, 0.5))) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("rotation") {
    const Measure d = Measure::make(Space::Circle, {{0.0, 1.0}});
    const Measure r = rotate(d, kPi);
    CHECK(r.atoms()[0].location == doctest::Approx(kPi).epsilon(1e-15));
    const Measure mix = Measure::make(Space::Circle, {{0.3, 0.6}, {2.0, 0.2}}, periodic(64, 0.2));
    const Measure same = rotate(mix, 0.0);
    CHECK(same.atoms().size() == mix.atoms().size());
    const Measure back = rotate(rotate(mix, 1.1), -1.1);
    const auto m0 = moments(mix, 8);
    const auto m1 = moments(back, 8);
    const auto m2 = moments(rotate(mix, 2.3), 8);
    for (int k = 0; k < 8; ++k) {
      CHECK(std::abs(m0[k] - m1[k]) < 1e-12);
      CHECK(std::abs(std::abs(m0[k]) - std::abs(m2[k])) < 1e-12);
    }
    CHECK(total_mass(rotate(mix, 2.3)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(code_of([] { rotate(Measure::make(Space::HalfLine, {{1.0, 1.0}}), 1.0); }) ==
          ErrorCode::WrongSpace);
  }

  TEST_CASE("document round trip") {
    const Measure m = Measure::make(Space::HalfLine, {{0.5, 0.5}}, flat(1.0, 3.0, 5, 0.25));
    const Measure back = load_measure(dump_measure(m));
    CHECK(back.atoms()[0].location == 0.5);
    CHECK(back.density()->values == m.density()->values);
    CHECK(back.density()->grid == m.density()->grid);
  }

  TEST_CASE("loaded measures are normalized") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<PointMass> atoms;
      double s = 0.0;
      for (int i = 0; i < 4; ++i) {
        atoms.push_back({5.0 * u(rng), u(rng)});
        s += atoms.back().mass;
      }
      for (auto& a : atoms) a.mass *= (1.0 + 0.009 * (2.0 * u(rng) - 1.0)) / s;
      const Measure m = Measure::make(Space::HalfLine, atoms);
      CHECK(std::abs(total_mass(m) - 1.0) <= 1e-9);
    }
  }
}

TEST_SUITE("grid") {
  TEST_CASE("grid specs") {
    const auto g = parse_grid("1:4:4");
    REQUIRE(g.size() == 4);
    CHECK(g.front() == 1.0);
    CHECK(g.back() == 4.0);
    CHECK(g[1] == doctest::Approx(2.0));
    const auto h = parse_grid("geom:1:100:3");
    CHECK(h[1] == doctest::Approx(10.0));
    CHECK(h.back() == 100.0);
    CHECK(parse_grid("2:2:1") == std::vector<double>{2.0});
    CHECK(code_of([] { parse_grid("1:4"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { parse_grid("1:x:4"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { parse_grid("1:4:0"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { parse_grid("geom:0:4:3"); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("clustered interior points") {
    const auto c = clustered_interior(1.0, 2.0, 200);
    REQUIRE(c.size() >= 200);
    CHECK(c.size() <= 260);
    for (std::size_t i = 0; i + 1 < c.size(); ++i) CHECK(c[i] < c[i + 1]);
    CHECK(c.front() > 1.0);
    CHECK(c.back() < 2.0);
    CHECK(c.front() - 1.0 < 1e-14);
    CHECK(2.0 - c.back() < 1e-14);
  }

  TEST_CASE("break point grids") {
    const auto g = break_point_grid(Space::HalfLine, {1.0, 4.0, 2.0}, 300);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) CHECK(g[i] < g[i + 1]);
    // Break points themselves are excluded; points crowd toward them.
    CHECK(g.front() > 1.0);
    CHECK(g.front() - 1.0 < 1e-6);
    CHECK(g.back() < 4.0);
    CHECK(std::find(g.begin(), g.end(), 2.0) == g.end());
    const auto above = std::upper_bound(g.begin(), g.end(), 2.0);
    CHECK(*above - 2.0 < 1e-6);
    CHECK(2.0 - *(above - 1) < 1e-6);
    const auto u = break_point_grid(Space::Circle, {}, 64);
    CHECK(u.size() == 64);
    const auto w = break_point_grid(Space::Circle, {1.0, 5.0}, 200);
    for (double x : w) {
      CHECK(x >= 0.0);
      CHECK(x < kTwoPi);
    }
  }

  TEST_CASE("support hull") {
    const Measure m = Measure::make(Space::HalfLine, {{0.5, 0.5}}, flat(1.0, 3.0, 5, 0.25));
    const Hull h = support_hull(m);
    CHECK(h.lo == 0.5);
    CHECK(h.hi == 3.0);
  }
}
