#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nvbath/bath.hpp"
#include "nvbath/error.hpp"
#include "nvbath/parameters.hpp"

using namespace nvbath;

namespace {

BathGeometry geom(double rho, double t, double r) {
  BathGeometry g;
  g.density_ppm = rho;
  g.thickness = t;
  g.lateral_radius = r;
  return g;
}

}  // namespace

TEST_CASE("ppm conversion uses 8 atoms per cubic cell") {
  const auto c = PhysicalConstants::codata();
  CHECK(ppm_to_number_density(1.0, c) == doctest::Approx(1e-6 * 8.0 / std::pow(0.3567, 3)));
  const double exact = std::tgamma(4.0 / 3.0) * std::cbrt(3.0 / (4.0 * std::numbers::pi * ppm_to_number_density(1.0)));
  CHECK(mean_nn_distance_formula(1.0, c) == doctest::Approx(0.554 / std::cbrt(ppm_to_number_density(1.0))));
  CHECK(mean_nn_distance_formula(1.0, c) == doctest::Approx(exact).epsilon(1e-4));
}

TEST_CASE("bath generation is deterministic in the seed") {
  const auto g = geom(20.0, 5.0, 15.0);
  const auto a = generate_bath(g, 7);
  const auto b = generate_bath(g, 7);
  const auto c = generate_bath(g, 8);
  CHECK(bath_to_text(a) == bath_to_text(b));
  CHECK(bath_to_text(a) != bath_to_text(c));
}

TEST_CASE("spins respect slab, radius, exclusion and lattice sites") {
  const auto c = PhysicalConstants::codata();
  const auto g = geom(200.0, 3.0, 6.0);
  const auto cfg = generate_bath(g, 21);
  REQUIRE(!cfg.spins.empty());
  const double q = c.lattice_constant / 4.0;
  for (const auto& s : cfg.spins) {
    CHECK(std::abs(s.position.z()) <= g.thickness / 2.0 + 1e-12);
    CHECK(std::hypot(s.position.x(), s.position.y()) <= g.lateral_radius + 1e-12);
    CHECK(s.position.norm() >= c.bond_length() - 1e-12);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(s.position[k] / q - std::round(s.position[k] / q)) < 1e-9);
    CHECK(s.jt_axis >= 0);
    CHECK(s.jt_axis < 4);
    CHECK(std::abs(s.nuclear_m) == 0.5);
  }
}

TEST_CASE("mean spin count matches density times volume") {
  const auto g = geom(50.0, 4.0, 10.0);
  const double expected = ppm_to_number_density(50.0) * effective_thickness(4.0, PlacementMode::Lattice) *
                          std::numbers::pi * 100.0;
  const int n = 400;
  double sum = 0.0;
  for (int s = 0; s < n; ++s) sum += static_cast<double>(generate_bath(g, 1000 + s).spins.size());
  CHECK(std::abs(sum / n - expected) < 4.0 * std::sqrt(expected / n));
}

TEST_CASE("continuum placement keeps the nominal thickness") {
  CHECK(effective_thickness(3.0, PlacementMode::Continuum) == 3.0);
  const double a4 = PhysicalConstants::codata().lattice_constant / 4.0;
  const double t = effective_thickness(3.0, PlacementMode::Lattice);
  CHECK(std::abs(t / a4 - std::round(t / a4)) < 1e-9);
  CHECK(std::abs(t - 3.0) <= a4);
}

TEST_CASE("slicing keeps exactly the spins of the thinner slab") {
  const auto cfg = generate_bath(geom(100.0, 10.0, 8.0), 4);
  const auto thin = slice_bath(cfg, 2.0);
  std::size_t inside = 0;
  for (const auto& s : cfg.spins) inside += std::abs(s.position.z()) <= 1.0;
  CHECK(thin.spins.size() == inside);
  CHECK(thin.geometry.thickness == 2.0);
  CHECK_THROWS_AS(slice_bath(cfg, 20.0), Error);
}

TEST_CASE("bath text round trip is exact") {
  const auto cfg = generate_bath(geom(30.0, 5.0, 12.0), 99);
  const auto back = bath_from_text(bath_to_text(cfg));
  REQUIRE(back.spins.size() == cfg.spins.size());
  for (std::size_t i = 0; i < cfg.spins.size(); ++i) {
    CHECK(back.spins[i].position == cfg.spins[i].position);
    CHECK(back.spins[i].jt_axis == cfg.spins[i].jt_axis);
    CHECK(back.spins[i].nuclear_m == cfg.spins[i].nuclear_m);
  }
  CHECK(bath_to_text(back) == bath_to_text(cfg));
}

TEST_CASE("invalid geometry is rejected with a message") {
  try {
    generate_bath(geom(0.0, 5.0, 10.0), 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "density must be positive");
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
  CHECK_THROWS_AS(generate_bath(geom(1.0, -1.0, 10.0), 1), Error);
}

TEST_CASE("couplings agree with the secular formula per spin") {
  const auto p = Params::defaults();
  const auto cfg = generate_bath(geom(100.0, 5.0, 5.0), 12);
  const auto a = bath_couplings(cfg, p.central, p.constants);
  REQUIRE(a.size() == cfg.spins.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == doctest::Approx(secular_azz(cfg.central_position, cfg.spins[i].position, p.central, p.constants)));
  double best = 1e300;
  for (const auto& s : cfg.spins) best = std::min(best, s.position.norm());
  CHECK(nearest_neighbor_distance(cfg) == doctest::Approx(best));
}
