#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nvbath/coupling_yield.hpp"
#include "nvbath/error.hpp"
#include "nvbath/rng.hpp"

using namespace nvbath;

namespace {

double integrate(const std::function<double(double)>& f, double hi, int n = 200000) {
  double s = 0.0;
  const double h = hi / n;
  for (int i = 0; i < n; ++i) s += f((i + 0.5) * h) * h;
  return s;
}

BathConfiguration manual(std::vector<Vec3> pos) {
  BathConfiguration cfg;
  cfg.geometry.thickness = 10.0;
  cfg.geometry.lateral_radius = 10.0;
  for (const auto& p : pos) cfg.spins.push_back({p, 0, 0.5});
  return cfg;
}

Vec3 rotate(const Vec3& v, const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()) * v;
}

}  // namespace

TEST_CASE("nearest-neighbor laws are normalized with the textbook means") {
  const double rho = 0.02, sigma = 0.05;
  const auto d3 = nn_pdf(Dimensionality::D3, rho);
  const auto d2 = nn_pdf(Dimensionality::D2, sigma);
  CHECK(integrate([&](double r) { return d3.pdf(r); }, 40.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(integrate([&](double r) { return d2.pdf(r); }, 40.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(integrate([&](double r) { return r * d3.pdf(r); }, 40.0) == doctest::Approx(d3.mean()).epsilon(1e-6));
  CHECK(integrate([&](double r) { return r * d2.pdf(r); }, 40.0) == doctest::Approx(d2.mean()).epsilon(1e-6));
  CHECK(d3.mean() * std::cbrt(rho) == doctest::Approx(0.55396).epsilon(1e-4));
  CHECK(d2.mean() == doctest::Approx(0.5 / std::sqrt(sigma)));
  CHECK(d3.cdf(d3.median()) == doctest::Approx(0.5));
  CHECK(d2.cdf(d2.median()) == doctest::Approx(0.5));
}

TEST_CASE("quadrupling the areal density halves the 2D median") {
  CHECK(nn_pdf(Dimensionality::D2, 0.4).median() == doctest::Approx(0.5 * nn_pdf(Dimensionality::D2, 0.1).median()));
  CHECK(nn_pdf(Dimensionality::D3, 0.8).median() == doctest::Approx(0.5 * nn_pdf(Dimensionality::D3, 0.1).median()));
}

TEST_CASE("non-positive densities are rejected") {
  CHECK_THROWS_WITH_AS(nn_pdf(Dimensionality::D3, 0.0), "density must be positive", Error);
  CHECK_THROWS_AS(nn_pdf(Dimensionality::D2, -1.0), Error);
}

TEST_CASE("cutoff dephasing sums") {
  CHECK(gamma_cutoff_2d(0.1, 2.0) == doctest::Approx(std::sqrt(std::numbers::pi * 0.1 / 2.0) / 4.0));
  CHECK(gamma_cutoff_3d(0.01, 2.0) == doctest::Approx(std::sqrt(4.0 * std::numbers::pi * 0.01 / 24.0)));
  CHECK(areal_density(3.0, 5.0, PlacementMode::Continuum) == doctest::Approx(ppm_to_number_density(3.0) * 5.0));
}

TEST_CASE("KS statistic of exact quantiles is 1/(2n)") {
  const auto d = nn_pdf(Dimensionality::D3, 0.05);
  std::vector<double> q;
  const int n = 200;
  // Inverse CDF by bisection.
  for (int i = 0; i < n; ++i) {
    const double target = (i + 0.5) / n;
    double lo = 0.0, hi = 100.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (d.cdf(mid) < target ? lo : hi) = mid;
    }
    q.push_back(0.5 * (lo + hi));
  }
  CHECK(ks_statistic(q, [&](double r) { return d.cdf(r); }) == doctest::Approx(0.5 / n).epsilon(1e-6));
}

TEST_CASE("two equivalent spins give visibility 1/sqrt(2)") {
  const auto p = Params::defaults();
  const Vec3 axis = p.central.quantization_axis;
  const Vec3 perp = Vec3(1, -1, 0).normalized();
  // Mirror images through the NV axis have equal |r| and equal A_z.
  const Vec3 a = 1.3 * axis + 0.8 * perp;
  const Vec3 b = 1.3 * axis - 0.8 * perp;
  const auto v = visibility(manual({a, b}), p.central, p.constants);
  CHECK(v.nu == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(v.r_nn == doctest::Approx(a.norm()));
  CHECK_THROWS_WITH_AS(visibility(manual({a}), p.central, p.constants),
                       "visibility undefined: fewer than two bath spins", Error);
}

TEST_CASE("visibility is invariant under rotations about the NV axis") {
  const auto p = Params::defaults();
  Rng rng(8);
  std::vector<Vec3> pos;
  for (int i = 0; i < 15; ++i) pos.emplace_back(6.0 * rng.uniform() - 3, 6.0 * rng.uniform() - 3, 6.0 * rng.uniform() - 3);
  const auto base = visibility(manual(pos), p.central, p.constants);
  for (double angle : {0.3, 1.7, 4.0}) {
    std::vector<Vec3> rot;
    for (const auto& x : pos) rot.push_back(rotate(x, p.central.quantization_axis, angle));
    const auto v = visibility(manual(rot), p.central, p.constants);
    CHECK(v.nu == doctest::Approx(base.nu).epsilon(1e-10));
    CHECK(v.nearest == base.nearest);
  }
}

TEST_CASE("crossover interpolates in log thickness") {
  YieldReport r;
  r.densities = {3.0};
  r.thicknesses = {1.0, 10.0, 100.0};
  for (double y : {0.6, 0.4, 0.2}) {
    YieldCell c;
    c.yield = y;
    c.yield_nu = y / 2.0;
    r.cells.push_back(c);
  }
  CHECK(crossover_thickness(r, 0) == doctest::Approx(10.0));
  CHECK(crossover_thickness(r, 0, true) == doctest::Approx(10.0));
  r.cells[1].yield = 0.5;
  CHECK(crossover_thickness(r, 0) == doctest::Approx(std::pow(10.0, 4.0 / 3.0)));
}

TEST_CASE("yield sweep is reproducible and falls with thickness") {
  YieldSpec s;
  s.densities = {3.0};
  s.thicknesses = {1.0, 50.0};
  s.n_configs = 300;
  s.seed = 4;
  const auto params = Params::defaults();
  const auto a = yield_sweep(s, params);
  s.threads = 3;
  const auto b = yield_sweep(s, params);
  CHECK(yield_to_text(a) == yield_to_text(b));
  CHECK(a.cell(0, 0).yield > a.cell(0, 1).yield);
  CHECK(a.cell(0, 0).n_configs == 300);
}

TEST_CASE("yield spec validation") {
  YieldSpec s;
  s.densities = {3.0};
  s.thicknesses = {80.0};
  CHECK_THROWS_AS(s.validate(), Error);
}
