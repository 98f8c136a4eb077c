#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nvbath/error.hpp"
#include "nvbath/mle.hpp"
#include "nvbath/rng.hpp"

using namespace nvbath;

namespace {

// Gaussian rates with mean proportional to density and a thickness-dependent
// spread: a closed-form stand-in for a simulated library.
double draw_rate(Rng& rng, double t, double rho) {
  const double u1 = rng.uniform_pos(), u2 = rng.uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return std::max(1e-3, rho * (1.0 + 0.05 * t) + 0.15 * rho * z);
}

CoherenceLibrary synthetic_library(int per_cell) {
  CoherenceLibrary lib;
  lib.thicknesses = {1.0, 2.0, 3.0};
  lib.densities = {2.0, 4.0, 6.0, 8.0, 10.0};
  Rng rng(77);
  for (double t : lib.thicknesses)
    for (double d : lib.densities) {
      LibraryCell c{t, d, {}};
      for (int i = 0; i < per_cell; ++i) c.rates.push_back(draw_rate(rng, t, d));
      std::sort(c.rates.begin(), c.rates.end());
      lib.cells.push_back(std::move(c));
    }
  return lib;
}

}  // namespace

TEST_CASE("rate PDF integrates to one and its CDF is consistent") {
  Rng rng(5);
  std::vector<double> r;
  for (int i = 0; i < 2000; ++i) r.push_back(draw_rate(rng, 1.0, 5.0));
  const auto pdf = RatePdf::build(r);
  const double lo = pdf.support_lo(), hi = pdf.support_hi();
  const int n = 20000;
  double integral = 0.0;
  for (int i = 0; i < n; ++i) integral += pdf.raw(lo + (hi - lo) * (i + 0.5) / n) * (hi - lo) / n;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(pdf.cdf(lo - 1.0) == 0.0);
  CHECK(pdf.cdf(hi + 1.0) == doctest::Approx(1.0));
  double prev = 0.0;
  for (int i = 0; i <= 50; ++i) {
    const double c = pdf.cdf(lo + (hi - lo) * i / 50.0);
    CHECK(c >= prev - 1e-15);
    prev = c;
  }
  CHECK(pdf.raw(hi + 10.0) == 0.0);
  CHECK(pdf(hi + 10.0) == pdf.floor_value());
  CHECK(pdf.floor_value() == doctest::Approx(1.0 / (10.0 * 2000 * (hi - lo))));
  CHECK(pdf.n_bins() >= 20);
  CHECK(pdf.n_bins() <= 200);
}

TEST_CASE("identical rates give a finite spike") {
  const std::vector<double> r(100, 3.0);
  const auto pdf = RatePdf::build(r);
  CHECK(pdf.spike());
  CHECK(std::isfinite(pdf(3.0)));
  CHECK(pdf(3.0) > pdf(10.0));
}

TEST_CASE("library JSON round trip") {
  const auto lib = synthetic_library(60);
  const auto back = library_from_json(library_to_json(lib));
  CHECK(library_to_json(back) == library_to_json(lib));
  CHECK(back.cell(2, 4).rates == lib.cell(2, 4).rates);
}

TEST_CASE("likelihood peaks at the generating cell") {
  const auto lib = synthetic_library(1500);
  Rng rng(123);
  for (std::size_t it = 0; it < lib.thicknesses.size(); ++it)
    for (std::size_t id : {std::size_t{1}, std::size_t{3}}) {
      std::vector<double> data;
      for (int i = 0; i < 200; ++i) data.push_back(draw_rate(rng, lib.thicknesses[it], lib.densities[id]));
      const auto s = likelihood_surface(data, lib);
      CHECK(s.argmax_density == id);
      CHECK(s.n_measurements == 200);
    }
}

TEST_CASE("density estimate recovers an off-grid truth") {
  const auto lib = synthetic_library(1500);
  Rng rng(9);
  std::vector<double> data;
  for (int i = 0; i < 100; ++i) data.push_back(draw_rate(rng, 2.0, 5.0));
  const auto est = estimate_density(data, lib, 2.0);
  CHECK(est.fixed_thickness == 2.0);
  CHECK(est.rho_mle == doctest::Approx(5.0).epsilon(0.1));
  CHECK(est.rho_sigma > 0.0);
  CHECK(est.rho_sigma < 1.0);
  CHECK_FALSE(est.multimodal);
  double area = 0.0;
  for (std::size_t i = 1; i < est.linecut_densities.size(); ++i)
    area += 0.5 * (est.linecut_probability[i] + est.linecut_probability[i - 1]) *
            (est.linecut_densities[i] - est.linecut_densities[i - 1]);
  CHECK(area == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bilinear PDF interpolation reproduces grid cells") {
  const auto lib = synthetic_library(300);
  const LibraryPdfs pdfs(lib);
  for (double rate : {3.0, 5.0, 9.0}) CHECK(pdfs.interpolated(2.0, 6.0, rate) == doctest::Approx(pdfs.at(1, 2)(rate)));
  const double mid = pdfs.interpolated(2.0, 5.0, 5.0);
  CHECK(mid == doctest::Approx(0.5 * (pdfs.at(1, 1)(5.0) + pdfs.at(1, 2)(5.0))));
}

TEST_CASE("data far outside the library is reported") {
  const auto lib = synthetic_library(100);
  const std::vector<double> data{1e6, 2e6};
  CHECK_THROWS_WITH_AS(likelihood_surface(data, lib), "data outside library support", Error);
}

TEST_CASE("measurement parsing") {
  const auto v = parse_measurements_us("# T2* in us\n1.5\n\n  2.0 # trailing\n3e0\n");
  CHECK(v == std::vector<double>{1.5, 2.0, 3.0});
  CHECK_THROWS_AS(parse_measurements_us("1.0\n-2.0\n"), Error);
  CHECK_THROWS_AS(parse_measurements_us("abc\n"), Error);
  CHECK(t2star_us_to_rate(2.0) == 500.0);
}

TEST_CASE("benchmark error falls with sample count and is reproducible") {
  const auto lib = synthetic_library(800);
  const auto a = benchmark_error(lib, {1, 2, 4}, 60, 2.0, 4);
  const auto b = benchmark_error(lib, {1, 2, 4}, 60, 2.0, 4, 3);
  CHECK(a.mean_error == b.mean_error);
  CHECK(a.mean_error[0] > a.mean_error[2]);
  CHECK(a.fit_p > 0.0);
}
