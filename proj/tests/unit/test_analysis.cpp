#include <cmath>

#include "doctest.h"
#include "nvbath/analysis.hpp"
#include "nvbath/error.hpp"

using namespace nvbath;

namespace {

CoherenceCurve stretched(double t2, double n, int points, double tmax) {
  CoherenceCurve c;
  for (int i = 0; i < points; ++i) {
    const double t = tmax * i / (points - 1);
    c.times.push_back(t);
    c.values.emplace_back(std::exp(-std::pow(t / t2, n)), 0.0);
  }
  return c;
}

}  // namespace

TEST_CASE("stretched-exponential fit recovers its generator") {
  for (auto [t2, n] : {std::pair{0.01, 1.3}, std::pair{2.0, 2.0}, std::pair{0.5, 0.8}}) {
    const auto fit = fit_stretched_exponential(stretched(t2, n, 120, 4.0 * t2));
    CHECK(fit.converged);
    CHECK(fit.t2 == doctest::Approx(t2).epsilon(1e-6));
    CHECK(fit.n_exponent == doctest::Approx(n).epsilon(1e-6));
  }
}

TEST_CASE("fixed-exponent fit and Gaussian T2*") {
  const auto c = stretched(0.3, 2.0, 100, 1.0);
  FitOptions o;
  o.fix_exponent = true;
  o.fixed_exponent = 2.0;
  CHECK(fit_stretched_exponential(c, nullptr, o).t2 == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(ramsey_t2star(c) == doctest::Approx(0.3).epsilon(1e-8));
  const auto p = partition_strong_weak(std::vector<double>{4.0, -4.0, 4.0, 4.0});
  CHECK(ramsey_t2star(p) == doctest::Approx(std::sqrt(2.0) / 4.0));
}

TEST_CASE("envelope removes strong-spin beating") {
  const double a = 200.0, t2 = 0.05;
  CoherenceCurve c;
  for (int i = 0; i < 300; ++i) {
    const double t = 0.15 * i / 299.0;
    c.times.push_back(t);
    c.values.emplace_back(std::exp(-(t / t2) * (t / t2)) * std::cos(a * t / 2.0), 0.0);
  }
  StrongWeakPartition p;
  p.strong.push_back({0, a});
  FitOptions o;
  o.fix_exponent = true;
  CHECK(fit_stretched_exponential(c, &p, o).t2 == doctest::Approx(t2).epsilon(1e-6));
}

TEST_CASE("log-normal statistics") {
  const auto st = distribution_stats({1.0, 10.0, 100.0, std::numeric_limits<double>::infinity()});
  CHECK(st.mu == doctest::Approx(10.0));
  CHECK(st.sigma == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(st.n_samples == 3);
  CHECK(st.n_excluded == 1);
  CHECK_THROWS_AS(distribution_stats({1.0}), Error);
  CHECK_THROWS_AS(distribution_stats({1.0, -2.0}), Error);
}

TEST_CASE("sweep is reproducible, thread independent and round-trips") {
  SweepSpec s;
  s.thicknesses = {1.0, 5.0};
  s.densities = {2.0, 8.0};
  s.n_configs = 40;
  s.seed = 11;
  const auto params = Params::defaults();
  const auto a = run_sweep(s, params);
  s.threads = 3;
  const auto b = run_sweep(s, params);
  CHECK(sweep_to_text(a) == sweep_to_text(b));
  const auto back = sweep_from_text(sweep_to_text(a));
  CHECK(sweep_to_text(back) == sweep_to_text(a));
  REQUIRE(a.cells.size() == 4);
  // Denser and thicker baths dephase faster.
  CHECK(a.cell(0, 1).stats->mu < a.cell(0, 0).stats->mu);
  CHECK(a.cell(1, 0).stats->mu < a.cell(0, 0).stats->mu);
}

TEST_CASE("sweep spec validation") {
  SweepSpec s;
  s.thicknesses = {5.0, 1.0};
  s.densities = {1.0};
  CHECK_THROWS_AS(s.validate(), Error);
  s.thicknesses = {1.0};
  s.densities = {0.0};
  CHECK_THROWS_AS(s.validate(), Error);
}
