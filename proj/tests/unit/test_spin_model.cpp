#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nvbath/error.hpp"
#include "nvbath/parameters.hpp"
#include "nvbath/rng.hpp"
#include "nvbath/spin_model.hpp"

using namespace nvbath;

TEST_CASE("spin operators obey the angular momentum algebra") {
  for (int mult : {2, 3, 4}) {
    const auto s = spin_operators(mult);
    const Complex i(0.0, 1.0);
    const Eigen::MatrixXcd comm = s[0] * s[1] - s[1] * s[0];
    CHECK((comm - i * s[2]).cwiseAbs().maxCoeff() < 1e-14);
    const double j = (mult - 1) / 2.0;
    const Eigen::MatrixXcd s2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    CHECK((s2 - j * (j + 1) * Eigen::MatrixXcd::Identity(mult, mult)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(s[2](0, 0).real() == doctest::Approx(j));
  }
}

TEST_CASE("dipolar tensor is symmetric, traceless and 1/r^3") {
  const auto c = PhysicalConstants::codata();
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const Vec3 r(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5);
    const auto t = dipolar_tensor(r, c.gamma_e, c.gamma_e, c);
    CHECK((t - t.transpose()).cwiseAbs().maxCoeff() < 1e-9 * t.cwiseAbs().maxCoeff());
    CHECK(std::abs(t.trace()) < 1e-9 * t.cwiseAbs().maxCoeff());
    const auto t2 = dipolar_tensor(2.0 * r, c.gamma_e, c.gamma_e, c);
    CHECK((t - 8.0 * t2).cwiseAbs().maxCoeff() < 1e-9 * t.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("dipolar prefactor follows from CODATA constants") {
  // mu0/4pi * hbar * gamma_e^2 with gamma_e in rad/s/T, converted to rad/ms nm^3.
  const double mu0_4pi = 1e-7, hbar = 1.054571817e-34, gamma = 1.76085963023e11;
  const double expected = mu0_4pi * hbar * gamma * gamma * 1e27 * 1e-3;
  CHECK(PhysicalConstants::codata().dipolar_prefactor == doctest::Approx(expected).epsilon(1e-9));
  CHECK(PhysicalConstants::codata().gamma_e == doctest::Approx(-1.76085963023e4).epsilon(1e-11));
}

TEST_CASE("secular coupling along and across the NV axis") {
  const auto c = PhysicalConstants::codata();
  const CentralSpinParams central;
  const Vec3 axis = central.quantization_axis;
  const double r = 2.0;
  const double d = c.dipolar_prefactor / (r * r * r);
  // Levels (0, -1): A_z = -A_zz.
  CHECK(secular_azz(Vec3::Zero(), r * axis, central, c) == doctest::Approx(2.0 * d));
  const Vec3 perp = Vec3(1, -1, 0).normalized();
  CHECK(secular_azz(Vec3::Zero(), r * perp, central, c) == doctest::Approx(-d));
  const double magic = std::acos(1.0 / std::sqrt(3.0));
  const Vec3 m = std::cos(magic) * axis + std::sin(magic) * perp;
  CHECK(std::abs(secular_azz(Vec3::Zero(), r * m, central, c)) < 1e-9 * d);
  CHECK_THROWS_AS(secular_azz(Vec3::Zero(), Vec3::Zero(), central, c), Error);
}

TEST_CASE("first-order P1 lines sit at the Larmor frequency plus m A_eff") {
  const auto p = Params::defaults();
  const FieldConfig field{311.0};
  const auto p1 = make_p1_params(Isotope::N15, p.n15.tensor, p.n15.gamma_n, field, p.central, p.constants,
                                 HyperfineModel::FirstOrder);
  const auto lines = p1_transition_frequencies(field, p1, p.constants);
  REQUIRE(lines.size() == 8);
  const double larmor = std::abs(p.constants.gamma_e) * 311.0 / (2e3 * std::numbers::pi);
  double weighted = 0.0, total = 0.0;
  for (const auto& l : lines) {
    weighted += l.frequency_mhz / 8.0;
    total += l.degeneracy_fraction;
  }
  CHECK(weighted == doctest::Approx(larmor).epsilon(1e-12));
  // Fractions count coincident lines, so each line carries its group's share.
  const double a_par = units::rad_per_ms_to_mhz(p.n15.tensor.a_parallel);
  bool found = false;
  for (const auto& l : lines)
    if (std::abs(l.frequency_mhz - (larmor + std::abs(a_par) / 2.0)) < 1e-6) {
      found = true;
      CHECK(l.degeneracy_fraction == doctest::Approx(1.0 / 8.0));
    }
  CHECK(found);
  CHECK(total == doctest::Approx(3.0 * 6.0 / 8.0 + 2.0 / 8.0));
}

TEST_CASE("exact hyperfine shifts approach first order at high field") {
  const auto p = Params::defaults();
  for (double b : {3000.0, 30000.0}) {
    const FieldConfig field{b};
    const auto ex = make_p1_params(Isotope::N14, p.n14.tensor, p.n14.gamma_n, field, p.central, p.constants,
                                   HyperfineModel::Exact);
    const auto fo = make_p1_params(Isotope::N14, p.n14.tensor, p.n14.gamma_n, field, p.central, p.constants,
                                   HyperfineModel::FirstOrder);
    const double we = std::abs(p.constants.gamma_e) * b;
    const double bound = 2.0 * p.n14.tensor.a_perpendicular * p.n14.tensor.a_perpendicular / we;
    for (int k = 0; k < 3; ++k)
      for (int ax = 0; ax < 4; ++ax) CHECK(std::abs(ex.shift(k, ax) - fo.shift(k, ax)) < bound);
  }
}

TEST_CASE("cluster Hamiltonian is Hermitian for every coupling model") {
  const auto p = Params::defaults();
  const auto ctx = p.context(Isotope::N15, FieldConfig{});
  std::vector<ClusterSpin> cl{{Vec3(1.0, 0.3, -0.4), 0, 1}, {Vec3(-0.7, 1.1, 0.2), 1, 3}};
  const std::vector<std::size_t> ids{0, 1};
  for (auto m : {CouplingModel::Secular, CouplingModel::Projected, CouplingModel::Full}) {
    const auto h = build_cluster_hamiltonian(cl, ids, ctx, m);
    CHECK(h.dimension == 12);
    CHECK(is_hermitian(h.matrix));
  }
}
