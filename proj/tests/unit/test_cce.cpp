#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "nvbath/bath.hpp"
#include "nvbath/cce.hpp"
#include "nvbath/error.hpp"
#include "nvbath/parameters.hpp"
#include "nvbath/rng.hpp"

using namespace nvbath;

namespace {

std::vector<double> linear_grid(double tmax, int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(tmax * i / (n - 1));
  return t;
}

BathConfiguration manual_bath(std::vector<Vec3> pos) {
  BathConfiguration cfg;
  cfg.geometry.density_ppm = 100.0;
  cfg.geometry.thickness = 10.0;
  cfg.geometry.lateral_radius = 10.0;
  int k = 0;
  for (const auto& p : pos) cfg.spins.push_back({p, k++ % 4, k % 2 ? 0.5 : -0.5});
  return cfg;
}

// Every connected vertex subset of size <= order, by bitmask.
std::set<std::vector<std::uint32_t>> brute_clusters(const std::vector<Vec3>& pos, int order, double radius) {
  const std::size_t n = pos.size();
  std::set<std::vector<std::uint32_t>> out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) > order) continue;
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < n; ++i)
      if (mask & (1u << i)) members.push_back(i);
    std::uint32_t seen = 1u << members[0];
    bool grew = true;
    while (grew) {
      grew = false;
      for (auto i : members)
        if (seen & (1u << i))
          for (auto j : members)
            if (!(seen & (1u << j)) && (pos[i] - pos[j]).norm() < radius) {
              seen |= 1u << j;
              grew = true;
            }
    }
    if (seen == mask) out.insert(members);
  }
  return out;
}

}  // namespace

TEST_CASE("cluster enumeration equals brute-force connected subsets") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec3> pos;
    for (int i = 0; i < 10; ++i) pos.emplace_back(3.0 * rng.uniform(), 3.0 * rng.uniform(), 3.0 * rng.uniform());
    for (int order : {1, 2, 3, 4}) {
      const double radius = 1.2;
      const auto got = enumerate_clusters(pos, order, radius);
      std::set<std::vector<std::uint32_t>> got_set(got.begin(), got.end());
      CHECK(got_set.size() == got.size());
      CHECK(got_set == brute_clusters(pos, order, radius));
      for (std::size_t i = 1; i < got.size(); ++i) CHECK(got[i - 1].size() <= got[i].size());
    }
  }
}

TEST_CASE("cluster enumeration enforces its budget") {
  std::vector<Vec3> pos;
  for (int i = 0; i < 12; ++i) pos.emplace_back(0.1 * i, 0.0, 0.0);
  CHECK_THROWS_AS(enumerate_clusters(pos, 4, 10.0, 100), Error);
}

TEST_CASE("empty bath keeps full coherence") {
  const auto p = Params::defaults();
  const auto ctx = p.context(Isotope::N15, FieldConfig{});
  BathConfiguration cfg = manual_bath({});
  CCEConfig cce;
  cce.order = 2;
  cce.time_grid = linear_grid(1.0, 11);
  for (const auto& seq : {PulseSequence::ramsey(), PulseSequence::hahn_echo()}) {
    const auto c = cce_coherence(cfg, cce, seq, ctx, 1);
    for (const auto& v : c.values) CHECK(std::abs(v - Complex(1.0, 0.0)) < 1e-15);
  }
  const auto a = ramsey_cce1_analytic(cfg, p.central, p.constants, cce.time_grid);
  for (const auto& v : a.values) CHECK(v.real() == 1.0);
}

TEST_CASE("single spin: Ramsey is a cosine and the echo refocuses it") {
  const auto p = Params::defaults();
  const auto ctx = p.context(Isotope::N15, FieldConfig{});
  const auto cfg = manual_bath({Vec3(1.1, -0.4, 0.9)});
  const double a = secular_azz(Vec3::Zero(), cfg.spins[0].position, p.central, p.constants);
  CCEConfig cce;
  cce.state_mode = BathStateMode::Mixed;
  cce.frozen_nuclear = true;
  cce.time_grid = linear_grid(6.0 * std::numbers::pi / std::abs(a), 40);
  const auto r = cce_coherence(cfg, cce, PulseSequence::ramsey(), ctx, 1);
  const auto h = cce_coherence(cfg, cce, PulseSequence::hahn_echo(), ctx, 1);
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    CHECK(std::abs(r.values[i] - std::cos(a * cce.time_grid[i] / 2.0)) < 1e-10);
    CHECK(std::abs(h.values[i] - 1.0) < 1e-10);
  }
}

TEST_CASE("CCE at full order reproduces exact propagation") {
  const auto p = Params::defaults();
  const auto ctx = p.context(Isotope::N15, FieldConfig{});
  const auto cfg = manual_bath({Vec3(0.9, 0.2, 0.3), Vec3(1.4, 0.8, -0.2), Vec3(-0.6, 1.2, 0.5),
                                Vec3(0.1, -1.0, -0.9)});
  for (auto mode : {BathStateMode::Mixed, BathStateMode::Sampled}) {
    CCEConfig cce;
    cce.order = 4;
    cce.dipole_radius = 100.0;
    cce.state_mode = mode;
    cce.n_bath_states = 3;
    cce.time_grid = linear_grid(0.01, 21);
    for (const auto& seq : {PulseSequence::ramsey(), PulseSequence::hahn_echo()}) {
      const auto c = cce_coherence(cfg, cce, seq, ctx, 5);
      const auto e = exact_coherence(cfg, cce, seq, ctx, 5);
      for (std::size_t i = 0; i < c.values.size(); ++i) CHECK(std::abs(c.values[i] - e.values[i]) < 1e-9);
    }
  }
}

TEST_CASE("CCE results do not depend on the thread count") {
  const auto p = Params::defaults();
  const auto ctx = p.context(Isotope::N15, FieldConfig{});
  BathGeometry g;
  g.density_ppm = 50.0;
  g.thickness = 6.0;
  g.lateral_radius = 6.0;
  const auto cfg = generate_bath(g, 3);
  CCEConfig cce;
  cce.order = 2;
  cce.n_bath_states = 3;
  cce.time_grid = default_hahn_grid(50.0, 20);
  cce.threads = 1;
  const auto a = cce_coherence(cfg, cce, PulseSequence::hahn_echo(), ctx, 9);
  cce.threads = 4;
  const auto b = cce_coherence(cfg, cce, PulseSequence::hahn_echo(), ctx, 9);
  CHECK(curve_to_text(a) == curve_to_text(b));
}

TEST_CASE("greedy partition against hand-computed cases") {
  const std::vector<double> a{100.0, 1.0, -1.0, 1.0, 1.0};
  const auto p = partition_strong_weak(a);
  REQUIRE(p.strong.size() == 1);
  CHECK(p.strong[0].index == 0);
  CHECK(p.weak == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(p.a_bath == doctest::Approx(1.0));
  CHECK(p.t2_star == doctest::Approx(std::sqrt(2.0)));

  const auto none = partition_strong_weak(std::vector<double>{1.0, 1.0, 1.0});
  CHECK(none.strong.empty());
  const auto all = partition_strong_weak(std::vector<double>{5.0});
  CHECK(all.strong.size() == 1);
  CHECK(std::isinf(all.t2_star));
}

TEST_CASE("analytic CCE1 Ramsey matches the exact cosine product without strong spins") {
  const auto p = Params::defaults();
  BathGeometry g;
  g.density_ppm = 20.0;
  g.thickness = 20.0;
  g.lateral_radius = 20.0;
  const auto cfg = generate_bath(g, 2);
  const auto a = bath_couplings(cfg, p.central, p.constants);
  const auto part = partition_strong_weak(a);
  const auto t = default_ramsey_grid(part.a_bath);
  const auto analytic = ramsey_cce1_analytic(cfg, p.central, p.constants, t);
  const auto exact = ramsey_exact_product(a, t);
  // The Gaussian envelope is the short-time limit of the weak product.
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] < 0.3 * part.t2_star) CHECK(std::abs(analytic.values[i] - exact[i]) < 0.02);
}

TEST_CASE("curve text round trip") {
  CoherenceCurve c;
  c.times = {0.0, 0.1, 0.2};
  c.values = {{1.0, 0.0}, {0.5, -0.25}, {1e-17, 3.0}};
  c.set_meta("k", "v");
  const auto back = curve_from_text(curve_to_text(c));
  CHECK(back.times == c.times);
  CHECK(back.values == c.values);
  CHECK(back.meta("k") == "v");
}

TEST_CASE("CCE configuration validation") {
  CCEConfig cce;
  cce.time_grid = {0.0, 0.2, 0.1};
  CHECK_THROWS_AS(cce.validate(), Error);
  cce.time_grid = {0.0, 0.1};
  cce.order = 0;
  CHECK_THROWS_AS(cce.validate(), Error);
}
