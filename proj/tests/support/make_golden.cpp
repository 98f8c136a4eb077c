// Writes the 6-spin bath fixture and its Hahn-echo curve from full
// Hilbert-space propagation. With --check, recomputes the curve for the
// committed fixture and compares it to the committed golden file.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>

#include "nvbath/bath.hpp"
#include "nvbath/cce.hpp"
#include "nvbath/parameters.hpp"

using namespace nvbath;

namespace {

constexpr double kTmax = 0.02;  // ms
constexpr int kPoints = 41;

CoherenceCurve golden_for(const BathConfiguration& cfg) {
  const auto params = Params::defaults();
  const auto ctx = params.context(cfg.isotope, FieldConfig{});
  CCEConfig cce;
  cce.state_mode = BathStateMode::Mixed;
  cce.frozen_nuclear = true;
  for (int i = 0; i < kPoints; ++i) cce.time_grid.push_back(kTmax * i / (kPoints - 1));
  auto c = exact_coherence(cfg, cce, PulseSequence::hahn_echo(), ctx, 1);
  c.set_meta("source", "exact propagation, mixed bath, frozen nuclear states");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: make_golden write|check BATH CURVE\n");
    return 2;
  }
  const std::string mode = argv[1];
  try {
    if (mode == "write") {
      const auto params = Params::defaults();
      BathGeometry g;
      g.density_ppm = 100.0;
      g.thickness = 8.0;
      g.lateral_radius = 5.0;
      auto cfg = generate_bath(g, 11, BathOptions::from(params, Isotope::N15));
      std::stable_sort(cfg.spins.begin(), cfg.spins.end(),
                       [](const BathSpin& a, const BathSpin& b) { return a.position.norm() < b.position.norm(); });
      if (cfg.spins.size() < 6) throw std::runtime_error("fixture bath has fewer than 6 spins");
      cfg.spins.resize(6);
      save_bath(argv[2], cfg);
      save_curve(argv[3], golden_for(load_bath(argv[2])));
      return 0;
    }
    if (mode == "check") {
      const auto fresh = golden_for(load_bath(argv[2]));
      const auto ref = load_curve(argv[3]);
      if (fresh.values.size() != ref.values.size()) throw std::runtime_error("length mismatch");
      double worst = 0.0;
      for (std::size_t i = 0; i < ref.values.size(); ++i) worst = std::max(worst, std::abs(fresh.values[i] - ref.values[i]));
      std::printf("max |exact - golden| = %.3g\n", worst);
      return worst <= 1e-12 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::fprintf(stderr, "unknown mode %s\n", mode.c_str());
  return 2;
}
