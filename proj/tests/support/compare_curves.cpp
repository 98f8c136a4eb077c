// compare_curves A B TOL: exit 0 when both curves share the time grid and
// max |L_A - L_B| <= TOL.

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "nvbath/cce.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: compare_curves A B TOL\n");
    return 2;
  }
  try {
    const auto a = nvbath::load_curve(argv[1]);
    const auto b = nvbath::load_curve(argv[2]);
    const double tol = std::atof(argv[3]);
    if (a.times.size() != b.times.size()) {
      std::fprintf(stderr, "different lengths %zu and %zu\n", a.times.size(), b.times.size());
      return 1;
    }
    double worst = 0.0, dt = 0.0;
    for (std::size_t i = 0; i < a.times.size(); ++i) {
      worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
      dt = std::max(dt, std::abs(a.times[i] - b.times[i]));
    }
    std::printf("max |dL| = %.3g, max |dt| = %.3g ms\n", worst, dt);
    return worst <= tol && dt <= 1e-12 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
