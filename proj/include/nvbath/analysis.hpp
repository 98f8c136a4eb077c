#pragma once

// Stretched-exponential fits of coherence curves, coherence-time statistics
// and (thickness, density) sweeps.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nvbath/bath.hpp"
#include "nvbath/cce.hpp"
#include "nvbath/parameters.hpp"

namespace nvbath {

inline constexpr const char* kSweepSchema = "nvbath.sweep/1";

struct StretchedExpFit {
  double t2 = 0.0;          // ms
  double n_exponent = 0.0;  // in (0.3, 6)
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct FitOptions {
  bool fix_exponent = false;
  double fixed_exponent = 2.0;
  double xtol = 1e-8;
  int max_iterations = 500;
};

// Envelope used for fitting: |L| with strong-spin cosines divided out when a
// partition is given (points where that product is below 0.1 are dropped),
// otherwise the decreasing upper envelope through the curve's maxima.
struct Envelope {
  std::vector<double> times;
  std::vector<double> values;
};
Envelope fit_envelope(const CoherenceCurve& curve, const StrongWeakPartition* partition = nullptr);

StretchedExpFit fit_stretched_exponential(const CoherenceCurve& curve, const StrongWeakPartition* partition = nullptr,
                                          const FitOptions& opts = {});
StretchedExpFit fit_envelope_stretched(const Envelope& env, const FitOptions& opts = {});

// sqrt(2)/A_bath; +inf for an empty weak set.
double ramsey_t2star(const StrongWeakPartition& partition);
// Gaussian (n = 2) fit of a Ramsey curve.
double ramsey_t2star(const CoherenceCurve& curve, const StrongWeakPartition* partition = nullptr);

struct DistributionStats {
  double mu = 0.0;     // ms, 10^<log10 T>
  double sigma = 0.0;  // std of log10 T
  std::size_t n_samples = 0;
  std::size_t n_excluded = 0;  // non-finite samples
};

DistributionStats distribution_stats(const std::vector<double>& samples_ms);

enum class Observable {
  T2StarFormula,  // sqrt(2)/A_bath from the strong/weak partition
  T2StarFit,      // Gaussian fit of the analytic CCE1 Ramsey curve
  T2Hahn,         // stretched fit of the CCE Hahn-echo curve
};

const char* observable_name(Observable o);
Observable parse_observable(const std::string& s);

struct ObservableSample {
  std::uint64_t seed = 0;
  double value = 0.0;  // ms; +inf for an empty weak set
  bool ok = true;
  std::string message;
  double n_exponent = 0.0;  // Hahn fits only
};

struct SimulationSpec {
  BathGeometry geometry;
  Observable observable = Observable::T2StarFormula;
  CCEConfig cce;  // order, states, radius, model for the Hahn route; empty grid = default
  Isotope isotope = Isotope::N15;
  FieldConfig field;
  unsigned threads = 1;
};

// Per-configuration seed: derive_seed(seed, {sweep_cell, cell, index}).
std::uint64_t config_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t index);

std::vector<ObservableSample> simulate_observable(const SimulationSpec& spec, int n_configs, const Params& params,
                                                  std::uint64_t seed, std::uint64_t cell = 0);

// Average of the per-configuration Hahn or Ramsey CCE curves (the other
// ensemble-averaging mode), on a shared time grid.
CoherenceCurve ensemble_average_curve(const SimulationSpec& spec, const PulseSequence& sequence, int n_configs,
                                      const Params& params, std::uint64_t seed, std::uint64_t cell = 0);

struct SweepSpec {
  std::vector<double> thicknesses;  // nm, strictly increasing
  std::vector<double> densities;    // ppm, strictly increasing
  int n_configs = 100;
  Observable observable = Observable::T2StarFormula;
  std::uint64_t seed = 1;
  Isotope isotope = Isotope::N15;
  FieldConfig field;
  CCEConfig cce;
  PlacementMode placement = PlacementMode::Lattice;
  double lateral_radius = 0.0;   // nm; <= 0: sized from converged_spins
  double converged_spins = 0.0;  // <= 0: 12 for T2*, 100 for Hahn
  double quorum = 0.9;
  unsigned threads = 1;
  std::string checkpoint_path;  // empty: no checkpointing

  void validate() const;
};

struct SweepCell {
  double thickness = 0.0;
  double density = 0.0;
  double lateral_radius = 0.0;
  std::vector<ObservableSample> samples;
  std::size_t n_failed = 0;
  bool complete = false;
  std::optional<DistributionStats> stats;
};

struct SweepGrid {
  std::vector<double> thicknesses;
  std::vector<double> densities;
  std::vector<SweepCell> cells;  // thickness-major
  std::vector<std::pair<std::string, std::string>> metadata;

  const SweepCell& cell(std::size_t it, std::size_t id) const { return cells[it * densities.size() + id]; }
  SweepCell& cell(std::size_t it, std::size_t id) { return cells[it * densities.size() + id]; }
};

void finalize_cell(SweepCell& cell, int n_configs, double quorum);

using SweepProgress = std::function<void(std::size_t done, std::size_t total)>;
SweepGrid run_sweep(const SweepSpec& spec, const Params& params, const SweepProgress& progress = {});

std::string sweep_to_text(const SweepGrid& grid);
SweepGrid sweep_from_text(const std::string& text);
void save_sweep(const std::string& path, const SweepGrid& grid);
SweepGrid load_sweep(const std::string& path);

}  // namespace nvbath
