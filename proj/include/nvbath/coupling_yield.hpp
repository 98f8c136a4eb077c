#pragma once

// Nearest-neighbor statistics, visibility of the nearest bath spin and the
// strong-coupling yield of 2D versus 3D baths.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvbath/bath.hpp"
#include "nvbath/parameters.hpp"

namespace nvbath {

inline constexpr const char* kYieldSchema = "nvbath.yield/1";

enum class Dimensionality { D2, D3 };

// Poisson nearest-neighbor law. `param` is the areal density (nm^-2) in 2D
// and the volume density (nm^-3) in 3D.
class NNDistribution {
public:
  NNDistribution(Dimensionality dim, double param);
  Dimensionality dim() const { return dim_; }
  double param() const { return param_; }
  double pdf(double r) const;
  double cdf(double r) const;
  double mean() const;
  double median() const;

private:
  Dimensionality dim_;
  double param_;
};

NNDistribution nn_pdf(Dimensionality dim, double param);
// Areal density of a slab: rho * effective thickness.
double areal_density(double density_ppm, double thickness, PlacementMode mode = PlacementMode::Lattice,
                     const PhysicalConstants& c = PhysicalConstants::codata());

// Bath dephasing sums with the r -> 0 divergence cut at r_c (geometric
// parts only; the dipolar prefactor cancels in ratios).
double gamma_cutoff_2d(double areal, double r_c);
double gamma_cutoff_3d(double rho, double r_c);

// Kolmogorov-Smirnov distance between samples and a model CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

struct VisibilitySample {
  double nu = 0.0;
  double a0 = 0.0;      // half the secular coupling of the nearest spin, rad/ms
  double a_bath = 0.0;  // rad/ms, all other spins
  double r_nn = 0.0;    // nm
  std::size_t nearest = 0;
};

VisibilitySample visibility(const BathConfiguration& config, const CentralSpinParams& central,
                            const PhysicalConstants& constants);

struct YieldSpec {
  std::vector<double> densities;    // ppm
  std::vector<double> thicknesses;  // nm, each <= master_thickness
  int n_configs = 1000;
  std::uint64_t seed = 1;
  double master_thickness = 50.0;
  // Lateral radius in units of the larger of the 3D and thinnest-slab 2D
  // mean nearest-neighbor distances.
  double radius_factor = 5.0;
  PlacementMode placement = PlacementMode::Lattice;
  Isotope isotope = Isotope::N15;
  int histogram_bins = 50;
  double histogram_log10_lo = -2.0;
  double histogram_log10_hi = 3.0;
  unsigned threads = 1;

  void validate() const;
};

struct YieldCell {
  double density = 0.0;
  double thickness = 0.0;
  double yield = 0.0;  // non-empty greedy strong partition
  double yield_stderr = 0.0;
  double yield_nu = 0.0;  // nearest spin nu >= 2 pi
  double yield_nu_stderr = 0.0;
  double mean_rnn = 0.0;     // formula <r_nn> for the density, nm
  double sampled_rnn = 0.0;  // mean nearest distance in the slices, nm
  double median_nu = 0.0;
  std::size_t n_configs = 0;
  std::size_t n_failed = 0;  // slices with fewer than two spins
  std::vector<std::size_t> nu_histogram;
};

struct YieldReport {
  std::vector<double> densities;
  std::vector<double> thicknesses;
  std::vector<YieldCell> cells;  // density-major
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> warnings;
  double histogram_log10_lo = -2.0;
  double histogram_log10_hi = 3.0;

  const YieldCell& cell(std::size_t id, std::size_t it) const { return cells[id * thicknesses.size() + it]; }
};

YieldReport yield_sweep(const YieldSpec& spec, const Params& params);

// Thickness where the greedy yield (or the nu >= 2 pi yield) crosses halfway
// between its thinnest and thickest values, interpolated linearly in log
// thickness. NaN if absent.
double crossover_thickness(const YieldReport& report, std::size_t density_index, bool nu_criterion = false);

std::string yield_to_text(const YieldReport& report);
void save_yield(const std::string& path, const YieldReport& report);

struct VisibilityRatio {
  // <r_nn^-3 / Gamma_kD(r_nn)> ratio with the sampled r_nn as cutoff.
  double ratio = 0.0;
  double ratio_direct_mean = 0.0;    // <nu> from full couplings
  double ratio_direct_median = 0.0;  // median nu from full couplings
  double thin_estimator = 0.0, thick_estimator = 0.0;
  double thin_mean_nu = 0.0, thick_mean_nu = 0.0;
  std::size_t n_configs = 0;
  std::size_t n_skipped = 0;
  std::vector<std::string> warnings;
};

VisibilityRatio visibility_ratio_2d3d(double density_ppm, double thin, double thick, int n_configs,
                                      std::uint64_t seed, const Params& params,
                                      PlacementMode placement = PlacementMode::Lattice, unsigned threads = 1);

}  // namespace nvbath
