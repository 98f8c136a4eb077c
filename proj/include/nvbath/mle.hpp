#pragma once

// Rate distributions P(1/T2*) over a (thickness, density) library and the
// maximum-likelihood inversion of measured T2* sets.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvbath/analysis.hpp"

namespace nvbath {

inline constexpr const char* kLibrarySchema = "nvbath.library/1";

struct HistogramSpec {
  int min_bins = 20;
  int max_bins = 200;
};

struct LibraryCell {
  double thickness = 0.0;
  double density = 0.0;
  std::vector<double> rates;  // 1/T2*, ms^-1, sorted ascending
};

struct CoherenceLibrary {
  std::vector<double> thicknesses;  // nm
  std::vector<double> densities;    // ppm
  std::vector<LibraryCell> cells;   // thickness-major
  HistogramSpec histogram;
  std::vector<std::pair<std::string, std::string>> provenance;

  const LibraryCell& cell(std::size_t it, std::size_t id) const { return cells[it * densities.size() + id]; }
  void validate() const;
};

// Rates 1/T2* of every successful finite sample in each sweep cell.
CoherenceLibrary build_library(const SweepGrid& grid);

std::string library_to_json(const CoherenceLibrary& lib);
CoherenceLibrary library_from_json(const std::string& text);
void save_library(const std::string& path, const CoherenceLibrary& lib);
CoherenceLibrary load_library(const std::string& path);

// Histogram density with Freedman-Diaconis bins (clamped to the spec),
// linear between bin centers and flat over the outer half bins, plus a
// probability floor 1/(10 n width) applied after normalization.
class RatePdf {
public:
  static RatePdf build(std::span<const double> rates, const HistogramSpec& spec = {});

  double operator()(double rate) const;  // floored
  double raw(double rate) const;         // before flooring; 0 outside support
  double cdf(double rate) const;         // of the unfloored density
  double floor_value() const { return floor_; }
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  std::size_t n_bins() const { return density_.size(); }
  bool spike() const { return spike_; }
  bool few_samples() const { return n_ < 50; }

private:
  double lo_ = 0.0, hi_ = 0.0, width_ = 0.0, floor_ = 0.0;
  std::vector<double> density_;
  std::size_t n_ = 0;
  bool spike_ = false;
};

struct LikelihoodSurface {
  std::vector<double> thicknesses;
  std::vector<double> densities;
  std::vector<double> log_likelihood;  // thickness-major
  std::size_t argmax_thickness = 0;
  std::size_t argmax_density = 0;
  std::size_t n_measurements = 0;
  std::size_t floored_terms = 0;
  bool normalized = false;

  double at(std::size_t it, std::size_t id) const { return log_likelihood[it * densities.size() + id]; }
};

// PDFs of every library cell, built once and reused.
class LibraryPdfs {
public:
  explicit LibraryPdfs(const CoherenceLibrary& lib);
  const RatePdf& at(std::size_t it, std::size_t id) const { return pdfs_[it * n_density_ + id]; }
  // Bilinear interpolation of the cell PDFs at an off-grid (t, rho).
  double interpolated(double thickness, double density, double rate) const;

private:
  std::vector<double> thicknesses_, densities_;
  std::size_t n_density_ = 0;
  std::vector<RatePdf> pdfs_;
};

LikelihoodSurface likelihood_surface(std::span<const double> rates, const CoherenceLibrary& lib);
LikelihoodSurface likelihood_surface(std::span<const double> rates, const CoherenceLibrary& lib,
                                     const LibraryPdfs& pdfs);

struct DensityEstimate {
  double rho_mle = 0.0;    // ppm
  double rho_sigma = 0.0;  // ppm
  double fixed_thickness = 0.0;  // grid row actually used, nm
  double requested_thickness = 0.0;
  bool multimodal = false;
  double fit_residual = 0.0;
  std::vector<double> linecut_densities;
  std::vector<double> linecut_probability;  // exp(logL), normalized to unit area
};

DensityEstimate estimate_density(std::span<const double> rates, const CoherenceLibrary& lib, double fixed_thickness,
                                 int linecut_points = 401);

enum class BenchmarkEstimator {
  Linecut,      // rho_mle of estimate_density, as reported by the mle command
  GridArgmax,   // density of the best grid cell in the fixed-thickness row
};

struct ErrorBenchmark {
  std::vector<int> sample_counts;
  std::vector<double> mean_error;  // mean of |rho_mle - rho0|/rho0
  std::vector<double> rms_error;   // sqrt(mean eps^2)
  std::vector<double> tested_densities;
  double fixed_thickness = 0.0;
  double fit_a = 0.0;
  double fit_p = 0.0;
  double fit_residual = 0.0;  // rms of log residuals
  int trials = 0;
  BenchmarkEstimator estimator = BenchmarkEstimator::Linecut;
};

ErrorBenchmark benchmark_error(const CoherenceLibrary& lib, const std::vector<int>& sample_counts, int trials,
                               double fixed_thickness, std::uint64_t seed, unsigned threads = 1,
                               BenchmarkEstimator estimator = BenchmarkEstimator::Linecut);

// Measurement file: one T2* in microseconds per line, '#' comments.
std::vector<double> read_measurements_us(const std::string& path);
std::vector<double> parse_measurements_us(const std::string& text);
inline double t2star_us_to_rate(double t_us) { return 1e3 / t_us; }

std::string density_report(const DensityEstimate& est, const LikelihoodSurface& surface,
                           const std::vector<std::pair<std::string, std::string>>& extra = {});
std::string benchmark_report(const ErrorBenchmark& b);

}  // namespace nvbath
