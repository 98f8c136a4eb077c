#include "nvbath/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>

#include "json.hpp"

#include "nvbath/error.hpp"
#include "nvbath/parallel.hpp"
#include "nvbath/rng.hpp"
#include "nvbath/textio.hpp"

namespace nvbath {

using nlohmann::json;

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double f = pos - static_cast<double>(i);
  if (i + 1 >= s.size()) return s.back();
  return s[i] + f * (s[i + 1] - s[i]);
}

std::size_t nearest_index(const std::vector<double>& axis, double v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i] - v) < std::abs(axis[best] - v)) best = i;
  return best;
}

// Bracketing indices and weight of v on a sorted axis, clamped to its ends.
void bracket(const std::vector<double>& axis, double v, std::size_t& i0, std::size_t& i1, double& w) {
  if (axis.size() == 1 || v <= axis.front()) {
    i0 = i1 = 0;
    w = 0.0;
    return;
  }
  if (v >= axis.back()) {
    i0 = i1 = axis.size() - 1;
    w = 0.0;
    return;
  }
  i1 = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), v) - axis.begin());
  i0 = i1 - 1;
  w = (v - axis[i0]) / (axis[i1] - axis[i0]);
}

struct GaussData {
  const std::vector<double>* x;
  const std::vector<double>* y;
};

int gauss_f(const gsl_vector* p, void* params, gsl_vector* f) {
  const auto& d = *static_cast<GaussData*>(params);
  const double a = std::exp(gsl_vector_get(p, 0)), mu = gsl_vector_get(p, 1), s = std::exp(gsl_vector_get(p, 2));
  for (std::size_t i = 0; i < d.x->size(); ++i) {
    const double z = ((*d.x)[i] - mu) / s;
    gsl_vector_set(f, i, a * std::exp(-0.5 * z * z) - (*d.y)[i]);
  }
  return GSL_SUCCESS;
}

int gauss_df(const gsl_vector* p, void* params, gsl_matrix* j) {
  const auto& d = *static_cast<GaussData*>(params);
  const double a = std::exp(gsl_vector_get(p, 0)), mu = gsl_vector_get(p, 1), s = std::exp(gsl_vector_get(p, 2));
  for (std::size_t i = 0; i < d.x->size(); ++i) {
    const double z = ((*d.x)[i] - mu) / s;
    const double g = a * std::exp(-0.5 * z * z);
    gsl_matrix_set(j, i, 0, g);
    gsl_matrix_set(j, i, 1, g * z / s);
    gsl_matrix_set(j, i, 2, g * z * z);
  }
  return GSL_SUCCESS;
}

struct GaussFit {
  double a, mu, sigma, residual;
};

GaussFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y, double mu0, double sigma0,
                      double a0) {
  gsl_error_handler_t* prev = gsl_set_error_handler_off();
  GaussData data{&x, &y};
  gsl_multifit_nlinear_fdf fdf{};
  fdf.f = gauss_f;
  fdf.df = gauss_df;
  fdf.n = x.size();
  fdf.p = 3;
  fdf.params = &data;
  auto fp = gsl_multifit_nlinear_default_parameters();
  auto* w = gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &fp, x.size(), 3);
  gsl_vector* p0 = gsl_vector_alloc(3);
  gsl_vector_set(p0, 0, std::log(a0));
  gsl_vector_set(p0, 1, mu0);
  gsl_vector_set(p0, 2, std::log(sigma0));
  gsl_multifit_nlinear_init(p0, &fdf, w);
  int info = 0;
  gsl_multifit_nlinear_driver(500, 1e-10, 1e-14, 0.0, nullptr, nullptr, &info, w);
  const gsl_vector* p = gsl_multifit_nlinear_position(w);
  GaussFit g{std::exp(gsl_vector_get(p, 0)), gsl_vector_get(p, 1), std::exp(gsl_vector_get(p, 2)),
             gsl_blas_dnrm2(gsl_multifit_nlinear_residual(w))};
  gsl_vector_free(p0);
  gsl_multifit_nlinear_free(w);
  gsl_set_error_handler(prev);
  return g;
}

json meta_json(const std::vector<std::pair<std::string, std::string>>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

}  // namespace

void CoherenceLibrary::validate() const {
  require(!thicknesses.empty() && !densities.empty(), "library axes must not be empty");
  for (std::size_t i = 1; i < thicknesses.size(); ++i)
    require(thicknesses[i] > thicknesses[i - 1], "library thicknesses must be strictly increasing");
  for (std::size_t i = 1; i < densities.size(); ++i)
    require(densities[i] > densities[i - 1], "library densities must be strictly increasing");
  require(cells.size() == thicknesses.size() * densities.size(), "library cell count does not match its axes");
  require(histogram.min_bins >= 1 && histogram.max_bins >= histogram.min_bins, "invalid histogram bin limits");
  for (const auto& c : cells) {
    require(!c.rates.empty(), "library cell is empty");
    for (double r : c.rates) require(std::isfinite(r) && r > 0.0, "library rates must be finite and positive");
  }
}

CoherenceLibrary build_library(const SweepGrid& grid) {
  CoherenceLibrary lib;
  lib.thicknesses = grid.thicknesses;
  lib.densities = grid.densities;
  lib.provenance = grid.metadata;
  lib.provenance.emplace_back("pdf_interpolation", "bilinear in (thickness, density) on cell PDFs");
  lib.provenance.emplace_back("histogram_rule", "freedman-diaconis");
  std::size_t few = 0;
  for (const auto& c : grid.cells) {
    LibraryCell lc;
    lc.thickness = c.thickness;
    lc.density = c.density;
    for (const auto& s : c.samples)
      if (s.ok && std::isfinite(s.value) && s.value > 0.0) lc.rates.push_back(1.0 / s.value);
    if (lc.rates.empty())
      fail(ErrorCode::Domain, "empty library cell at thickness " + fmt_double(c.thickness) + " nm, density " +
                                  fmt_double(c.density) + " ppm");
    if (lc.rates.size() < 50) ++few;
    std::sort(lc.rates.begin(), lc.rates.end());
    lib.cells.push_back(std::move(lc));
  }
  if (few) lib.provenance.emplace_back("warning", std::to_string(few) + " cells hold fewer than 50 samples");
  lib.validate();
  return lib;
}

std::string library_to_json(const CoherenceLibrary& lib) {
  json j;
  j["schema"] = kLibrarySchema;
  j["tool_version"] = kToolVersion;
  j["thicknesses_nm"] = lib.thicknesses;
  j["densities_ppm"] = lib.densities;
  j["histogram"] = {{"rule", "freedman-diaconis"}, {"min_bins", lib.histogram.min_bins},
                    {"max_bins", lib.histogram.max_bins}};
  j["provenance"] = meta_json(lib.provenance);
  json cells = json::array();
  for (const auto& c : lib.cells)
    cells.push_back({{"thickness_nm", c.thickness}, {"density_ppm", c.density}, {"rates_per_ms", c.rates}});
  j["cells"] = cells;
  return j.dump(1) + "\n";
}

CoherenceLibrary library_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed library file: ") + e.what());
  }
  try {
    if (j.value("schema", std::string()) != kLibrarySchema)
      fail(ErrorCode::Io, std::string("library file schema must be ") + kLibrarySchema);
    CoherenceLibrary lib;
    lib.thicknesses = j.at("thicknesses_nm").get<std::vector<double>>();
    lib.densities = j.at("densities_ppm").get<std::vector<double>>();
    lib.histogram.min_bins = j.at("histogram").at("min_bins").get<int>();
    lib.histogram.max_bins = j.at("histogram").at("max_bins").get<int>();
    for (const auto& [k, v] : j.at("provenance").items()) lib.provenance.emplace_back(k, v.get<std::string>());
    for (const auto& c : j.at("cells")) {
      LibraryCell lc;
      lc.thickness = c.at("thickness_nm").get<double>();
      lc.density = c.at("density_ppm").get<double>();
      lc.rates = c.at("rates_per_ms").get<std::vector<double>>();
      lib.cells.push_back(std::move(lc));
    }
    lib.validate();
    for (std::size_t it = 0; it < lib.thicknesses.size(); ++it)
      for (std::size_t id = 0; id < lib.densities.size(); ++id) {
        const auto& c = lib.cell(it, id);
        if (c.thickness != lib.thicknesses[it] || c.density != lib.densities[id])
          fail(ErrorCode::Io, "library cells are not in thickness-major grid order");
      }
    return lib;
  } catch (const json::exception& e) {
    fail(ErrorCode::Io, std::string("invalid library file: ") + e.what());
  }
}

void save_library(const std::string& path, const CoherenceLibrary& lib) { write_file(path, library_to_json(lib)); }

CoherenceLibrary load_library(const std::string& path) { return library_from_json(read_file(path)); }

RatePdf RatePdf::build(std::span<const double> rates, const HistogramSpec& spec) {
  if (rates.empty()) fail(ErrorCode::Domain, "cannot build a PDF from an empty cell");
  std::vector<double> s(rates.begin(), rates.end());
  std::sort(s.begin(), s.end());
  RatePdf p;
  p.n_ = s.size();
  const double n = static_cast<double>(s.size());
  p.lo_ = s.front();
  p.hi_ = s.back();
  if (p.hi_ - p.lo_ <= 1e-12 * std::max(std::abs(p.hi_), std::numeric_limits<double>::min())) {
    const double w = std::max(std::abs(p.lo_) * 1e-6, std::numeric_limits<double>::min() * 1e6);
    p.spike_ = true;
    p.lo_ -= 0.5 * w;
    p.hi_ += 0.5 * w;
    p.width_ = w;
    p.density_ = {1.0 / w};
    p.floor_ = 1.0 / (10.0 * n * w);
    return p;
  }
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  const double h_fd = 2.0 * iqr / std::cbrt(n);
  int bins = h_fd > 0.0 ? static_cast<int>(std::ceil((p.hi_ - p.lo_) / h_fd)) : spec.max_bins;
  bins = std::clamp(bins, spec.min_bins, spec.max_bins);
  p.width_ = (p.hi_ - p.lo_) / bins;
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : s) {
    auto k = static_cast<int>(std::floor((v - p.lo_) / p.width_));
    k = std::clamp(k, 0, bins - 1);
    counts[static_cast<std::size_t>(k)] += 1.0;
  }
  double area = 0.0;
  for (double c : counts) area += c * p.width_;
  p.density_.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) p.density_[k] = counts[k] / area;
  p.floor_ = 1.0 / (10.0 * n * (p.hi_ - p.lo_));
  return p;
}

double RatePdf::raw(double rate) const {
  if (!(rate >= lo_ && rate <= hi_)) return 0.0;
  const std::size_t k_n = density_.size();
  if (k_n == 1) return density_[0];
  const double u = (rate - lo_) / width_ - 0.5;
  if (u <= 0.0) return density_.front();
  if (u >= static_cast<double>(k_n - 1)) return density_.back();
  const auto k = static_cast<std::size_t>(std::floor(u));
  const double f = u - static_cast<double>(k);
  return density_[k] * (1.0 - f) + density_[k + 1] * f;
}

double RatePdf::operator()(double rate) const { return std::max(raw(rate), floor_); }

double RatePdf::cdf(double rate) const {
  if (rate <= lo_) return 0.0;
  if (rate >= hi_) return 1.0;
  const std::size_t k_n = density_.size();
  const double h = width_;
  double acc = 0.0;
  // Flat half bin at the low edge.
  const double c0 = lo_ + 0.5 * h;
  acc += density_[0] * (std::min(rate, c0) - lo_);
  if (rate <= c0 || k_n == 1) return k_n == 1 ? density_[0] * (rate - lo_) : acc;
  for (std::size_t k = 0; k + 1 < k_n; ++k) {
    const double a = lo_ + (static_cast<double>(k) + 0.5) * h;
    const double b = a + h;
    if (rate >= b) {
      acc += 0.5 * (density_[k] + density_[k + 1]) * h;
      continue;
    }
    const double f = (rate - a) / h;
    acc += h * (density_[k] * f + 0.5 * (density_[k + 1] - density_[k]) * f * f);
    return acc;
  }
  acc += density_.back() * (rate - (hi_ - 0.5 * h));
  return acc;
}

LibraryPdfs::LibraryPdfs(const CoherenceLibrary& lib)
    : thicknesses_(lib.thicknesses), densities_(lib.densities), n_density_(lib.densities.size()) {
  lib.validate();
  pdfs_.reserve(lib.cells.size());
  for (const auto& c : lib.cells) pdfs_.push_back(RatePdf::build(c.rates, lib.histogram));
}

double LibraryPdfs::interpolated(double thickness, double density, double rate) const {
  std::size_t t0, t1, d0, d1;
  double wt, wd;
  bracket(thicknesses_, thickness, t0, t1, wt);
  bracket(densities_, density, d0, d1, wd);
  return (1 - wt) * (1 - wd) * at(t0, d0)(rate) + (1 - wt) * wd * at(t0, d1)(rate) +
         wt * (1 - wd) * at(t1, d0)(rate) + wt * wd * at(t1, d1)(rate);
}

LikelihoodSurface likelihood_surface(std::span<const double> rates, const CoherenceLibrary& lib) {
  const LibraryPdfs pdfs(lib);
  return likelihood_surface(rates, lib, pdfs);
}

LikelihoodSurface likelihood_surface(std::span<const double> rates, const CoherenceLibrary& lib,
                                     const LibraryPdfs& pdfs) {
  require(!rates.empty(), "at least one measurement is required");
  for (double r : rates) require(std::isfinite(r) && r > 0.0, "measured rates must be finite and positive");
  LikelihoodSurface s;
  s.thicknesses = lib.thicknesses;
  s.densities = lib.densities;
  s.n_measurements = rates.size();
  s.log_likelihood.resize(lib.cells.size());
  bool any_supported = false;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < lib.thicknesses.size(); ++it)
    for (std::size_t id = 0; id < lib.densities.size(); ++id) {
      const auto& pdf = pdfs.at(it, id);
      double ll = 0.0;
      std::size_t floored = 0;
      for (double r : rates) {
        const double raw = pdf.raw(r);
        if (raw < pdf.floor_value()) ++floored;
        ll += std::log(std::max(raw, pdf.floor_value()));
      }
      s.floored_terms += floored;
      if (floored < rates.size()) any_supported = true;
      const std::size_t idx = it * lib.densities.size() + id;
      s.log_likelihood[idx] = ll;
      if (ll > best) {
        best = ll;
        s.argmax_thickness = it;
        s.argmax_density = id;
      }
    }
  if (!any_supported) fail(ErrorCode::Domain, "data outside library support");
  return s;
}

namespace {

DensityEstimate linecut_estimate(std::span<const double> rates, const CoherenceLibrary& lib, const LibraryPdfs& pdfs,
                                 double fixed_thickness, int linecut_points) {
  DensityEstimate est;
  est.requested_thickness = fixed_thickness;
  const std::size_t it = nearest_index(lib.thicknesses, fixed_thickness);
  est.fixed_thickness = lib.thicknesses[it];
  const double d_lo = lib.densities.front();
  const double d_hi = lib.densities.back();
  if (lib.densities.size() < 2) fail(ErrorCode::Domain, "uninformative likelihood");
  std::vector<double> x(static_cast<std::size_t>(linecut_points)), ll(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = d_lo + (d_hi - d_lo) * static_cast<double>(i) / static_cast<double>(x.size() - 1);
    double acc = 0.0;
    for (double r : rates) acc += std::log(pdfs.interpolated(est.fixed_thickness, x[i], r));
    ll[i] = acc;
  }
  const double mx = *std::max_element(ll.begin(), ll.end());
  const double mn = *std::min_element(ll.begin(), ll.end());
  if (mx - mn < 1e-12) fail(ErrorCode::Domain, "uninformative likelihood");
  std::vector<double> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::exp(ll[i] - mx);
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (p[i] + p[i - 1]) * (x[i] - x[i - 1]);
  for (auto& v : p) v /= area;
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double w = 0.5 * (p[i] + p[i - 1]) * (x[i] - x[i - 1]);
    const double xm = 0.5 * (x[i] + x[i - 1]);
    m1 += w * xm;
    m2 += w * xm * xm;
  }
  const double sd0 = std::sqrt(std::max(m2 - m1 * m1, 1e-6 * (d_hi - d_lo) * (d_hi - d_lo)));
  const auto peak = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  const GaussFit g = fit_gaussian(x, p, x[peak], sd0, p[peak]);
  est.rho_mle = std::clamp(g.mu, d_lo, d_hi);
  est.rho_sigma = std::abs(g.sigma);
  est.fit_residual = g.residual / (std::sqrt(static_cast<double>(x.size())) * p[peak]);

  // Separate peaks above 10% of the maximum with a dip below half the
  // smaller one flag a multimodal linecut.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool left = i == 0 || p[i] > p[i - 1];
    const bool right = i + 1 == p.size() || p[i] >= p[i + 1];
    if (left && right && p[i] > 0.1 * p[peak]) peaks.push_back(i);
  }
  for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
    const double dip = *std::min_element(p.begin() + static_cast<std::ptrdiff_t>(peaks[k]),
                                         p.begin() + static_cast<std::ptrdiff_t>(peaks[k + 1]) + 1);
    if (dip < 0.5 * std::min(p[peaks[k]], p[peaks[k + 1]])) est.multimodal = true;
  }
  if (est.fit_residual > 0.2) est.multimodal = true;
  est.linecut_densities = std::move(x);
  est.linecut_probability = std::move(p);
  return est;
}

}  // namespace

DensityEstimate estimate_density(std::span<const double> rates, const CoherenceLibrary& lib, double fixed_thickness,
                                 int linecut_points) {
  require(linecut_points >= 5, "linecut needs at least 5 points");
  const LibraryPdfs pdfs(lib);
  likelihood_surface(rates, lib, pdfs);  // support check
  return linecut_estimate(rates, lib, pdfs, fixed_thickness, linecut_points);
}

ErrorBenchmark benchmark_error(const CoherenceLibrary& lib, const std::vector<int>& sample_counts, int trials,
                               double fixed_thickness, std::uint64_t seed, unsigned threads,
                               BenchmarkEstimator estimator) {
  require(!sample_counts.empty(), "benchmark needs at least one sample count");
  require(trials >= 1, "benchmark needs at least one trial");
  require(lib.densities.size() >= 3, "benchmark needs at least three grid densities");
  const LibraryPdfs pdfs(lib);
  ErrorBenchmark b;
  b.sample_counts = sample_counts;
  b.trials = trials;
  b.estimator = estimator;
  const std::size_t it = nearest_index(lib.thicknesses, fixed_thickness);
  b.fixed_thickness = lib.thicknesses[it];
  std::vector<std::size_t> tested;
  for (std::size_t id = 1; id + 1 < lib.densities.size(); ++id) {
    tested.push_back(id);
    b.tested_densities.push_back(lib.densities[id]);
  }
  const std::size_t nd = lib.densities.size();
  for (int n_samples : sample_counts) {
    require(n_samples >= 1, "sample counts must be positive");
    const std::size_t units = tested.size() * static_cast<std::size_t>(trials);
    std::vector<double> eps(units);
    parallel_for(units, threads, [&](std::size_t u) {
      const std::size_t j = u / static_cast<std::size_t>(trials);
      const std::size_t k = u % static_cast<std::size_t>(trials);
      const std::size_t id0 = tested[j];
      const auto& pool = lib.cell(it, id0).rates;
      Rng rng(derive_seed(seed, {stream::benchmark, static_cast<std::uint64_t>(n_samples), id0, k}));
      std::vector<double> data(static_cast<std::size_t>(n_samples));
      for (auto& r : data) r = pool[rng.below(pool.size())];
      const double rho0 = lib.densities[id0];
      if (estimator == BenchmarkEstimator::Linecut) {
        const auto est = linecut_estimate(data, lib, pdfs, b.fixed_thickness, 401);
        eps[u] = std::abs(est.rho_mle - rho0) / rho0;
        return;
      }
      std::size_t best = 0;
      double best_ll = -std::numeric_limits<double>::infinity();
      for (std::size_t id = 0; id < nd; ++id) {
        double ll = 0.0;
        for (double r : data) ll += std::log(pdfs.at(it, id)(r));
        if (ll > best_ll) {
          best_ll = ll;
          best = id;
        }
      }
      eps[u] = std::abs(lib.densities[best] - rho0) / rho0;
    });
    double s1 = 0.0, s2 = 0.0;
    for (double e : eps) {
      s1 += e;
      s2 += e * e;
    }
    b.mean_error.push_back(s1 / static_cast<double>(units));
    b.rms_error.push_back(std::sqrt(s2 / static_cast<double>(units)));
  }
  // log(err) = log(A) - p log(N), least squares over nonzero means.
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < sample_counts.size(); ++i)
    if (b.mean_error[i] > 0.0) {
      lx.push_back(std::log(static_cast<double>(sample_counts[i])));
      ly.push_back(std::log(b.mean_error[i]));
    }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    b.fit_p = -slope;
    b.fit_a = std::exp(my - slope * mx);
    double r2 = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - (my + slope * (lx[i] - mx));
      r2 += r * r;
    }
    b.fit_residual = std::sqrt(r2 / static_cast<double>(lx.size()));
  } else {
    b.fit_p = std::numeric_limits<double>::quiet_NaN();
    b.fit_a = std::numeric_limits<double>::quiet_NaN();
  }
  return b;
}

std::vector<double> parse_measurements_us(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 1) fail(ErrorCode::Io, "measurement line " + std::to_string(lineno) + " has extra fields");
    const double v = parse_double(tok[0]);
    if (!(std::isfinite(v) && v > 0.0))
      fail(ErrorCode::InvalidArgument, "measurement line " + std::to_string(lineno) + " must be a positive T2*");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "measurement file holds no values");
  return out;
}

std::vector<double> read_measurements_us(const std::string& path) { return parse_measurements_us(read_file(path)); }

std::string density_report(const DensityEstimate& est, const LikelihoodSurface& surface,
                           const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ostringstream o;
  o << "# schema nvbath.mle/1\n";
  o << "# tool nvbath " << kToolVersion << "\n";
  for (const auto& [k, v] : extra) o << "# " << k << " = " << v << "\n";
  o << "rho_mle_ppm = " << fmt_double(est.rho_mle) << "\n";
  o << "rho_sigma_ppm = " << fmt_double(est.rho_sigma) << "\n";
  o << "fixed_thickness_nm = " << fmt_double(est.fixed_thickness) << "\n";
  o << "requested_thickness_nm = " << fmt_double(est.requested_thickness) << "\n";
  o << "multimodal = " << (est.multimodal ? 1 : 0) << "\n";
  o << "fit_residual = " << fmt_double(est.fit_residual) << "\n";
  o << "n_measurements = " << surface.n_measurements << "\n";
  o << "floored_terms = " << surface.floored_terms << "\n";
  o << "argmax_thickness_nm = " << fmt_double(surface.thicknesses[surface.argmax_thickness]) << "\n";
  o << "argmax_density_ppm = " << fmt_double(surface.densities[surface.argmax_density]) << "\n";
  o << "[surface]\nthickness_nm,density_ppm,log_likelihood\n";
  for (std::size_t it = 0; it < surface.thicknesses.size(); ++it)
    for (std::size_t id = 0; id < surface.densities.size(); ++id)
      o << fmt_double(surface.thicknesses[it]) << "," << fmt_double(surface.densities[id]) << ","
        << fmt_double(surface.at(it, id)) << "\n";
  o << "[linecut]\ndensity_ppm,probability\n";
  for (std::size_t i = 0; i < est.linecut_densities.size(); ++i)
    o << fmt_double(est.linecut_densities[i]) << "," << fmt_double(est.linecut_probability[i]) << "\n";
  return o.str();
}

std::string benchmark_report(const ErrorBenchmark& b) {
  std::ostringstream o;
  o << "# schema nvbath.benchmark/1\n";
  o << "# tool nvbath " << kToolVersion << "\n";
  o << "fixed_thickness_nm = " << fmt_double(b.fixed_thickness) << "\n";
  o << "trials = " << b.trials << "\n";
  o << "estimator = " << (b.estimator == BenchmarkEstimator::Linecut ? "linecut" : "grid_argmax") << "\n";
  std::string d;
  for (double v : b.tested_densities) d += (d.empty() ? "" : " ") + fmt_double(v);
  o << "tested_densities_ppm = " << d << "\n";
  o << "fit_a = " << fmt_double(b.fit_a) << "\n";
  o << "fit_p = " << fmt_double(b.fit_p) << "\n";
  o << "fit_log_residual = " << fmt_double(b.fit_residual) << "\n";
  o << "[errors]\nn,mean_relative_error,rms_relative_error\n";
  for (std::size_t i = 0; i < b.sample_counts.size(); ++i)
    o << b.sample_counts[i] << "," << fmt_double(b.mean_error[i]) << "," << fmt_double(b.rms_error[i]) << "\n";
  return o.str();
}

}  // namespace nvbath
