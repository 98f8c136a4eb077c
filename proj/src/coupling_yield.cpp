#include "nvbath/coupling_yield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "nvbath/cce.hpp"
#include "nvbath/error.hpp"
#include "nvbath/parallel.hpp"
#include "nvbath/rng.hpp"
#include "nvbath/textio.hpp"

namespace nvbath {

namespace {

constexpr double kPi = std::numbers::pi;

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  const double hi = v[m];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (lo + hi);
}

double mean_2d(double areal) { return 0.5 / std::sqrt(areal); }

}  // namespace

NNDistribution::NNDistribution(Dimensionality dim, double param) : dim_(dim), param_(param) {
  require(std::isfinite(param) && param > 0.0, "density must be positive");
}

double NNDistribution::pdf(double r) const {
  if (r < 0.0) return 0.0;
  if (dim_ == Dimensionality::D2) return std::exp(-kPi * r * r * param_) * param_ * 2.0 * kPi * r;
  return std::exp(-4.0 * kPi * r * r * r * param_ / 3.0) * 4.0 * kPi * r * r * param_;
}

double NNDistribution::cdf(double r) const {
  if (r <= 0.0) return 0.0;
  if (dim_ == Dimensionality::D2) return -std::expm1(-kPi * r * r * param_);
  return -std::expm1(-4.0 * kPi * r * r * r * param_ / 3.0);
}

double NNDistribution::mean() const {
  if (dim_ == Dimensionality::D2) return mean_2d(param_);
  return std::tgamma(4.0 / 3.0) * std::cbrt(3.0 / (4.0 * kPi * param_));
}

double NNDistribution::median() const {
  if (dim_ == Dimensionality::D2) return std::sqrt(std::numbers::ln2 / (kPi * param_));
  return std::cbrt(3.0 * std::numbers::ln2 / (4.0 * kPi * param_));
}

NNDistribution nn_pdf(Dimensionality dim, double param) { return NNDistribution(dim, param); }

double areal_density(double density_ppm, double thickness, PlacementMode mode, const PhysicalConstants& c) {
  return ppm_to_number_density(density_ppm, c) * effective_thickness(thickness, mode, c);
}

double gamma_cutoff_2d(double areal, double r_c) {
  require(areal > 0.0 && r_c > 0.0, "cutoff and density must be positive");
  return std::sqrt(kPi * areal / 2.0) / (r_c * r_c);
}

double gamma_cutoff_3d(double rho, double r_c) {
  require(rho > 0.0 && r_c > 0.0, "cutoff and density must be positive");
  return std::sqrt(4.0 * kPi * rho / (3.0 * r_c * r_c * r_c));
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), "no samples for KS statistic");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

VisibilitySample visibility(const BathConfiguration& config, const CentralSpinParams& central,
                            const PhysicalConstants& constants) {
  if (config.spins.size() < 2) fail(ErrorCode::Domain, "visibility undefined: fewer than two bath spins");
  VisibilitySample v;
  v.r_nn = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < config.spins.size(); ++i) {
    const double r = (config.spins[i].position - config.central_position).norm();
    if (r < v.r_nn) {
      v.r_nn = r;
      v.nearest = i;
    }
  }
  const auto a = bath_couplings(config, central, constants);
  std::vector<double> sq;
  sq.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (i != v.nearest) sq.push_back(0.25 * a[i] * a[i]);
  std::sort(sq.begin(), sq.end());
  double s = 0.0;
  for (double x : sq) s += x;
  v.a0 = 0.5 * std::abs(a[v.nearest]);
  v.a_bath = std::sqrt(s);
  v.nu = v.a_bath > 0.0 ? v.a0 / (std::sqrt(2.0) * v.a_bath) : std::numeric_limits<double>::infinity();
  return v;
}

void YieldSpec::validate() const {
  require(!densities.empty() && !thicknesses.empty(), "yield sweep needs densities and thicknesses");
  for (double d : densities) require(std::isfinite(d) && d >= 0.0, "densities must be non-negative");
  for (std::size_t i = 0; i < thicknesses.size(); ++i) {
    require(thicknesses[i] > 0.0, "thicknesses must be positive");
    require(thicknesses[i] <= master_thickness * (1.0 + 1e-12), "thicknesses cannot exceed the master slab");
    if (i) require(thicknesses[i] > thicknesses[i - 1], "thicknesses must be strictly increasing");
  }
  require(n_configs >= 1, "yield sweep needs at least one configuration");
  require(radius_factor > 0.0, "radius factor must be positive");
  require(histogram_bins >= 1 && histogram_log10_hi > histogram_log10_lo, "invalid histogram range");
}

YieldReport yield_sweep(const YieldSpec& spec, const Params& params) {
  spec.validate();
  YieldReport rep;
  rep.densities = spec.densities;
  rep.thicknesses = spec.thicknesses;
  rep.histogram_log10_lo = spec.histogram_log10_lo;
  rep.histogram_log10_hi = spec.histogram_log10_hi;
  const auto& c = params.constants;
  const BathOptions opts = BathOptions::from(params, spec.isotope);
  const std::size_t nt = spec.thicknesses.size();
  const auto nc = static_cast<std::size_t>(spec.n_configs);
  const double bw = (spec.histogram_log10_hi - spec.histogram_log10_lo) / spec.histogram_bins;

  for (std::size_t id = 0; id < spec.densities.size(); ++id) {
    const double rho_ppm = spec.densities[id];
    if (rho_ppm <= 0.0) {
      rep.warnings.push_back("density " + fmt_double(rho_ppm) + " ppm: yield undefined, reported as 0");
      for (std::size_t it = 0; it < nt; ++it) {
        YieldCell cell;
        cell.thickness = spec.thicknesses[it];
        cell.mean_rnn = std::numeric_limits<double>::infinity();
        cell.median_nu = std::numeric_limits<double>::quiet_NaN();
        cell.nu_histogram.assign(static_cast<std::size_t>(spec.histogram_bins), 0);
        rep.cells.push_back(cell);
      }
      continue;
    }
    const double r3 = mean_nn_distance_formula(rho_ppm, c);
    const double r2 = mean_2d(areal_density(rho_ppm, spec.thicknesses.front(), spec.placement, c));
    BathGeometry g;
    g.density_ppm = rho_ppm;
    g.thickness = spec.master_thickness;
    g.lateral_radius = spec.radius_factor * std::max(r3, r2);
    g.mode = spec.placement;

    // Per (config, thickness): strong flag, nu flag, nu, r_nn, ok.
    struct Slot {
      bool strong = false, strong_nu = false, ok = false;
      double nu = 0.0, r_nn = 0.0;
    };
    std::vector<Slot> slots(nc * nt);
    parallel_for(nc, spec.threads, [&](std::size_t k) {
      const auto master = generate_bath(g, derive_seed(spec.seed, {stream::yield, id, k}), opts);
      for (std::size_t it = 0; it < nt; ++it) {
        const auto slice = slice_bath(master, spec.thicknesses[it]);
        Slot& s = slots[k * nt + it];
        if (slice.spins.empty()) continue;
        s.strong = !partition_strong_weak(slice, params.central, c).strong.empty();
        s.r_nn = nearest_neighbor_distance(slice);
        if (slice.spins.size() < 2) {
          s.strong_nu = true;  // lone spin: nothing else dephases
          continue;
        }
        const auto v = visibility(slice, params.central, c);
        s.ok = true;
        s.nu = v.nu;
        s.strong_nu = v.nu >= units::two_pi;
      }
    });

    for (std::size_t it = 0; it < nt; ++it) {
      YieldCell cell;
      cell.density = rho_ppm;
      cell.thickness = spec.thicknesses[it];
      cell.mean_rnn = r3;
      cell.n_configs = nc;
      cell.nu_histogram.assign(static_cast<std::size_t>(spec.histogram_bins), 0);
      std::size_t n_strong = 0, n_strong_nu = 0, n_rnn = 0;
      double sum_rnn = 0.0;
      std::vector<double> nus;
      for (std::size_t k = 0; k < nc; ++k) {
        const Slot& s = slots[k * nt + it];
        n_strong += s.strong;
        n_strong_nu += s.strong_nu;
        if (s.r_nn > 0.0) {
          sum_rnn += s.r_nn;
          ++n_rnn;
        }
        if (!s.ok) {
          ++cell.n_failed;
          continue;
        }
        nus.push_back(s.nu);
        const double b = std::floor((std::log10(s.nu) - spec.histogram_log10_lo) / bw);
        if (b >= 0.0 && b < spec.histogram_bins) ++cell.nu_histogram[static_cast<std::size_t>(b)];
      }
      const double n = static_cast<double>(nc);
      cell.yield = static_cast<double>(n_strong) / n;
      cell.yield_nu = static_cast<double>(n_strong_nu) / n;
      cell.yield_stderr = std::sqrt(cell.yield * (1.0 - cell.yield) / n);
      cell.yield_nu_stderr = std::sqrt(cell.yield_nu * (1.0 - cell.yield_nu) / n);
      cell.sampled_rnn = n_rnn ? sum_rnn / static_cast<double>(n_rnn) : std::numeric_limits<double>::quiet_NaN();
      cell.median_nu = median_of(std::move(nus));
      if (cell.n_failed)
        rep.warnings.push_back("density " + fmt_double(rho_ppm) + " ppm, thickness " + fmt_double(cell.thickness) +
                               " nm: " + std::to_string(cell.n_failed) + " slices with fewer than two spins");
      rep.cells.push_back(std::move(cell));
    }
  }

  rep.metadata = {{"seed", std::to_string(spec.seed)},
                  {"n_configs", std::to_string(spec.n_configs)},
                  {"master_thickness_nm", fmt_double(spec.master_thickness)},
                  {"radius_factor", fmt_double(spec.radius_factor)},
                  {"placement", placement_mode_name(spec.placement)},
                  {"isotope", isotope_name(spec.isotope)},
                  {"strong_criterion", "greedy partition; yield_nu2pi: nearest spin nu >= 2pi"},
                  {"seed_scheme", "master bath k of density i: derive_seed(seed, {yield, i, k})"}};
  return rep;
}

double crossover_thickness(const YieldReport& report, std::size_t density_index, bool nu_criterion) {
  const std::size_t nt = report.thicknesses.size();
  if (nt < 2) return std::numeric_limits<double>::quiet_NaN();
  auto y = [&](std::size_t it) {
    const auto& c = report.cell(density_index, it);
    return nu_criterion ? c.yield_nu : c.yield;
  };
  const double y0 = y(0);
  const double y1 = y(nt - 1);
  const double mid = 0.5 * (y0 + y1);
  if (y0 == y1) return std::numeric_limits<double>::quiet_NaN();
  for (std::size_t it = 0; it + 1 < nt; ++it) {
    const double a = y(it) - mid;
    const double b = y(it + 1) - mid;
    if (a == 0.0) return report.thicknesses[it];
    if ((a > 0.0) != (b > 0.0) || b == 0.0) {
      const double f = a / (a - b);
      const double la = std::log(report.thicknesses[it]), lb = std::log(report.thicknesses[it + 1]);
      return std::exp(la + f * (lb - la));
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string yield_to_text(const YieldReport& report) {
  std::ostringstream o;
  o << "# schema " << kYieldSchema << "\n";
  o << "# tool nvbath " << kToolVersion << "\n";
  for (const auto& [k, v] : report.metadata) o << "# " << k << " = " << v << "\n";
  for (const auto& w : report.warnings) o << "# warning = " << w << "\n";
  o << "[yield]\n";
  o << "density_ppm,thickness_nm,yield,yield_stderr,mean_rnn_nm,yield_nu2pi,yield_nu2pi_stderr,sampled_rnn_nm,"
       "median_nu,n_configs,n_failed\n";
  for (const auto& c : report.cells)
    o << fmt_double(c.density) << "," << fmt_double(c.thickness) << "," << fmt_double(c.yield) << ","
      << fmt_double(c.yield_stderr) << "," << fmt_double(c.mean_rnn) << "," << fmt_double(c.yield_nu) << ","
      << fmt_double(c.yield_nu_stderr) << "," << fmt_double(c.sampled_rnn) << "," << fmt_double(c.median_nu) << ","
      << c.n_configs << "," << c.n_failed << "\n";
  o << "[crossover]\ndensity_ppm,crossover_thickness_nm,crossover_nu2pi_nm,mean_rnn_nm\n";
  for (std::size_t id = 0; id < report.densities.size(); ++id) {
    const bool ok = report.densities[id] > 0.0;
    const double x = ok ? crossover_thickness(report, id) : std::numeric_limits<double>::quiet_NaN();
    const double xn = ok ? crossover_thickness(report, id, true) : std::numeric_limits<double>::quiet_NaN();
    o << fmt_double(report.densities[id]) << "," << fmt_double(x) << "," << fmt_double(xn) << ","
      << fmt_double(report.cell(id, 0).mean_rnn) << "\n";
  }
  o << "[nu_histogram]\ndensity_ppm,thickness_nm,log10_nu_lo,log10_nu_hi,count\n";
  for (const auto& c : report.cells) {
    const double bw = (report.histogram_log10_hi - report.histogram_log10_lo) /
                      static_cast<double>(std::max<std::size_t>(c.nu_histogram.size(), 1));
    for (std::size_t b = 0; b < c.nu_histogram.size(); ++b)
      o << fmt_double(c.density) << "," << fmt_double(c.thickness) << ","
        << fmt_double(report.histogram_log10_lo + bw * static_cast<double>(b)) << ","
        << fmt_double(report.histogram_log10_lo + bw * static_cast<double>(b + 1)) << "," << c.nu_histogram[b]
        << "\n";
  }
  return o.str();
}

void save_yield(const std::string& path, const YieldReport& report) { write_file(path, yield_to_text(report)); }

VisibilityRatio visibility_ratio_2d3d(double density_ppm, double thin, double thick, int n_configs,
                                      std::uint64_t seed, const Params& params, PlacementMode placement,
                                      unsigned threads) {
  require(density_ppm > 0.0, "density must be positive");
  require(thin > 0.0 && thick >= thin, "need 0 < thin <= thick");
  require(n_configs >= 1, "need at least one configuration");
  const auto& c = params.constants;
  VisibilityRatio out;
  const double rho = ppm_to_number_density(density_ppm, c);
  const double r3 = mean_nn_distance_formula(density_ppm, c);
  if (thin > 0.5 * r3)
    out.warnings.push_back("thin slab " + fmt_double(thin) + " nm is not well below <r_nn> = " + fmt_double(r3) +
                           " nm");
  if (thick < 2.0 * r3)
    out.warnings.push_back("thick slab " + fmt_double(thick) + " nm is not well above <r_nn> = " + fmt_double(r3) +
                           " nm");
  const double areal = areal_density(density_ppm, thin, placement, c);
  BathGeometry g;
  g.density_ppm = density_ppm;
  g.thickness = thick;
  g.lateral_radius = 5.0 * std::max(r3, mean_2d(areal));
  g.mode = placement;
  const BathOptions opts = BathOptions::from(params, Isotope::N15);

  // Slabs thinner than <r_nn> use the 2D estimator.
  auto estimator = [&](double t, double r_nn) {
    if (t < r3) return 1.0 / (r_nn * r_nn * r_nn * std::sqrt(2.0) * gamma_cutoff_2d(areal_density(density_ppm, t, placement, c), r_nn));
    return 1.0 / (r_nn * r_nn * r_nn * std::sqrt(2.0) * gamma_cutoff_3d(rho, r_nn));
  };

  struct Slot {
    bool ok = false;
    double est_thin = 0, est_thick = 0, nu_thin = 0, nu_thick = 0;
  };
  const auto n = static_cast<std::size_t>(n_configs);
  std::vector<Slot> slots(n);
  parallel_for(n, threads, [&](std::size_t k) {
    const auto master = generate_bath(g, derive_seed(seed, {stream::visibility, k}), opts);
    const auto slab = slice_bath(master, thin);
    if (slab.spins.size() < 2 || master.spins.size() < 2) return;
    Slot& s = slots[k];
    const auto vt = visibility(slab, params.central, c);
    const auto vT = visibility(master, params.central, c);
    s.ok = true;
    s.est_thin = estimator(thin, vt.r_nn);
    s.est_thick = estimator(thick, vT.r_nn);
    s.nu_thin = vt.nu;
    s.nu_thick = vT.nu;
  });
  std::vector<double> nt, nT;
  double et = 0, eT = 0, mt = 0, mT = 0;
  for (const auto& s : slots) {
    if (!s.ok) {
      ++out.n_skipped;
      continue;
    }
    et += s.est_thin;
    eT += s.est_thick;
    mt += s.nu_thin;
    mT += s.nu_thick;
    nt.push_back(s.nu_thin);
    nT.push_back(s.nu_thick);
  }
  out.n_configs = nt.size();
  if (out.n_configs == 0) fail(ErrorCode::Domain, "visibility undefined: every slab had fewer than two spins");
  const double m = static_cast<double>(out.n_configs);
  out.thin_estimator = et / m;
  out.thick_estimator = eT / m;
  out.thin_mean_nu = mt / m;
  out.thick_mean_nu = mT / m;
  out.ratio = out.thin_estimator / out.thick_estimator;
  out.ratio_direct_mean = out.thin_mean_nu / out.thick_mean_nu;
  out.ratio_direct_median = median_of(nt) / median_of(nT);
  if (out.n_skipped)
    out.warnings.push_back(std::to_string(out.n_skipped) + " configurations skipped with fewer than two spins");
  return out;
}

}  // namespace nvbath
