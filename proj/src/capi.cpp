#include "nvbath/nvbath.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "json.hpp"

#include "nvbath/analysis.hpp"
#include "nvbath/bath.hpp"
#include "nvbath/cce.hpp"
#include "nvbath/coupling_yield.hpp"
#include "nvbath/error.hpp"
#include "nvbath/mle.hpp"
#include "nvbath/parameters.hpp"
#include "nvbath/textio.hpp"
#include "nvbath/validation.hpp"

struct nvb_params {
  nvbath::Params p;
};
struct nvb_bath {
  nvbath::BathConfiguration b;
};
struct nvb_curve {
  nvbath::CoherenceCurve c;
};
struct nvb_library {
  nvbath::CoherenceLibrary lib;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
nvb_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NVB_OK;
  } catch (const nvbath::Error& e) {
    g_last_error = e.what();
    return static_cast<nvb_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NVB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NVB_ERR_INTERNAL;
  }
}

template <class T>
void need(const T* ptr, const char* what) {
  if (!ptr) nvbath::fail(nvbath::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

nvbath::Isotope iso(nvb_isotope i) {
  if (i == NVB_N15) return nvbath::Isotope::N15;
  if (i == NVB_N14) return nvbath::Isotope::N14;
  nvbath::fail(nvbath::ErrorCode::InvalidArgument, "isotope must be 14 or 15");
}

nvbath::PlacementMode placement(nvb_placement p) {
  return p == NVB_CONTINUUM ? nvbath::PlacementMode::Continuum : nvbath::PlacementMode::Lattice;
}

nvbath::CouplingModel model(nvb_coupling_model m) {
  switch (m) {
    case NVB_SECULAR: return nvbath::CouplingModel::Secular;
    case NVB_PROJECTED: return nvbath::CouplingModel::Projected;
    case NVB_FULL: return nvbath::CouplingModel::Full;
  }
  nvbath::fail(nvbath::ErrorCode::InvalidArgument, "unknown coupling model");
}

nvbath::Observable observable(nvb_observable o) {
  switch (o) {
    case NVB_T2STAR_FORMULA: return nvbath::Observable::T2StarFormula;
    case NVB_T2STAR_FIT: return nvbath::Observable::T2StarFit;
    case NVB_T2_HAHN: return nvbath::Observable::T2Hahn;
  }
  nvbath::fail(nvbath::ErrorCode::InvalidArgument, "unknown observable");
}

std::string params_line(const nvbath::Params& p) {
  return nlohmann::json::parse(nvbath::params_to_json(p)).dump();
}

}  // namespace

extern "C" {

const char* nvb_version(void) { return nvbath::kToolVersion; }

const char* nvb_last_error(void) { return g_last_error.c_str(); }

const char* nvb_status_name(nvb_status s) {
  switch (s) {
    case NVB_OK: return "ok";
    case NVB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NVB_ERR_IO: return "i/o error";
    case NVB_ERR_NUMERICAL: return "numerical error";
    case NVB_ERR_DOMAIN: return "domain error";
    case NVB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

nvb_status nvb_params_default(nvb_params** out) {
  return guarded([&] {
    need(out, "out");
    *out = new nvb_params{nvbath::Params::defaults()};
  });
}

nvb_status nvb_params_load(const char* path, nvb_params** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nvb_params{nvbath::load_params(path)};
  });
}

nvb_status nvb_params_save(const nvb_params* p, const char* path) {
  return guarded([&] {
    need(p, "params");
    need(path, "path");
    nvbath::save_params(path, p->p);
  });
}

void nvb_params_free(nvb_params* p) { delete p; }

void nvb_geometry_default(nvb_geometry* g) {
  if (!g) return;
  g->density_ppm = 1.0;
  g->thickness_nm = 10.0;
  g->lateral_radius_nm = 0.0;
  g->converged_spins = 0.0;
  g->placement = NVB_LATTICE;
  g->isotope = NVB_N15;
}

nvb_status nvb_bath_generate(const nvb_params* p, const nvb_geometry* g, uint64_t seed, nvb_bath** out) {
  return guarded([&] {
    need(p, "params");
    need(g, "geometry");
    need(out, "out");
    nvbath::BathGeometry geo;
    geo.density_ppm = g->density_ppm;
    geo.thickness = g->thickness_nm;
    geo.mode = placement(g->placement);
    geo.validate();
    geo.lateral_radius = g->lateral_radius_nm > 0.0
                             ? g->lateral_radius_nm
                             : nvbath::default_lateral_radius(geo.density_ppm, geo.thickness,
                                                              g->converged_spins > 0.0 ? g->converged_spins : 12.0,
                                                              3.0, geo.mode, p->p.constants);
    const auto i = iso(g->isotope);
    *out = new nvb_bath{nvbath::generate_bath(geo, seed, nvbath::BathOptions::from(p->p, i))};
  });
}

nvb_status nvb_bath_load(const char* path, nvb_bath** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nvb_bath{nvbath::load_bath(path)};
  });
}

nvb_status nvb_bath_save(const nvb_bath* b, const char* path) {
  return guarded([&] {
    need(b, "bath");
    need(path, "path");
    nvbath::save_bath(path, b->b);
  });
}

size_t nvb_bath_size(const nvb_bath* b) { return b ? b->b.spins.size() : 0; }

nvb_status nvb_bath_spin(const nvb_bath* b, size_t i, double position_nm[3], int* jt_axis, double* nuclear_m) {
  return guarded([&] {
    need(b, "bath");
    nvbath::require(i < b->b.spins.size(), "spin index out of range");
    const auto& s = b->b.spins[i];
    if (position_nm)
      for (int k = 0; k < 3; ++k) position_nm[k] = s.position[k];
    if (jt_axis) *jt_axis = s.jt_axis;
    if (nuclear_m) *nuclear_m = s.nuclear_m;
  });
}

nvb_status nvb_bath_nearest_distance(const nvb_bath* b, double* out_nm) {
  return guarded([&] {
    need(b, "bath");
    need(out_nm, "out");
    *out_nm = nvbath::nearest_neighbor_distance(b->b);
  });
}

nvb_status nvb_bath_t2star(const nvb_params* p, const nvb_bath* b, double* out_ms, size_t* n_strong) {
  return guarded([&] {
    need(p, "params");
    need(b, "bath");
    need(out_ms, "out");
    const auto part = nvbath::partition_strong_weak(b->b, p->p.central, p->p.constants);
    *out_ms = part.t2_star;
    if (n_strong) *n_strong = part.strong.size();
  });
}

void nvb_bath_free(nvb_bath* b) { delete b; }

void nvb_coherence_options_default(nvb_coherence_options* o) {
  if (!o) return;
  o->sequence = NVB_RAMSEY;
  o->order = 0;
  o->dipole_radius_nm = 0.0;
  o->n_bath_states = 1;
  o->state_mode = NVB_SAMPLED;
  o->frozen_nuclear = 0;
  o->mean_field = 1;
  o->model = NVB_SECULAR;
  o->field_gauss = 50.0;
  o->times_ms = nullptr;
  o->n_times = 0;
  o->threads = 1;
  o->analytic = 0;
}

nvb_status nvb_coherence(const nvb_params* p, const nvb_bath* b, const nvb_coherence_options* o, uint64_t seed,
                         nvb_curve** out) {
  return guarded([&] {
    need(p, "params");
    need(b, "bath");
    need(o, "options");
    need(out, "out");
    const bool hahn = o->sequence == NVB_HAHN;
    const auto seq = hahn ? nvbath::PulseSequence::hahn_echo() : nvbath::PulseSequence::ramsey();
    std::vector<double> times;
    if (o->times_ms) {
      times.assign(o->times_ms, o->times_ms + o->n_times);
    } else if (hahn) {
      times = nvbath::default_hahn_grid(b->b.geometry.density_ppm);
    } else {
      times = nvbath::default_ramsey_grid(
          nvbath::partition_strong_weak(b->b, p->p.central, p->p.constants).a_bath);
    }
    nvbath::FieldConfig field;
    field.b_z = o->field_gauss;
    field.validate();
    if (o->analytic) {
      nvbath::require(!hahn, "the analytic route covers Ramsey only");
      auto c = nvbath::ramsey_cce1_analytic(b->b, p->p.central, p->p.constants, times);
      c.set_meta("field_gauss", nvbath::fmt_double(field.b_z));
      c.set_meta("params", params_line(p->p));
      *out = new nvb_curve{std::move(c)};
      return;
    }
    nvbath::CCEConfig cce;
    cce.order = o->order > 0 ? o->order : (hahn ? 4 : 1);
    cce.dipole_radius = o->dipole_radius_nm;
    cce.n_bath_states = o->n_bath_states;
    cce.time_grid = std::move(times);
    cce.model = model(o->model);
    cce.state_mode = o->state_mode == NVB_MIXED ? nvbath::BathStateMode::Mixed : nvbath::BathStateMode::Sampled;
    cce.frozen_nuclear = o->frozen_nuclear != 0;
    cce.mean_field = o->mean_field != 0;
    cce.threads = o->threads;
    const auto ctx = p->p.context(b->b.isotope, field);
    auto c = nvbath::cce_coherence(b->b, cce, seq, ctx, seed);
    c.set_meta("params", params_line(p->p));
    *out = new nvb_curve{std::move(c)};
  });
}

nvb_status nvb_curve_load(const char* path, nvb_curve** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nvb_curve{nvbath::load_curve(path)};
  });
}

nvb_status nvb_curve_save(const nvb_curve* c, const char* path) {
  return guarded([&] {
    need(c, "curve");
    need(path, "path");
    nvbath::save_curve(path, c->c);
  });
}

nvb_status nvb_curve_set_meta(nvb_curve* c, const char* key, const char* value) {
  return guarded([&] {
    need(c, "curve");
    need(key, "key");
    need(value, "value");
    c->c.set_meta(key, value);
  });
}

size_t nvb_curve_size(const nvb_curve* c) { return c ? c->c.times.size() : 0; }

nvb_status nvb_curve_point(const nvb_curve* c, size_t i, double* t_ms, double* re, double* im) {
  return guarded([&] {
    need(c, "curve");
    nvbath::require(i < c->c.times.size(), "curve index out of range");
    if (t_ms) *t_ms = c->c.times[i];
    if (re) *re = c->c.values[i].real();
    if (im) *im = c->c.values[i].imag();
  });
}

nvb_status nvb_curve_fit(const nvb_curve* c, double fixed_exponent, double* t2_ms, double* n_exponent) {
  return guarded([&] {
    need(c, "curve");
    nvbath::FitOptions fo;
    if (fixed_exponent > 0.0) {
      fo.fix_exponent = true;
      fo.fixed_exponent = fixed_exponent;
    }
    const auto f = nvbath::fit_stretched_exponential(c->c, nullptr, fo);
    if (t2_ms) *t2_ms = f.t2;
    if (n_exponent) *n_exponent = f.n_exponent;
  });
}

void nvb_curve_free(nvb_curve* c) { delete c; }

void nvb_sweep_options_default(nvb_sweep_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  o->n_configs = 100;
  o->observable = NVB_T2STAR_FORMULA;
  o->seed = 1;
  o->isotope = NVB_N15;
  o->field_gauss = 50.0;
  o->placement = NVB_LATTICE;
  o->order = 4;
  o->n_bath_states = 1;
  o->state_mode = NVB_SAMPLED;
  o->threads = 1;
}

nvb_status nvb_sweep(const nvb_params* p, const nvb_sweep_options* o, const char* command, const char* out_path,
                     nvb_progress_fn progress, void* user) {
  return guarded([&] {
    need(p, "params");
    need(o, "options");
    need(out_path, "out path");
    nvbath::require(o->thicknesses_nm && o->n_thicknesses && o->densities_ppm && o->n_densities,
                    "sweep axes must not be empty");
    nvbath::SweepSpec s;
    s.thicknesses.assign(o->thicknesses_nm, o->thicknesses_nm + o->n_thicknesses);
    s.densities.assign(o->densities_ppm, o->densities_ppm + o->n_densities);
    s.n_configs = o->n_configs;
    s.observable = observable(o->observable);
    s.seed = o->seed;
    s.isotope = iso(o->isotope);
    s.field.b_z = o->field_gauss;
    s.placement = placement(o->placement);
    s.lateral_radius = o->lateral_radius_nm;
    s.converged_spins = o->converged_spins;
    s.cce.order = o->order;
    s.cce.n_bath_states = o->n_bath_states;
    s.cce.state_mode = o->state_mode == NVB_MIXED ? nvbath::BathStateMode::Mixed : nvbath::BathStateMode::Sampled;
    s.cce.frozen_nuclear = o->state_mode == NVB_MIXED;
    s.cce.dipole_radius = o->dipole_radius_nm;
    s.threads = o->threads;
    if (o->checkpoint_path) s.checkpoint_path = o->checkpoint_path;
    nvbath::SweepProgress cb;
    if (progress) cb = [&](std::size_t d, std::size_t t) { progress(d, t, user); };
    auto grid = nvbath::run_sweep(s, p->p, cb);
    if (command) grid.metadata.emplace_back("command", command);
    grid.metadata.emplace_back("params", params_line(p->p));
    nvbath::save_sweep(out_path, grid);
  });
}

nvb_status nvb_library_from_sweep(const char* sweep_path, nvb_library** out) {
  return guarded([&] {
    need(sweep_path, "sweep path");
    need(out, "out");
    auto lib = nvbath::build_library(nvbath::load_sweep(sweep_path));
    lib.provenance.emplace_back("source_sweep", sweep_path);
    *out = new nvb_library{std::move(lib)};
  });
}

nvb_status nvb_library_load(const char* path, nvb_library** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new nvb_library{nvbath::load_library(path)};
  });
}

nvb_status nvb_library_save(const nvb_library* lib, const char* path) {
  return guarded([&] {
    need(lib, "library");
    need(path, "path");
    nvbath::save_library(path, lib->lib);
  });
}

void nvb_library_free(nvb_library* lib) { delete lib; }

nvb_status nvb_read_measurements(const char* path, double** t2star_us, size_t* n) {
  return guarded([&] {
    need(path, "path");
    need(t2star_us, "out");
    need(n, "count");
    const auto v = nvbath::read_measurements_us(path);
    auto* buf = static_cast<double*>(std::malloc(v.size() * sizeof(double)));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, v.data(), v.size() * sizeof(double));
    *t2star_us = buf;
    *n = v.size();
  });
}

void nvb_free_doubles(double* v) { std::free(v); }

nvb_status nvb_estimate_density(const nvb_library* lib, const double* t2star_us, size_t n, double thickness_nm,
                                const char* command, const char* report_path, nvb_density_result* out) {
  return guarded([&] {
    need(lib, "library");
    need(t2star_us, "measurements");
    nvbath::require(n > 0, "at least one measurement is required");
    std::vector<double> rates;
    for (size_t i = 0; i < n; ++i) {
      nvbath::require(std::isfinite(t2star_us[i]) && t2star_us[i] > 0.0, "T2* values must be positive");
      rates.push_back(nvbath::t2star_us_to_rate(t2star_us[i]));
    }
    const auto est = nvbath::estimate_density(rates, lib->lib, thickness_nm);
    const auto surf = nvbath::likelihood_surface(rates, lib->lib);
    if (report_path) {
      std::vector<std::pair<std::string, std::string>> extra;
      if (command) extra.emplace_back("command", command);
      nvbath::write_file(report_path, nvbath::density_report(est, surf, extra));
    }
    if (out) {
      out->rho_mle_ppm = est.rho_mle;
      out->rho_sigma_ppm = est.rho_sigma;
      out->fixed_thickness_nm = est.fixed_thickness;
      out->multimodal = est.multimodal ? 1 : 0;
      out->argmax_thickness_nm = surf.thicknesses[surf.argmax_thickness];
      out->argmax_density_ppm = surf.densities[surf.argmax_density];
    }
  });
}

nvb_status nvb_benchmark(const nvb_library* lib, const int* sample_counts, size_t n_counts, int trials,
                         double thickness_nm, uint64_t seed, unsigned threads, const char* report_path,
                         double* fit_p) {
  return guarded([&] {
    need(lib, "library");
    need(sample_counts, "sample counts");
    const std::vector<int> ns(sample_counts, sample_counts + n_counts);
    const auto b = nvbath::benchmark_error(lib->lib, ns, trials, thickness_nm, seed, threads);
    if (report_path) {
      std::string text = nvbath::benchmark_report(b);
      text.insert(text.find('\n', text.find('\n') + 1) + 1, "# seed = " + std::to_string(seed) + "\n");
      nvbath::write_file(report_path, text);
    }
    if (fit_p) *fit_p = b.fit_p;
  });
}

nvb_status nvb_nn_pdf(int dimensions, double density, double r_nm, double* pdf, double* cdf) {
  return guarded([&] {
    nvbath::require(dimensions == 2 || dimensions == 3, "dimensions must be 2 or 3");
    const auto d = nvbath::nn_pdf(dimensions == 2 ? nvbath::Dimensionality::D2 : nvbath::Dimensionality::D3, density);
    if (pdf) *pdf = d.pdf(r_nm);
    if (cdf) *cdf = d.cdf(r_nm);
  });
}

void nvb_yield_options_default(nvb_yield_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  o->n_configs = 1000;
  o->seed = 1;
  o->master_thickness_nm = 50.0;
  o->placement = NVB_LATTICE;
  o->threads = 1;
}

nvb_status nvb_yield(const nvb_params* p, const nvb_yield_options* o, const char* command, const char* out_path) {
  return guarded([&] {
    need(p, "params");
    need(o, "options");
    need(out_path, "out path");
    nvbath::require(o->densities_ppm && o->n_densities && o->thicknesses_nm && o->n_thicknesses,
                    "yield axes must not be empty");
    nvbath::YieldSpec s;
    s.densities.assign(o->densities_ppm, o->densities_ppm + o->n_densities);
    s.thicknesses.assign(o->thicknesses_nm, o->thicknesses_nm + o->n_thicknesses);
    s.n_configs = o->n_configs;
    s.seed = o->seed;
    s.master_thickness = o->master_thickness_nm;
    s.placement = placement(o->placement);
    s.threads = o->threads;
    auto rep = nvbath::yield_sweep(s, p->p);
    if (command) rep.metadata.emplace_back("command", command);
    rep.metadata.emplace_back("params", params_line(p->p));
    nvbath::save_yield(out_path, rep);
  });
}

nvb_status nvb_visibility_ratio(const nvb_params* p, double density_ppm, double thin_nm, double thick_nm,
                                int n_configs, uint64_t seed, unsigned threads, double* ratio, double* ratio_direct) {
  return guarded([&] {
    need(p, "params");
    const auto v = nvbath::visibility_ratio_2d3d(density_ppm, thin_nm, thick_nm, n_configs, seed, p->p,
                                                 nvbath::PlacementMode::Lattice, threads);
    if (ratio) *ratio = v.ratio;
    if (ratio_direct) *ratio_direct = v.ratio_direct_mean;
  });
}

nvb_status nvb_p1_lines(const nvb_params* p, nvb_isotope isotope, double field_gauss, double* frequency_mhz,
                        double* nuclear_m, double* fraction, size_t capacity, size_t* n) {
  return guarded([&] {
    need(p, "params");
    need(n, "count");
    nvbath::FieldConfig f;
    f.b_z = field_gauss;
    f.validate();
    const auto lines = nvbath::p1_transition_frequencies(f, p->p.p1(iso(isotope), f), p->p.constants);
    *n = lines.size();
    for (size_t i = 0; i < lines.size() && i < capacity; ++i) {
      if (frequency_mhz) frequency_mhz[i] = lines[i].frequency_mhz;
      if (nuclear_m) nuclear_m[i] = lines[i].nuclear_m;
      if (fraction) fraction[i] = lines[i].degeneracy_fraction;
    }
  });
}

nvb_status nvb_validate(const nvb_params* p, int quick, const int* only, size_t n_only, uint64_t seed,
                        unsigned threads, double scale, nvb_result_fn on_result, void* user, int* n_failed) {
  return guarded([&] {
    need(p, "params");
    nvbath::ValidationOptions vo;
    vo.quick = quick != 0;
    if (only) vo.only.assign(only, only + n_only);
    vo.seed = seed;
    vo.threads = threads;
    vo.scale = scale > 0.0 ? scale : 1.0;
    int failed = 0;
    nvbath::run_validation(vo, p->p, [&](const nvbath::CriterionResult& r) {
      if (!r.passed) ++failed;
      if (on_result) on_result(r.id, r.passed ? 1 : 0, nvbath::format_result(r).c_str(), user);
    });
    if (n_failed) *n_failed = failed;
  });
}

}  // extern "C"
