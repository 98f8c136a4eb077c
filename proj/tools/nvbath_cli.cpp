// nvbath command-line front end. Talks to the library only through nvbath.h.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_args.hpp"
#include "nvbath/nvbath.h"

namespace {

using nvbath_cli::Failure;
using nvbath_cli::parse_range;
using nvbath_cli::split;

void check(nvb_status s) {
  if (s != NVB_OK) throw Failure(nvb_last_error());
}

nvb_isotope parse_isotope(const std::string& s) {
  if (s == "n15" || s == "15N" || s == "15") return NVB_N15;
  if (s == "n14" || s == "14N" || s == "14") return NVB_N14;
  throw Failure("isotope must be n14 or n15");
}

nvb_placement parse_placement(const std::string& s) {
  if (s == "lattice") return NVB_LATTICE;
  if (s == "continuum") return NVB_CONTINUUM;
  throw Failure("placement must be lattice or continuum");
}

nvb_state_mode parse_state_mode(const std::string& s) {
  if (s == "sampled") return NVB_SAMPLED;
  if (s == "mixed") return NVB_MIXED;
  throw Failure("state mode must be sampled or mixed");
}

nvb_coupling_model parse_model(const std::string& s) {
  if (s == "secular") return NVB_SECULAR;
  if (s == "projected") return NVB_PROJECTED;
  if (s == "full") return NVB_FULL;
  throw Failure("coupling model must be secular, projected or full");
}

nvb_observable parse_observable(const std::string& s) {
  if (s == "t2star" || s == "t2star-formula") return NVB_T2STAR_FORMULA;
  if (s == "t2star-fit") return NVB_T2STAR_FIT;
  if (s == "t2" || s == "hahn") return NVB_T2_HAHN;
  throw Failure("observable must be t2star, t2star-fit or hahn");
}

class Params {
public:
  explicit Params(const std::string& path) {
    check(path.empty() ? nvb_params_default(&p_) : nvb_params_load(path.c_str(), &p_));
  }
  ~Params() { nvb_params_free(p_); }
  Params(const Params&) = delete;
  Params& operator=(const Params&) = delete;
  const nvb_params* get() const { return p_; }

private:
  nvb_params* p_ = nullptr;
};

template <class T, void (*Free)(T*)>
class Handle {
public:
  Handle() = default;
  ~Handle() { Free(p_); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  T** out() { return &p_; }
  T* get() const { return p_; }

private:
  T* p_ = nullptr;
};

using Bath = Handle<nvb_bath, nvb_bath_free>;
using Curve = Handle<nvb_curve, nvb_curve_free>;
using Library = Handle<nvb_library, nvb_library_free>;

struct Common {
  std::string params;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out;
};

void add_common(CLI::App* c, Common& o, const std::string& default_out) {
  o.out = default_out;
  c->add_option("--params", o.params, "parameter file (JSON)")->check(CLI::ExistingFile);
  c->add_option("--seed", o.seed, "random seed");
  c->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  c->add_option("--out", o.out, "output path")->capture_default_str();
}

struct GeometryFlags {
  double density = 0.0;
  double thickness = 10.0;
  double lateral_radius = 0.0;
  double converged = 0.0;
  std::string placement = "lattice";
  std::string isotope = "n15";
};

void add_geometry(CLI::App* c, GeometryFlags& g, bool density_required) {
  auto* d = c->add_option("--density", g.density, "P1 density (ppm)");
  if (density_required) d->required();
  c->add_option("--thickness", g.thickness, "slab thickness (nm)")->capture_default_str();
  c->add_option("--lateral-radius", g.lateral_radius, "slab radius (nm); default sized for --converged-spins");
  c->add_option("--converged-spins", g.converged, "expected spins used to size the slab (default 12)");
  c->add_option("--placement", g.placement, "lattice or continuum")->capture_default_str();
  c->add_option("--isotope", g.isotope, "n14 or n15")->capture_default_str();
}

nvb_geometry to_geometry(const GeometryFlags& f) {
  nvb_geometry g;
  nvb_geometry_default(&g);
  g.density_ppm = f.density;
  g.thickness_nm = f.thickness;
  g.lateral_radius_nm = f.lateral_radius;
  g.converged_spins = f.converged;
  g.placement = parse_placement(f.placement);
  g.isotope = parse_isotope(f.isotope);
  return g;
}

// Recorded in every artifact. Worker count and output path are left out so
// that runs differing only in those produce identical files.
std::string joined_command(int argc, char** argv) {
  std::string s = "nvbath";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" || a == "--out") {
      ++i;
      continue;
    }
    if (a.rfind("--threads=", 0) == 0 || a.rfind("--out=", 0) == 0) continue;
    s += " " + a;
  }
  return s;
}

void progress_bar(size_t done, size_t total, void*) {
  std::fprintf(stderr, "\rcells %zu/%zu", done, total);
  if (done == total) std::fprintf(stderr, "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-bath coherence simulation and density estimation for NV centers"};
  app.set_version_flag("--version", std::string("nvbath ") + nvb_version());
  app.require_subcommand(1);

  // bath
  Common bath_c;
  GeometryFlags bath_g;
  auto* bath = app.add_subcommand("bath", "generate a random P1 bath configuration");
  add_common(bath, bath_c, "bath.txt");
  add_geometry(bath, bath_g, true);

  // coherence
  Common coh_c;
  GeometryFlags coh_g;
  std::string coh_kind = "ramsey", coh_bath, coh_mode = "sampled", coh_model = "secular";
  int coh_order = 0, coh_states = 1, coh_points = 0;
  double coh_radius = 0.0, coh_field = 50.0, coh_tmax = 0.0;
  bool coh_frozen = false, coh_no_mf = false, coh_analytic = false, coh_fit = false;
  auto* coh = app.add_subcommand("coherence", "compute a Ramsey or Hahn-echo coherence curve");
  add_common(coh, coh_c, "curve.csv");
  add_geometry(coh, coh_g, false);
  coh->add_option("--kind", coh_kind, "ramsey or hahn")->capture_default_str();
  coh->add_option("--bath", coh_bath, "bath file (instead of generating one)")->check(CLI::ExistingFile);
  coh->add_option("--order", coh_order, "CCE order (default 1 Ramsey, 4 Hahn)");
  coh->add_option("--nstates", coh_states, "sampled bath states")->capture_default_str();
  coh->add_option("--dipole-radius", coh_radius, "cluster connectivity radius (nm)");
  coh->add_option("--state-mode", coh_mode, "sampled or mixed")->capture_default_str();
  coh->add_option("--model", coh_model, "secular, projected or full")->capture_default_str();
  coh->add_option("--field", coh_field, "magnetic field (G)")->capture_default_str();
  coh->add_option("--tmax", coh_tmax, "linear time grid end (ms); default grid otherwise");
  coh->add_option("--points", coh_points, "points of the linear time grid");
  coh->add_flag("--frozen-nuclear", coh_frozen, "keep the bath file's nuclear states and axes");
  coh->add_flag("--no-mean-field", coh_no_mf, "drop the static field of spins outside each cluster");
  coh->add_flag("--analytic", coh_analytic, "first-order analytic Ramsey route");
  coh->add_flag("--fit", coh_fit, "print a stretched-exponential fit");

  // sweep
  Common sw_c;
  std::string sw_t, sw_d, sw_obs = "t2star", sw_iso = "n15", sw_place = "lattice", sw_mode = "sampled", sw_ckpt;
  int sw_n = 100, sw_order = 4, sw_states = 1;
  double sw_field = 50.0, sw_radius = 0.0, sw_conv = 0.0, sw_dr = 0.0;
  bool sw_quiet = false;
  auto* sw = app.add_subcommand("sweep", "simulate coherence times over a (thickness, density) grid");
  add_common(sw, sw_c, "sweep.txt");
  sw->add_option("--thicknesses,--thickness", sw_t, "thickness list or range (nm)")->required();
  sw->add_option("--densities,--density", sw_d, "density list or range (ppm)")->required();
  sw->add_option("--nconfigs,--configs", sw_n, "configurations per cell")->capture_default_str();
  sw->add_option("--observable", sw_obs, "t2star, t2star-fit or hahn")->capture_default_str();
  sw->add_option("--isotope", sw_iso, "n14 or n15")->capture_default_str();
  sw->add_option("--field", sw_field, "magnetic field (G)")->capture_default_str();
  sw->add_option("--placement", sw_place, "lattice or continuum")->capture_default_str();
  sw->add_option("--lateral-radius", sw_radius, "fixed slab radius (nm)");
  sw->add_option("--converged-spins", sw_conv, "expected spins used to size each cell");
  sw->add_option("--order", sw_order, "CCE order for hahn")->capture_default_str();
  sw->add_option("--nstates", sw_states, "sampled bath states for hahn")->capture_default_str();
  sw->add_option("--state-mode", sw_mode, "sampled or mixed")->capture_default_str();
  sw->add_option("--dipole-radius", sw_dr, "cluster connectivity radius (nm)");
  sw->add_option("--checkpoint", sw_ckpt, "checkpoint file; resumed when present");
  sw->add_flag("--quiet", sw_quiet, "no progress output");

  // library
  std::string lib_sweep, lib_out = "library.json";
  auto* lib = app.add_subcommand("library", "build a rate-distribution library from a T2* sweep");
  lib->add_option("--sweep", lib_sweep, "sweep file")->required()->check(CLI::ExistingFile);
  lib->add_option("--out", lib_out, "output path")->capture_default_str();

  // mle
  std::string mle_lib, mle_data, mle_out = "mle.txt", mle_bench;
  double mle_t = 0.0;
  int mle_trials = 200;
  std::uint64_t mle_seed = 1;
  unsigned mle_threads = 1;
  auto* mle = app.add_subcommand("mle", "estimate density from measured T2* values");
  mle->add_option("--library", mle_lib, "library file")->required()->check(CLI::ExistingFile);
  mle->add_option("--data", mle_data, "T2* measurements, one per line in microseconds")->check(CLI::ExistingFile);
  mle->add_option("--thickness", mle_t, "fixed thickness (nm)")->required();
  mle->add_option("--benchmark", mle_bench, "sample counts for an error benchmark instead, e.g. 2,4,8,16,32");
  mle->add_option("--trials", mle_trials, "benchmark trials per sample count")->capture_default_str();
  mle->add_option("--seed", mle_seed, "benchmark seed");
  mle->add_option("--threads", mle_threads, "worker threads");
  mle->add_option("--out", mle_out, "report path")->capture_default_str();

  // yield
  Common y_c;
  std::string y_d, y_t;
  int y_n = 1000;
  double y_master = 50.0;
  std::string y_place = "lattice";
  auto* yl = app.add_subcommand("yield", "strong-coupling yield versus slab thickness");
  add_common(yl, y_c, "yield.txt");
  yl->add_option("--densities,--density", y_d, "density list or range (ppm)")->required();
  yl->add_option("--thicknesses,--thickness", y_t, "thickness list or range (nm)")->required();
  yl->add_option("--configs,--nconfigs", y_n, "master baths per density")->capture_default_str();
  yl->add_option("--master-thickness", y_master, "master slab thickness (nm)")->capture_default_str();
  yl->add_option("--placement", y_place, "lattice or continuum")->capture_default_str();

  // visibility
  Common v_c;
  double v_rho = 3.0, v_thin = 1.0, v_thick = 50.0;
  int v_n = 10000;
  auto* vis = app.add_subcommand("visibility", "2D/3D visibility ratio of the nearest bath spin");
  add_common(vis, v_c, "");
  vis->add_option("--density", v_rho, "density (ppm)")->capture_default_str();
  vis->add_option("--thin", v_thin, "thin slab (nm)")->capture_default_str();
  vis->add_option("--thick", v_thick, "thick slab (nm)")->capture_default_str();
  vis->add_option("--configs,--nconfigs", v_n, "configurations")->capture_default_str();

  // p1
  std::string p1_params, p1_iso = "n15";
  double p1_field = 311.0;
  auto* p1 = app.add_subcommand("p1", "P1 electron transition frequencies");
  p1->add_option("--params", p1_params, "parameter file")->check(CLI::ExistingFile);
  p1->add_option("--field", p1_field, "magnetic field (G)")->capture_default_str();
  p1->add_option("--isotope", p1_iso, "n14 or n15")->capture_default_str();

  // params
  std::string pr_out = "params.json";
  auto* pr = app.add_subcommand("params", "write the default parameter file");
  pr->add_option("--out", pr_out, "output path")->capture_default_str();

  // validate
  Common val_c;
  bool val_quick = false;
  std::vector<int> val_only;
  double val_scale = 1.0;
  auto* val = app.add_subcommand("validate", "run the acceptance suite");
  add_common(val, val_c, "");
  val_c.seed = 20240601;
  val->add_flag("--quick", val_quick, "only the quick criteria");
  val->add_option("--only", val_only, "criterion ids")->delimiter(',');
  val->add_option("--scale", val_scale, "Monte-Carlo count multiplier")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  const std::string command = joined_command(argc, argv);

  try {
    if (*bath) {
      Params p(bath_c.params);
      const auto g = to_geometry(bath_g);
      Bath b;
      check(nvb_bath_generate(p.get(), &g, bath_c.seed, b.out()));
      check(nvb_bath_save(b.get(), bath_c.out.c_str()));
      std::printf("%zu spins -> %s\n", nvb_bath_size(b.get()), bath_c.out.c_str());
    } else if (*coh) {
      Params p(coh_c.params);
      Bath b;
      if (!coh_bath.empty()) {
        check(nvb_bath_load(coh_bath.c_str(), b.out()));
      } else {
        if (coh_g.density <= 0.0 && coh->count("--density") == 0)
          throw Failure("give --bath or --density");
        auto g = to_geometry(coh_g);
        if (coh_kind == "hahn" && coh_g.converged <= 0.0) g.converged_spins = 100.0;
        check(nvb_bath_generate(p.get(), &g, coh_c.seed, b.out()));
      }
      nvb_coherence_options o;
      nvb_coherence_options_default(&o);
      if (coh_kind == "hahn")
        o.sequence = NVB_HAHN;
      else if (coh_kind != "ramsey")
        throw Failure("kind must be ramsey or hahn");
      o.order = coh_order;
      o.dipole_radius_nm = coh_radius;
      o.n_bath_states = coh_states;
      o.state_mode = parse_state_mode(coh_mode);
      o.frozen_nuclear = coh_frozen;
      o.mean_field = !coh_no_mf;
      o.model = parse_model(coh_model);
      o.field_gauss = coh_field;
      o.threads = coh_c.threads;
      o.analytic = coh_analytic;
      std::vector<double> grid;
      if (coh_tmax > 0.0) {
        const int n = coh_points > 1 ? coh_points : 200;
        for (int i = 0; i < n; ++i) grid.push_back(coh_tmax * i / (n - 1));
        o.times_ms = grid.data();
        o.n_times = grid.size();
      }
      Curve c;
      check(nvb_coherence(p.get(), b.get(), &o, coh_c.seed, c.out()));
      check(nvb_curve_set_meta(c.get(), "command", command.c_str()));
      check(nvb_curve_set_meta(c.get(), "bath_file", coh_bath.empty() ? "generated" : coh_bath.c_str()));
      check(nvb_curve_save(c.get(), coh_c.out.c_str()));
      std::printf("%zu points -> %s\n", nvb_curve_size(c.get()), coh_c.out.c_str());
      if (coh_fit) {
        double t2 = 0.0, n = 0.0;
        check(nvb_curve_fit(c.get(), coh_kind == "ramsey" ? 2.0 : 0.0, &t2, &n));
        std::printf("T2 = %.6g ms, n = %.4g\n", t2, n);
      }
    } else if (*sw) {
      Params p(sw_c.params);
      const auto t = parse_range(sw_t);
      const auto d = parse_range(sw_d);
      nvb_sweep_options o;
      nvb_sweep_options_default(&o);
      o.thicknesses_nm = t.data();
      o.n_thicknesses = t.size();
      o.densities_ppm = d.data();
      o.n_densities = d.size();
      o.n_configs = sw_n;
      o.observable = parse_observable(sw_obs);
      o.seed = sw_c.seed;
      o.isotope = parse_isotope(sw_iso);
      o.field_gauss = sw_field;
      o.placement = parse_placement(sw_place);
      o.lateral_radius_nm = sw_radius;
      o.converged_spins = sw_conv;
      o.order = sw_order;
      o.n_bath_states = sw_states;
      o.state_mode = parse_state_mode(sw_mode);
      o.dipole_radius_nm = sw_dr;
      o.threads = sw_c.threads;
      o.checkpoint_path = sw_ckpt.empty() ? nullptr : sw_ckpt.c_str();
      check(nvb_sweep(p.get(), &o, command.c_str(), sw_c.out.c_str(), sw_quiet ? nullptr : progress_bar, nullptr));
      std::printf("%zu cells -> %s\n", t.size() * d.size(), sw_c.out.c_str());
    } else if (*lib) {
      Library l;
      check(nvb_library_from_sweep(lib_sweep.c_str(), l.out()));
      check(nvb_library_save(l.get(), lib_out.c_str()));
      std::printf("library -> %s\n", lib_out.c_str());
    } else if (*mle) {
      Library l;
      check(nvb_library_load(mle_lib.c_str(), l.out()));
      if (!mle_bench.empty()) {
        std::vector<int> ns;
        for (double v : parse_range(mle_bench)) ns.push_back(static_cast<int>(std::lround(v)));
        double p = 0.0;
        check(nvb_benchmark(l.get(), ns.data(), ns.size(), mle_trials, mle_t, mle_seed, mle_threads,
                            mle_out.c_str(), &p));
        std::printf("fitted exponent p = %.4g -> %s\n", p, mle_out.c_str());
      } else {
        if (mle_data.empty()) throw Failure("give --data or --benchmark");
        double* t2 = nullptr;
        size_t n = 0;
        check(nvb_read_measurements(mle_data.c_str(), &t2, &n));
        nvb_density_result r{};
        const nvb_status s = nvb_estimate_density(l.get(), t2, n, mle_t, command.c_str(), mle_out.c_str(), &r);
        nvb_free_doubles(t2);
        check(s);
        std::printf("rho_mle = %.6g ppm\nrho_sigma = %.6g ppm\nthickness = %g nm\n%s-> %s\n", r.rho_mle_ppm,
                    r.rho_sigma_ppm, r.fixed_thickness_nm, r.multimodal ? "warning: multimodal likelihood\n" : "",
                    mle_out.c_str());
      }
    } else if (*yl) {
      Params p(y_c.params);
      const auto d = parse_range(y_d);
      const auto t = parse_range(y_t);
      nvb_yield_options o;
      nvb_yield_options_default(&o);
      o.densities_ppm = d.data();
      o.n_densities = d.size();
      o.thicknesses_nm = t.data();
      o.n_thicknesses = t.size();
      o.n_configs = y_n;
      o.seed = y_c.seed;
      o.master_thickness_nm = y_master;
      o.placement = parse_placement(y_place);
      o.threads = y_c.threads;
      check(nvb_yield(p.get(), &o, command.c_str(), y_c.out.c_str()));
      std::printf("yield report -> %s\n", y_c.out.c_str());
    } else if (*vis) {
      Params p(v_c.params);
      double ratio = 0.0, direct = 0.0;
      check(nvb_visibility_ratio(p.get(), v_rho, v_thin, v_thick, v_n, v_c.seed, v_c.threads, &ratio, &direct));
      std::printf("ratio = %.6g\nratio_direct_mean = %.6g\n", ratio, direct);
    } else if (*p1) {
      Params p(p1_params);
      std::vector<double> f(64), m(64), w(64);
      size_t n = 0;
      check(nvb_p1_lines(p.get(), parse_isotope(p1_iso), p1_field, f.data(), m.data(), w.data(), f.size(), &n));
      std::printf("frequency_mhz,nuclear_m,fraction\n");
      for (size_t i = 0; i < n && i < f.size(); ++i) std::printf("%.6f,%g,%g\n", f[i], m[i], w[i]);
    } else if (*pr) {
      Params p("");
      check(nvb_params_save(p.get(), pr_out.c_str()));
      std::printf("parameters -> %s\n", pr_out.c_str());
    } else if (*val) {
      Params p(val_c.params);
      int failed = 0;
      auto cb = [](int, int, const char* line, void*) {
        std::printf("%s\n", line);
        std::fflush(stdout);
      };
      check(nvb_validate(p.get(), val_quick, val_only.empty() ? nullptr : val_only.data(), val_only.size(),
                         val_c.seed, val_c.threads, val_scale, cb, nullptr, &failed));
      std::printf("%d criteria failed\n", failed);
      return failed ? 1 : 0;
    }
  } catch (const Failure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
