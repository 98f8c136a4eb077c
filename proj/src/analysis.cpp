#include "nvbath/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_vector.h>

#include "nvbath/error.hpp"
#include "nvbath/parallel.hpp"
#include "nvbath/rng.hpp"
#include "nvbath/textio.hpp"

namespace nvbath {

namespace {

constexpr double kNMin = 0.3;
constexpr double kNSpan = 5.7;

double sigmoid(double q) { return 1.0 / (1.0 + std::exp(-q)); }
double exponent_of(double q) { return kNMin + kNSpan * sigmoid(q); }
double q_of(double n) {
  const double s = (n - kNMin) / kNSpan;
  return std::log(s / (1.0 - s));
}

struct FitData {
  const std::vector<double>* t;
  const std::vector<double>* y;
  bool fix_n;
  double n_fixed;
};

void model_terms(const gsl_vector* x, const FitData& d, double t, double& y, double& dy_dlnT, double& dy_dq) {
  const double ln_t2 = gsl_vector_get(x, 0);
  const double q = d.fix_n ? 0.0 : gsl_vector_get(x, 1);
  const double n = d.fix_n ? d.n_fixed : exponent_of(q);
  if (t <= 0.0) {
    y = 1.0;
    dy_dlnT = 0.0;
    dy_dq = 0.0;
    return;
  }
  const double lr = std::log(t) - ln_t2;
  const double u = std::exp(n * lr);
  y = std::exp(-u);
  dy_dlnT = y * u * n;
  const double s = sigmoid(q);
  dy_dq = -y * u * lr * kNSpan * s * (1.0 - s);
}

int fit_f(const gsl_vector* x, void* params, gsl_vector* f) {
  const auto& d = *static_cast<FitData*>(params);
  for (std::size_t i = 0; i < d.t->size(); ++i) {
    double y, a, b;
    model_terms(x, d, (*d.t)[i], y, a, b);
    gsl_vector_set(f, i, (*d.y)[i] - y);
  }
  return GSL_SUCCESS;
}

int fit_df(const gsl_vector* x, void* params, gsl_matrix* j) {
  const auto& d = *static_cast<FitData*>(params);
  for (std::size_t i = 0; i < d.t->size(); ++i) {
    double y, a, b;
    model_terms(x, d, (*d.t)[i], y, a, b);
    gsl_matrix_set(j, i, 0, -a);
    if (!d.fix_n) gsl_matrix_set(j, i, 1, -b);
  }
  return GSL_SUCCESS;
}

// First time the envelope drops below 1/e, linearly interpolated.
double first_inv_e_crossing(const Envelope& env) {
  const double level = std::exp(-1.0);
  for (std::size_t i = 1; i < env.times.size(); ++i) {
    if (env.values[i] < level && env.values[i - 1] >= level) {
      const double f = (env.values[i - 1] - level) / (env.values[i - 1] - env.values[i]);
      return env.times[i - 1] + f * (env.times[i] - env.times[i - 1]);
    }
  }
  if (!env.values.empty() && env.values.front() < level && env.times.front() > 0.0) return env.times.front();
  return -1.0;
}

class SilenceGsl {
public:
  SilenceGsl() : prev_(gsl_set_error_handler_off()) {}
  ~SilenceGsl() { gsl_set_error_handler(prev_); }

private:
  gsl_error_handler_t* prev_;
};

std::string sample_status(const ObservableSample& s) { return s.ok ? "ok" : "failed"; }

std::string sweep_fingerprint(const SweepGrid& g) {
  std::string s;
  for (const auto& [k, v] : g.metadata) s += k + "=" + v + ";";
  return std::to_string(std::hash<std::string>{}(s));
}

}  // namespace

Envelope fit_envelope(const CoherenceCurve& curve, const StrongWeakPartition* partition) {
  Envelope env;
  const std::size_t n = curve.times.size();
  if (partition) {
    for (std::size_t i = 0; i < n; ++i) {
      double strong = 1.0;
      for (const auto& s : partition->strong) strong *= std::cos(0.5 * s.a_z * curve.times[i]);
      if (std::abs(strong) < 0.1) continue;
      env.times.push_back(curve.times[i]);
      env.values.push_back(std::abs(curve.values[i]) / std::abs(strong));
    }
    return env;
  }
  if (n == 0) return env;
  // Right-to-left records of |L| are the maxima a decaying envelope must
  // pass through; interpolate between them.
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(curve.values[i]);
  std::vector<std::size_t> keep;
  double best = -1.0;
  for (std::size_t i = n; i-- > 0;) {
    if (mag[i] >= best) {
      keep.push_back(i);
      best = mag[i];
    }
  }
  std::reverse(keep.begin(), keep.end());
  env.times = curve.times;
  env.values.resize(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i <= keep[0]) {
      env.values[i] = mag[keep[0]];
      continue;
    }
    while (keep[k + 1] < i) ++k;
    const std::size_t a = keep[k], b = keep[k + 1];
    const double f = (curve.times[i] - curve.times[a]) / (curve.times[b] - curve.times[a]);
    env.values[i] = mag[a] + f * (mag[b] - mag[a]);
  }
  return env;
}

StretchedExpFit fit_envelope_stretched(const Envelope& env, const FitOptions& opts) {
  require(env.times.size() >= 10, "fit needs at least 10 points");
  const double t0 = first_inv_e_crossing(env);
  if (!(t0 > 0.0)) fail(ErrorCode::Numerical, "insufficient decay");
  SilenceGsl silence;
  FitData data{&env.times, &env.values, opts.fix_exponent, opts.fixed_exponent};
  const std::size_t p = opts.fix_exponent ? 1 : 2;
  const std::size_t n = env.times.size();

  gsl_multifit_nlinear_fdf fdf{};
  fdf.f = fit_f;
  fdf.df = fit_df;
  fdf.fvv = nullptr;
  fdf.n = n;
  fdf.p = p;
  fdf.params = &data;
  gsl_multifit_nlinear_parameters fp = gsl_multifit_nlinear_default_parameters();
  gsl_multifit_nlinear_workspace* w = gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &fp, n, p);
  if (!w) fail(ErrorCode::Internal, "cannot allocate fit workspace");
  gsl_vector* x0 = gsl_vector_alloc(p);
  gsl_vector_set(x0, 0, std::log(t0));
  if (!opts.fix_exponent) gsl_vector_set(x0, 1, q_of(1.0));
  gsl_multifit_nlinear_init(x0, &fdf, w);
  int info = 0;
  const int status = gsl_multifit_nlinear_driver(static_cast<std::size_t>(opts.max_iterations), opts.xtol, 1e-14, 0.0,
                                                 nullptr, nullptr, &info, w);
  const gsl_vector* x = gsl_multifit_nlinear_position(w);
  StretchedExpFit fit;
  fit.t2 = std::exp(gsl_vector_get(x, 0));
  fit.n_exponent = opts.fix_exponent ? opts.fixed_exponent : exponent_of(gsl_vector_get(x, 1));
  fit.residual_norm = gsl_blas_dnrm2(gsl_multifit_nlinear_residual(w));
  fit.iterations = static_cast<int>(gsl_multifit_nlinear_niter(w));
  fit.converged = status == GSL_SUCCESS && std::isfinite(fit.t2);
  gsl_vector_free(x0);
  gsl_multifit_nlinear_free(w);
  return fit;
}

StretchedExpFit fit_stretched_exponential(const CoherenceCurve& curve, const StrongWeakPartition* partition,
                                          const FitOptions& opts) {
  require(curve.times.size() == curve.values.size(), "curve times and values differ in length");
  return fit_envelope_stretched(fit_envelope(curve, partition), opts);
}

double ramsey_t2star(const StrongWeakPartition& partition) { return partition.t2_star; }

double ramsey_t2star(const CoherenceCurve& curve, const StrongWeakPartition* partition) {
  if (partition && partition->a_bath == 0.0) return std::numeric_limits<double>::infinity();
  FitOptions o;
  o.fix_exponent = true;
  o.fixed_exponent = 2.0;
  return fit_stretched_exponential(curve, partition, o).t2;
}

DistributionStats distribution_stats(const std::vector<double>& samples_ms) {
  DistributionStats st;
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> logs;
  for (double v : samples_ms) {
    if (!std::isfinite(v)) {
      ++st.n_excluded;
      continue;
    }
    require(v > 0.0, "coherence times must be positive");
    logs.push_back(std::log10(v));
  }
  if (logs.size() < 2) fail(ErrorCode::Domain, "distribution statistics need at least 2 finite samples");
  for (double l : logs) sum += l;
  const double mean = sum / static_cast<double>(logs.size());
  for (double l : logs) sum2 += (l - mean) * (l - mean);
  st.mu = std::pow(10.0, mean);
  st.sigma = std::sqrt(sum2 / static_cast<double>(logs.size()));
  st.n_samples = logs.size();
  return st;
}

const char* observable_name(Observable o) {
  switch (o) {
    case Observable::T2StarFormula: return "t2star_formula";
    case Observable::T2StarFit: return "t2star_fit";
    case Observable::T2Hahn: return "t2_hahn";
  }
  return "t2star_formula";
}

Observable parse_observable(const std::string& s) {
  if (s == "t2star_formula" || s == "t2star") return Observable::T2StarFormula;
  if (s == "t2star_fit") return Observable::T2StarFit;
  if (s == "t2_hahn" || s == "t2") return Observable::T2Hahn;
  fail(ErrorCode::InvalidArgument, "unknown observable '" + s + "'");
}

std::uint64_t config_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t index) {
  return derive_seed(seed, {stream::sweep_cell, cell, index});
}

std::vector<ObservableSample> simulate_observable(const SimulationSpec& spec, int n_configs, const Params& params,
                                                  std::uint64_t seed, std::uint64_t cell) {
  require(n_configs >= 1, "number of configurations must be at least 1");
  spec.geometry.validate();
  const BathOptions bopts = BathOptions::from(params, spec.isotope);
  ModelContext ctx;
  CCEConfig cce = spec.cce;
  if (spec.observable == Observable::T2Hahn) {
    ctx = params.context(spec.isotope, spec.field);
    if (cce.time_grid.empty()) cce.time_grid = default_hahn_grid(spec.geometry.density_ppm);
    cce.threads = 1;
    cce.validate();
  }
  std::vector<ObservableSample> out(static_cast<std::size_t>(n_configs));
  parallel_for(out.size(), spec.threads, [&](std::size_t i) {
    ObservableSample& s = out[i];
    s.seed = config_seed(seed, cell, i);
    try {
      const auto bath = generate_bath(spec.geometry, s.seed, bopts);
      switch (spec.observable) {
        case Observable::T2StarFormula: {
          s.value = partition_strong_weak(bath, params.central, params.constants).t2_star;
          break;
        }
        case Observable::T2StarFit: {
          const auto part = partition_strong_weak(bath, params.central, params.constants);
          if (part.a_bath == 0.0) {
            s.value = std::numeric_limits<double>::infinity();
            break;
          }
          const auto grid = default_ramsey_grid(part.a_bath);
          const auto curve = ramsey_cce1_analytic(bath, params.central, params.constants, grid);
          s.value = ramsey_t2star(curve, &part);
          break;
        }
        case Observable::T2Hahn: {
          const auto curve =
              cce_coherence(bath, cce, PulseSequence::hahn_echo(), ctx, derive_seed(s.seed, {stream::bath_state}));
          const auto fit = fit_stretched_exponential(curve);
          s.value = fit.t2;
          s.n_exponent = fit.n_exponent;
          if (!fit.converged) {
            s.ok = false;
            s.message = "fit did not converge";
          }
          break;
        }
      }
    } catch (const Error& e) {
      s.ok = false;
      s.message = e.what();
    }
  });
  return out;
}

CoherenceCurve ensemble_average_curve(const SimulationSpec& spec, const PulseSequence& sequence, int n_configs,
                                      const Params& params, std::uint64_t seed, std::uint64_t cell) {
  require(n_configs >= 1, "number of configurations must be at least 1");
  const BathOptions bopts = BathOptions::from(params, spec.isotope);
  const ModelContext ctx = params.context(spec.isotope, spec.field);
  CCEConfig cce = spec.cce;
  if (cce.time_grid.empty()) {
    require(sequence.kind == SequenceKind::HahnEcho, "a time grid is required for this sequence");
    cce.time_grid = default_hahn_grid(spec.geometry.density_ppm);
  }
  cce.threads = 1;
  std::vector<CoherenceCurve> curves(static_cast<std::size_t>(n_configs));
  parallel_for(curves.size(), spec.threads, [&](std::size_t i) {
    const std::uint64_t cs = config_seed(seed, cell, i);
    const auto bath = generate_bath(spec.geometry, cs, bopts);
    curves[i] = cce_coherence(bath, cce, sequence, ctx, derive_seed(cs, {stream::bath_state}));
  });
  CoherenceCurve avg;
  avg.times = cce.time_grid;
  avg.values.assign(avg.times.size(), Complex(0.0));
  for (const auto& c : curves)
    for (std::size_t t = 0; t < avg.times.size(); ++t) avg.values[t] += c.values[t];
  for (auto& v : avg.values) v /= static_cast<double>(n_configs);
  avg.metadata = curves.front().metadata;
  avg.set_meta("route", "ensemble_average");
  avg.set_meta("n_configs", std::to_string(n_configs));
  avg.set_meta("seed", std::to_string(seed));
  avg.set_meta("bath_seed", "per-config");
  avg.set_meta("state_seed", "per-config");
  return avg;
}

void SweepSpec::validate() const {
  require(!thicknesses.empty() && !densities.empty(), "sweep grid axes must not be empty");
  for (std::size_t i = 0; i < thicknesses.size(); ++i) {
    require(thicknesses[i] > 0.0, "thickness must be positive");
    if (i) require(thicknesses[i] > thicknesses[i - 1], "thicknesses must be strictly increasing");
  }
  for (std::size_t i = 0; i < densities.size(); ++i) {
    require(densities[i] > 0.0, "density must be positive");
    if (i) require(densities[i] > densities[i - 1], "densities must be strictly increasing");
  }
  require(n_configs >= 1, "number of configurations must be at least 1");
  require(quorum > 0.0 && quorum <= 1.0, "quorum must lie in (0, 1]");
}

void finalize_cell(SweepCell& cell, int n_configs, double quorum) {
  cell.n_failed = 0;
  std::vector<double> values;
  for (const auto& s : cell.samples) {
    if (!s.ok) {
      ++cell.n_failed;
      continue;
    }
    values.push_back(s.value);
  }
  cell.complete = static_cast<double>(values.size()) >= quorum * n_configs - 1e-9;
  cell.stats.reset();
  std::size_t finite = 0;
  for (double v : values) finite += std::isfinite(v) ? 1 : 0;
  if (finite >= 2) cell.stats = distribution_stats(values);
}

SweepGrid run_sweep(const SweepSpec& spec, const Params& params, const SweepProgress& progress) {
  spec.validate();
  SweepGrid grid;
  grid.thicknesses = spec.thicknesses;
  grid.densities = spec.densities;
  const double conv =
      spec.converged_spins > 0.0 ? spec.converged_spins : (spec.observable == Observable::T2Hahn ? 100.0 : 12.0);
  auto meta = [&](const std::string& k, const std::string& v) { grid.metadata.emplace_back(k, v); };
  meta("observable", observable_name(spec.observable));
  meta("seed", std::to_string(spec.seed));
  meta("n_configs", std::to_string(spec.n_configs));
  meta("isotope", isotope_name(spec.isotope));
  meta("field_gauss", fmt_double(spec.field.b_z));
  meta("placement", placement_mode_name(spec.placement));
  meta("lateral_radius_nm", spec.lateral_radius > 0.0 ? fmt_double(spec.lateral_radius) : "auto");
  meta("converged_spins", fmt_double(conv));
  meta("central_position", "slab mid-plane");
  meta("quorum", fmt_double(spec.quorum));
  if (spec.observable == Observable::T2Hahn) {
    meta("cce_order", std::to_string(spec.cce.order));
    meta("n_bath_states", std::to_string(spec.cce.n_bath_states));
    meta("bath_state_mode", bath_state_mode_name(spec.cce.state_mode));
    meta("coupling_model", coupling_model_name(spec.cce.model));
    meta("dipole_radius_nm", spec.cce.dipole_radius > 0.0 ? fmt_double(spec.cce.dipole_radius) : "auto");
  }
  meta("reduction", "deterministic");
  meta("seed_scheme", "config seed = derive_seed(seed, {3, cell, index})");
  {
    std::string axes;
    for (double t : spec.thicknesses) axes += (axes.empty() ? "" : " ") + fmt_double(t);
    meta("thicknesses_nm", axes);
    axes.clear();
    for (double d : spec.densities) axes += (axes.empty() ? "" : " ") + fmt_double(d);
    meta("densities_ppm", axes);
  }

  const std::size_t n_cells = spec.thicknesses.size() * spec.densities.size();
  grid.cells.resize(n_cells);
  std::vector<bool> done(n_cells, false);
  const std::string fp = sweep_fingerprint(grid);

  // Resume from a checkpoint written by an identical configuration.
  if (!spec.checkpoint_path.empty() && std::filesystem::exists(spec.checkpoint_path)) {
    std::ifstream in(spec.checkpoint_path);
    std::string line;
    std::getline(in, line);
    if (line == "# fingerprint " + fp) {
      while (std::getline(in, line)) {
        auto tok = split_ws(line);
        if (tok.size() != 3 || tok[0] != "cell") break;
        const auto idx = static_cast<std::size_t>(std::stoull(tok[1]));
        SweepCell cell;
        cell.lateral_radius = parse_double(tok[2]);
        bool closed = false;
        while (std::getline(in, line)) {
          if (line == "end") {
            closed = true;
            break;
          }
          auto st = split_ws(line);
          if (st.size() < 4) break;
          ObservableSample s;
          s.seed = std::stoull(st[0]);
          s.value = parse_double(st[1]);
          s.ok = st[2] == "ok";
          s.n_exponent = parse_double(st[3]);
          cell.samples.push_back(s);
        }
        if (!closed || idx >= n_cells) break;
        grid.cells[idx] = std::move(cell);
        done[idx] = true;
      }
    }
  }
  std::ofstream ckpt;
  if (!spec.checkpoint_path.empty()) {
    // Rewrite the checkpoint with exactly the cells that were accepted.
    ckpt.open(spec.checkpoint_path, std::ios::trunc);
    if (!ckpt) fail(ErrorCode::Io, "cannot write checkpoint " + spec.checkpoint_path);
    ckpt << "# fingerprint " << fp << "\n";
  }
  auto write_ckpt = [&](std::size_t idx) {
    if (!ckpt.is_open()) return;
    const auto& c = grid.cells[idx];
    ckpt << "cell " << idx << " " << fmt_double(c.lateral_radius) << "\n";
    for (const auto& s : c.samples)
      ckpt << s.seed << " " << fmt_double(s.value) << " " << sample_status(s) << " " << fmt_double(s.n_exponent)
           << "\n";
    ckpt << "end\n";
    ckpt.flush();
  };

  std::size_t n_done = 0;
  for (std::size_t it = 0; it < spec.thicknesses.size(); ++it) {
    for (std::size_t id = 0; id < spec.densities.size(); ++id) {
      const std::size_t idx = it * spec.densities.size() + id;
      SweepCell& cell = grid.cells[idx];
      cell.thickness = spec.thicknesses[it];
      cell.density = spec.densities[id];
      if (!done[idx]) {
        SimulationSpec sim;
        sim.geometry.density_ppm = cell.density;
        sim.geometry.thickness = cell.thickness;
        sim.geometry.mode = spec.placement;
        sim.geometry.lateral_radius =
            spec.lateral_radius > 0.0
                ? spec.lateral_radius
                : default_lateral_radius(cell.density, cell.thickness, conv, 3.0, spec.placement, params.constants);
        sim.observable = spec.observable;
        sim.cce = spec.cce;
        sim.isotope = spec.isotope;
        sim.field = spec.field;
        sim.threads = spec.threads;
        cell.lateral_radius = sim.geometry.lateral_radius;
        cell.samples = simulate_observable(sim, spec.n_configs, params, spec.seed, idx);
      }
      write_ckpt(idx);
      finalize_cell(cell, spec.n_configs, spec.quorum);
      ++n_done;
      if (progress) progress(n_done, n_cells);
    }
  }
  if (ckpt.is_open()) {
    ckpt.close();
    std::filesystem::remove(spec.checkpoint_path);
  }
  return grid;
}

std::string sweep_to_text(const SweepGrid& grid) {
  std::ostringstream o;
  o << "# schema " << kSweepSchema << "\n";
  o << "# tool nvbath " << kToolVersion << "\n";
  for (const auto& [k, v] : grid.metadata) o << "# " << k << " = " << v << "\n";
  o << "[stats]\n";
  o << "thickness_nm,density_ppm,lateral_radius_nm,mu_ms,sigma,n_samples,n_infinite,n_failed,complete\n";
  for (const auto& c : grid.cells) {
    o << fmt_double(c.thickness) << "," << fmt_double(c.density) << "," << fmt_double(c.lateral_radius) << ",";
    if (c.stats)
      o << fmt_double(c.stats->mu) << "," << fmt_double(c.stats->sigma) << "," << c.stats->n_samples << ","
        << c.stats->n_excluded;
    else
      o << "nan,nan,0,0";
    o << "," << c.n_failed << "," << (c.complete ? 1 : 0) << "\n";
  }
  o << "[samples]\n";
  o << "thickness_nm,density_ppm,index,seed,value_ms,n_exponent,status\n";
  for (const auto& c : grid.cells)
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      const auto& s = c.samples[i];
      o << fmt_double(c.thickness) << "," << fmt_double(c.density) << "," << i << "," << s.seed << ","
        << fmt_double(s.value) << "," << fmt_double(s.n_exponent) << "," << sample_status(s) << "\n";
    }
  return o.str();
}

SweepGrid sweep_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SweepGrid g;
  bool schema_ok = false;
  int section = 0;
  bool header_skipped = false;
  std::map<std::pair<double, double>, std::size_t> where;
  std::vector<std::vector<std::string>> stats_rows, sample_rows;
  auto split_csv = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    return f;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto tok = split_ws(line);
      if (tok.size() >= 3 && tok[1] == "schema") schema_ok = tok[2] == kSweepSchema;
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) g.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 3));
      continue;
    }
    if (line == "[stats]") {
      section = 1;
      header_skipped = false;
      continue;
    }
    if (line == "[samples]") {
      section = 2;
      header_skipped = false;
      continue;
    }
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    if (section == 1) stats_rows.push_back(split_csv(line));
    else if (section == 2) sample_rows.push_back(split_csv(line));
  }
  if (!schema_ok) fail(ErrorCode::Io, std::string("sweep file must declare schema ") + kSweepSchema);
  for (const auto& r : stats_rows) {
    if (r.size() != 9) fail(ErrorCode::Io, "malformed sweep stats row");
    const double t = parse_double(r[0]), d = parse_double(r[1]);
    if (std::find(g.thicknesses.begin(), g.thicknesses.end(), t) == g.thicknesses.end()) g.thicknesses.push_back(t);
    if (std::find(g.densities.begin(), g.densities.end(), d) == g.densities.end()) g.densities.push_back(d);
  }
  std::sort(g.thicknesses.begin(), g.thicknesses.end());
  std::sort(g.densities.begin(), g.densities.end());
  g.cells.resize(g.thicknesses.size() * g.densities.size());
  for (std::size_t it = 0; it < g.thicknesses.size(); ++it)
    for (std::size_t id = 0; id < g.densities.size(); ++id) {
      auto& c = g.cell(it, id);
      c.thickness = g.thicknesses[it];
      c.density = g.densities[id];
      where[{c.thickness, c.density}] = it * g.densities.size() + id;
    }
  for (const auto& r : stats_rows) {
    auto& c = g.cells[where.at({parse_double(r[0]), parse_double(r[1])})];
    c.lateral_radius = parse_double(r[2]);
    const double mu = parse_double(r[3]);
    if (std::isfinite(mu)) {
      DistributionStats st;
      st.mu = mu;
      st.sigma = parse_double(r[4]);
      st.n_samples = std::stoull(r[5]);
      st.n_excluded = std::stoull(r[6]);
      c.stats = st;
    }
    c.n_failed = std::stoull(r[7]);
    c.complete = r[8] == "1";
  }
  for (const auto& r : sample_rows) {
    if (r.size() != 7) fail(ErrorCode::Io, "malformed sweep sample row");
    auto it = where.find({parse_double(r[0]), parse_double(r[1])});
    if (it == where.end()) fail(ErrorCode::Io, "sweep sample outside the grid");
    ObservableSample s;
    s.seed = std::stoull(r[3]);
    s.value = parse_double(r[4]);
    s.n_exponent = parse_double(r[5]);
    s.ok = r[6] == "ok";
    g.cells[it->second].samples.push_back(s);
  }
  return g;
}

void save_sweep(const std::string& path, const SweepGrid& grid) { write_file(path, sweep_to_text(grid)); }

SweepGrid load_sweep(const std::string& path) { return sweep_from_text(read_file(path)); }

}  // namespace nvbath
