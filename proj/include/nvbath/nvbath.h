#ifndef NVBATH_H
#define NVBATH_H

/* C interface to the nvbath library. Every call returns an nvb_status;
   on failure nvb_last_error() holds the message for the calling thread.
   Objects are opaque and released with their _free function. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define NVB_API __declspec(dllexport)
#else
#define NVB_API __attribute__((visibility("default")))
#endif

typedef enum {
  NVB_OK = 0,
  NVB_ERR_INVALID_ARGUMENT = 1,
  NVB_ERR_IO = 2,
  NVB_ERR_NUMERICAL = 3,
  NVB_ERR_DOMAIN = 4,
  NVB_ERR_INTERNAL = 5
} nvb_status;

typedef enum { NVB_N15 = 15, NVB_N14 = 14 } nvb_isotope;
typedef enum { NVB_LATTICE = 0, NVB_CONTINUUM = 1 } nvb_placement;
typedef enum { NVB_RAMSEY = 0, NVB_HAHN = 1 } nvb_sequence;
typedef enum { NVB_SAMPLED = 0, NVB_MIXED = 1 } nvb_state_mode;
typedef enum { NVB_SECULAR = 0, NVB_PROJECTED = 1, NVB_FULL = 2 } nvb_coupling_model;
typedef enum { NVB_T2STAR_FORMULA = 0, NVB_T2STAR_FIT = 1, NVB_T2_HAHN = 2 } nvb_observable;

typedef struct nvb_params nvb_params;
typedef struct nvb_bath nvb_bath;
typedef struct nvb_curve nvb_curve;
typedef struct nvb_library nvb_library;

NVB_API const char* nvb_version(void);
NVB_API const char* nvb_last_error(void);
NVB_API const char* nvb_status_name(nvb_status s);

/* Parameters */
NVB_API nvb_status nvb_params_default(nvb_params** out);
NVB_API nvb_status nvb_params_load(const char* path, nvb_params** out);
NVB_API nvb_status nvb_params_save(const nvb_params* p, const char* path);
NVB_API void nvb_params_free(nvb_params* p);

/* Baths */
typedef struct {
  double density_ppm;
  double thickness_nm;
  double lateral_radius_nm; /* <= 0: sized for converged_spins */
  double converged_spins;   /* used when lateral_radius_nm <= 0; <= 0 means 12 */
  nvb_placement placement;
  nvb_isotope isotope;
} nvb_geometry;

NVB_API void nvb_geometry_default(nvb_geometry* g);
NVB_API nvb_status nvb_bath_generate(const nvb_params* p, const nvb_geometry* g, uint64_t seed, nvb_bath** out);
NVB_API nvb_status nvb_bath_load(const char* path, nvb_bath** out);
NVB_API nvb_status nvb_bath_save(const nvb_bath* b, const char* path);
NVB_API size_t nvb_bath_size(const nvb_bath* b);
NVB_API nvb_status nvb_bath_spin(const nvb_bath* b, size_t i, double position_nm[3], int* jt_axis, double* nuclear_m);
NVB_API nvb_status nvb_bath_nearest_distance(const nvb_bath* b, double* out_nm);
NVB_API nvb_status nvb_bath_t2star(const nvb_params* p, const nvb_bath* b, double* out_ms, size_t* n_strong);
NVB_API void nvb_bath_free(nvb_bath* b);

/* Coherence curves */
typedef struct {
  nvb_sequence sequence;
  int order;                /* <= 0: 1 for Ramsey, 4 for Hahn echo */
  double dipole_radius_nm;  /* <= 0: density default */
  int n_bath_states;
  nvb_state_mode state_mode;
  int frozen_nuclear;
  int mean_field;
  nvb_coupling_model model;
  double field_gauss;
  const double* times_ms; /* NULL: default grid */
  size_t n_times;
  unsigned threads;
  int analytic; /* Ramsey only: first-order analytic route */
} nvb_coherence_options;

NVB_API void nvb_coherence_options_default(nvb_coherence_options* o);
NVB_API nvb_status nvb_coherence(const nvb_params* p, const nvb_bath* b, const nvb_coherence_options* o,
                                 uint64_t seed, nvb_curve** out);
NVB_API nvb_status nvb_curve_load(const char* path, nvb_curve** out);
NVB_API nvb_status nvb_curve_save(const nvb_curve* c, const char* path);
NVB_API nvb_status nvb_curve_set_meta(nvb_curve* c, const char* key, const char* value);
NVB_API size_t nvb_curve_size(const nvb_curve* c);
NVB_API nvb_status nvb_curve_point(const nvb_curve* c, size_t i, double* t_ms, double* re, double* im);
/* Stretched-exponential fit; fixed_exponent > 0 pins n. */
NVB_API nvb_status nvb_curve_fit(const nvb_curve* c, double fixed_exponent, double* t2_ms, double* n_exponent);
NVB_API void nvb_curve_free(nvb_curve* c);

/* Sweeps */
typedef struct {
  const double* thicknesses_nm;
  size_t n_thicknesses;
  const double* densities_ppm;
  size_t n_densities;
  int n_configs;
  nvb_observable observable;
  uint64_t seed;
  nvb_isotope isotope;
  double field_gauss;
  nvb_placement placement;
  double lateral_radius_nm; /* <= 0: sized per cell */
  double converged_spins;   /* <= 0: observable default */
  int order;                /* Hahn route */
  int n_bath_states;
  nvb_state_mode state_mode;
  double dipole_radius_nm;
  unsigned threads;
  const char* checkpoint_path; /* NULL: none */
} nvb_sweep_options;

typedef void (*nvb_progress_fn)(size_t done, size_t total, void* user);

NVB_API void nvb_sweep_options_default(nvb_sweep_options* o);
NVB_API nvb_status nvb_sweep(const nvb_params* p, const nvb_sweep_options* o, const char* command,
                             const char* out_path, nvb_progress_fn progress, void* user);

/* Libraries and maximum-likelihood estimation */
NVB_API nvb_status nvb_library_from_sweep(const char* sweep_path, nvb_library** out);
NVB_API nvb_status nvb_library_load(const char* path, nvb_library** out);
NVB_API nvb_status nvb_library_save(const nvb_library* lib, const char* path);
NVB_API void nvb_library_free(nvb_library* lib);

typedef struct {
  double rho_mle_ppm;
  double rho_sigma_ppm;
  double fixed_thickness_nm;
  int multimodal;
  double argmax_thickness_nm;
  double argmax_density_ppm;
} nvb_density_result;

NVB_API nvb_status nvb_read_measurements(const char* path, double** t2star_us, size_t* n);
NVB_API void nvb_free_doubles(double* v);
NVB_API nvb_status nvb_estimate_density(const nvb_library* lib, const double* t2star_us, size_t n,
                                        double thickness_nm, const char* command, const char* report_path,
                                        nvb_density_result* out);
NVB_API nvb_status nvb_benchmark(const nvb_library* lib, const int* sample_counts, size_t n_counts, int trials,
                                 double thickness_nm, uint64_t seed, unsigned threads, const char* report_path,
                                 double* fit_p);

/* Nearest-neighbor statistics and strong-coupling yield */
NVB_API nvb_status nvb_nn_pdf(int dimensions, double density, double r_nm, double* pdf, double* cdf);

typedef struct {
  const double* densities_ppm;
  size_t n_densities;
  const double* thicknesses_nm;
  size_t n_thicknesses;
  int n_configs;
  uint64_t seed;
  double master_thickness_nm;
  nvb_placement placement;
  unsigned threads;
} nvb_yield_options;

NVB_API void nvb_yield_options_default(nvb_yield_options* o);
NVB_API nvb_status nvb_yield(const nvb_params* p, const nvb_yield_options* o, const char* command,
                             const char* out_path);
NVB_API nvb_status nvb_visibility_ratio(const nvb_params* p, double density_ppm, double thin_nm, double thick_nm,
                                        int n_configs, uint64_t seed, unsigned threads, double* ratio,
                                        double* ratio_direct);

/* P1 spectroscopy: up to `capacity` lines, `n` receives the total. */
NVB_API nvb_status nvb_p1_lines(const nvb_params* p, nvb_isotope iso, double field_gauss, double* frequency_mhz,
                                double* nuclear_m, double* fraction, size_t capacity, size_t* n);

/* Acceptance suite */
typedef void (*nvb_result_fn)(int id, int passed, const char* line, void* user);

NVB_API nvb_status nvb_validate(const nvb_params* p, int quick, const int* only, size_t n_only, uint64_t seed,
                                unsigned threads, double scale, nvb_result_fn on_result, void* user, int* n_failed);

#ifdef __cplusplus
}
#endif

#endif
