/* Plain C client of the shared library. */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "nvbath/nvbath.h"

#define EXPECT(cond)                                             \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, nvb_last_error()); \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  nvb_params* p = NULL;
  nvb_bath* b = NULL;
  nvb_bath* missing = NULL;
  nvb_curve* c = NULL;
  nvb_geometry g;
  nvb_coherence_options o;
  double pdf = 0.0, cdf = 0.0, t = 0.0, re = 0.0, im = 0.0, t2 = 0.0, r = 0.0;
  double freq[16], m[16], frac[16];
  size_t n = 0, nstrong = 0, i;

  EXPECT(strlen(nvb_version()) > 0);
  EXPECT(nvb_params_default(&p) == NVB_OK);

  nvb_geometry_default(&g);
  g.density_ppm = 0.0;
  EXPECT(nvb_bath_generate(p, &g, 1, &b) == NVB_ERR_INVALID_ARGUMENT);
  EXPECT(strcmp(nvb_last_error(), "density must be positive") == 0);
  EXPECT(b == NULL);

  g.density_ppm = 20.0;
  g.thickness_nm = 5.0;
  EXPECT(nvb_bath_generate(p, &g, 7, &b) == NVB_OK);
  EXPECT(nvb_bath_size(b) > 0);
  EXPECT(nvb_bath_nearest_distance(b, &r) == NVB_OK && r > 0.0);
  EXPECT(nvb_bath_t2star(p, b, &t2, &nstrong) == NVB_OK && t2 > 0.0);
  EXPECT(nvb_bath_spin(b, nvb_bath_size(b), NULL, NULL, NULL) == NVB_ERR_INVALID_ARGUMENT);

  nvb_coherence_options_default(&o);
  EXPECT(nvb_coherence(p, b, &o, 3, &c) == NVB_OK);
  EXPECT(nvb_curve_size(c) > 1);
  EXPECT(nvb_curve_point(c, 0, &t, &re, &im) == NVB_OK);
  EXPECT(t == 0.0 && fabs(re - 1.0) < 1e-12);

  EXPECT(nvb_nn_pdf(3, 0.01, 2.0, &pdf, &cdf) == NVB_OK);
  EXPECT(pdf > 0.0 && cdf > 0.0 && cdf < 1.0);
  EXPECT(nvb_nn_pdf(3, 0.0, 2.0, &pdf, &cdf) != NVB_OK);

  EXPECT(nvb_p1_lines(p, NVB_N15, 311.0, freq, m, frac, 16, &n) == NVB_OK);
  EXPECT(n == 8);
  for (i = 1; i < n; ++i) EXPECT(freq[i] >= freq[i - 1]);

  EXPECT(nvb_bath_load("/nonexistent/bath.txt", &missing) == NVB_ERR_IO);
  EXPECT(missing == NULL);
  EXPECT(strcmp(nvb_status_name(NVB_ERR_IO), "i/o error") == 0);

  nvb_curve_free(c);
  nvb_bath_free(b);
  nvb_params_free(p);
  nvb_bath_free(NULL);
  printf("C API smoke test passed\n");
  return 0;
}
