#ifndef SICSEQ_H
#define SICSEQ_H

#include <stdbool.h>
#include <stddef.h>

/*
 Result codes.
 */
typedef enum {
  SICSEQ_STATUS_OK = 0,
  SICSEQ_STATUS_NULL_POINTER = 1,
  SICSEQ_STATUS_INVALID_ARGUMENT = 2,
  SICSEQ_STATUS_PARSE = 3,
  SICSEQ_STATUS_NOT_INFORMATIONALLY_COMPLETE = 4,
  SICSEQ_STATUS_NUMERICAL = 5,
  SICSEQ_STATUS_PANIC = 6,
} SicseqStatus;

/*
 Opaque measurement handle.
 */
typedef struct SicseqPom SicseqPom;

/*
 Opaque two-step scheme handle.
 */
typedef struct SicseqScheme SicseqScheme;

/*
 Library version, a static NUL-terminated string.
 */
const char *sicseq_version(void);

/*
 Message for the last failed call on this thread; empty after a success.
 Valid until the next `sicseq_*` call on the same thread.
 */
const char *sicseq_last_error(void);

/*
 Built-in SIC for `dim` in {2, 3, 4, 8}; `gamma` selects the qutrit
 family member and is ignored for other dimensions.

 # Safety
 `out` must be a valid pointer.
 */
SicseqStatus sicseq_catalog_pom(size_t dim, double gamma, SicseqPom **out);

/*
 Built-in two-step scheme for `dim` in {2, 3, 4, 8}.

 # Safety
 `out` must be a valid pointer.
 */
SicseqStatus sicseq_catalog_scheme(size_t dim, double gamma, SicseqScheme **out);

/*
 Heisenberg-Weyl orbit of the normalized fiducial with `dim` amplitudes.

 # Safety
 `re` and `im` must point to `dim` values; `out` must be valid.
 */
SicseqStatus sicseq_hw_pom(size_t dim, const double *re, const double *im, SicseqPom **out);

/*
 Diagonal-Kraus plus Fourier-basis scheme realizing the same orbit.

 # Safety
 `re` and `im` must point to `dim` values; `out` must be valid.
 */
SicseqStatus sicseq_hw_scheme(size_t dim, const double *re, const double *im, SicseqScheme **out);

/*
 # Safety
 `scheme` must be a live handle; `out` must be valid.
 */
SicseqStatus sicseq_scheme_compose(const SicseqScheme *scheme, SicseqPom **out);

/*
 # Safety
 `pom` must be a live handle; `dim` and `len` must be valid or null.
 */
SicseqStatus sicseq_pom_shape(const SicseqPom *pom, size_t *dim, size_t *len);

/*
 # Safety
 `pom` must be a live handle; `out` must be valid.
 */
SicseqStatus sicseq_pom_is_sic(const SicseqPom *pom, double tol, bool *out);

/*
 # Safety
 `pom` must be a live handle; `out` must be valid.
 */
SicseqStatus sicseq_pom_is_ic(const SicseqPom *pom, double tol, bool *out);

/*
 Outcome probabilities for the `dim x dim` density matrix `rho`.

 # Safety
 `rho_re`/`rho_im` must hold `dim * dim` values, `probs` room for `len` values.
 */
SicseqStatus sicseq_born(const SicseqPom *pom,
                         const double *rho_re,
                         const double *rho_im,
                         double *probs,
                         size_t len);

/*
 Linear-inversion estimate written to `rho_re`/`rho_im` (`dim * dim` each).

 # Safety
 `probs` must hold `len` values and the outputs `dim * dim` values.
 */
SicseqStatus sicseq_reconstruct(const SicseqPom *pom,
                                const double *probs,
                                size_t len,
                                bool project_psd,
                                double *rho_re,
                                double *rho_im);

/*
 # Safety
 `json` must be a NUL-terminated string; `out` must be valid.
 */
SicseqStatus sicseq_pom_from_json(const char *json, SicseqPom **out);

/*
 JSON text to be released with [`sicseq_string_free`].

 # Safety
 `pom` must be a live handle; `out` must be valid.
 */
SicseqStatus sicseq_pom_to_json(const SicseqPom *pom, char **out);

/*
 # Safety
 `json` must be a NUL-terminated string; `out` must be valid.
 */
SicseqStatus sicseq_scheme_from_json(const char *json, SicseqScheme **out);

/*
 # Safety
 `scheme` must be a live handle; `out` must be valid.
 */
SicseqStatus sicseq_scheme_to_json(const SicseqScheme *scheme, char **out);

/*
 # Safety
 `pom` must come from this library and not be used afterwards; null is ignored.
 */
void sicseq_pom_free(SicseqPom *pom);

/*
 # Safety
 `scheme` must come from this library and not be used afterwards; null is ignored.
 */
void sicseq_scheme_free(SicseqScheme *scheme);

/*
 # Safety
 `s` must come from a `*_to_json` call and not be used afterwards; null is ignored.
 */
void sicseq_string_free(char *s);

#endif  /* SICSEQ_H */
