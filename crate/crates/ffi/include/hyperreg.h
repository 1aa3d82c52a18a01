#ifndef HYPERREG_H
#define HYPERREG_H

/* Generated by cbindgen from the hyperreg-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HrStatus {
  HR_STATUS_OK = 0,
  HR_STATUS_INVALID_INPUT = 1,
  HR_STATUS_ASSUMPTION = 2,
  HR_STATUS_NUMERICAL = 3,
  HR_STATUS_NULL_POINTER = 4,
  HR_STATUS_PANIC = 5,
} HrStatus;

typedef struct HrCertificate HrCertificate;

typedef struct HrSystem HrSystem;

typedef struct HrTrajectory HrTrajectory;

/**
 * Scalars of a gain certificate.
 */
typedef struct HrScalars {
  double mu;
  double c;
  double ki_star;
  double ki;
  double p_max;
  double p;
  double mu_e;
} HrScalars;

typedef struct HrHeatGain {
  double ki_norm;
  double cainv_norm;
  double ki_star;
  double ki_star_sharp;
  /**
   * Row-major `C A⁻¹ B`.
   */
  double cainvb[9];
  /**
   * Row-major `Ki`.
   */
  double ki_matrix[9];
} HrHeatGain;

typedef struct HrForwardingCheck {
  double ki_star;
  double ki;
  double mu_e;
  double dissipation_max;
  double pe_min_eigenvalue;
  bool pass;
} HrForwardingCheck;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *hr_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void hr_string_free(char *s);

/**
 * Parses a system description in JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HrStatus hr_system_from_json(const char *json, struct HrSystem **out);

/**
 * Scalar transport `φ_t + φ_s = 0` with `φ(0) = u`, `y = φ(1)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HrStatus hr_system_transport(struct HrSystem **out);

/**
 * Linearized Saint-Venant channel with speeds `c`, `-d`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HrStatus hr_system_saint_venant(double c,
                                     double d,
                                     double k0,
                                     double k1,
                                     double b0,
                                     double b1,
                                     struct HrSystem **out);

/**
 * # Safety
 * `system` must come from this library or be null.
 */
void hr_system_free(struct HrSystem *system);

/**
 * # Safety
 * `system` must be a valid handle; output pointers may be null.
 */
enum HrStatus hr_system_dims(const struct HrSystem *system, size_t *n, size_t *ell, size_t *m);

/**
 * Runs the full design. `mu <= 0` searches the default rate grid; otherwise the rate is fixed.
 *
 * # Safety
 * `system` must be a valid handle; `out` must be writable.
 */
enum HrStatus hr_design(const struct HrSystem *system, double mu, struct HrCertificate **out);

/**
 * # Safety
 * `cert` must come from this library or be null.
 */
void hr_certificate_free(struct HrCertificate *cert);

/**
 * # Safety
 * `cert` must be a valid handle; `out` must be writable.
 */
enum HrStatus hr_certificate_scalars(const struct HrCertificate *cert, struct HrScalars *out);

/**
 * Copies `Ki` row-major into `buf`, which must hold `m * m` values.
 *
 * # Safety
 * `cert` must be a valid handle; `buf` must point to `len` writable doubles.
 */
enum HrStatus hr_certificate_ki_matrix(const struct HrCertificate *cert, double *buf, size_t len);

/**
 * Serializes the certificate; release the string with [`hr_string_free`].
 *
 * # Safety
 * `cert` must be a valid handle; `out` must be writable.
 */
enum HrStatus hr_certificate_to_json(const struct HrCertificate *cert, char **out);

/**
 * Closed-loop run from zero data toward `y_ref` (length `m`).
 *
 * # Safety
 * Handles must be valid; `y_ref` must point to `m` doubles; `out` must be writable.
 */
enum HrStatus hr_simulate(const struct HrSystem *system,
                          const struct HrCertificate *cert,
                          const double *y_ref,
                          size_t m,
                          double horizon,
                          size_t cells,
                          double cfl,
                          struct HrTrajectory **out);

/**
 * # Safety
 * `traj` must come from this library or be null.
 */
void hr_trajectory_free(struct HrTrajectory *traj);

/**
 * Number of recorded frames, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be a valid handle or null.
 */
size_t hr_trajectory_len(const struct HrTrajectory *traj);

/**
 * Time, `Ve` and output `y` (length `m`) of one frame.
 *
 * # Safety
 * `traj` must be a valid handle; `y` must point to `m` writable doubles.
 */
enum HrStatus hr_trajectory_frame(const struct HrTrajectory *traj,
                                  size_t frame,
                                  double *t,
                                  double *ve,
                                  double *y,
                                  size_t m);

/**
 * Gain of the heated bar on `intervals` grid intervals (a multiple of 20).
 *
 * # Safety
 * `out` must be writable.
 */
enum HrStatus hr_heat_gain(size_t intervals, struct HrHeatGain *out);

/**
 * Forwarding design for row-major `A` (`n×n`), `B` (`n×m`), `C` (`m×n`), checked at `fraction · ki*`.
 *
 * # Safety
 * Matrix pointers must hold the stated number of doubles; `out` must be writable.
 */
enum HrStatus hr_forwarding_check(const double *a,
                                  const double *b,
                                  const double *c,
                                  size_t n,
                                  size_t m,
                                  double fraction,
                                  struct HrForwardingCheck *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERREG_H */
