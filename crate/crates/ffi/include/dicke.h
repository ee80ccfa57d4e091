#ifndef DICKE_H
#define DICKE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum DickeStatus {
  DICKE_STATUS_OK = 0,
  DICKE_STATUS_NULL_POINTER = 1,
  DICKE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Eigensolver, integration or truncation failure.
   */
  DICKE_STATUS_NUMERICAL = 3,
  /**
   * The initial condition is not on the requested energy shell.
   */
  DICKE_STATUS_OFF_SHELL = 4,
  /**
   * Output buffer too small; the required length is reported.
   */
  DICKE_STATUS_BUFFER_TOO_SMALL = 5,
  DICKE_STATUS_IO = 6,
  DICKE_STATUS_PANIC = 7,
} DickeStatus;

/**
 * Eigenvalues of one truncation, with eigenvectors inside the window.
 */
typedef struct DickeEigen DickeEigen;

/**
 * Model parameters (ω, ω₀, γ, J).
 */
typedef struct DickeModel DickeModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the last error message on this thread into `buf`. Returns the
 * full message length in bytes (without the terminator); 0 when there is
 * none. The copy is truncated and always nul-terminated when `len > 0`.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dicke_last_error(char *buf, size_t len);

/**
 * Library version as a static nul-terminated string.
 */
const char *dicke_version(void);

/**
 * # Safety
 * `model` must be a valid pointer to writable storage for a handle.
 */
enum DickeStatus dicke_model_new(double omega,
                                 double omega0,
                                 double gamma,
                                 double j,
                                 struct DickeModel **model);

/**
 * # Safety
 * `model` must be null or a handle from [`dicke_model_new`] not yet freed.
 */
void dicke_model_free(struct DickeModel *model);

/**
 * γ_cr = √(ωω₀)/2.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DickeStatus dicke_critical_coupling(const struct DickeModel *model, double *value);

/**
 * Minimum of the classical energy surface.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DickeStatus dicke_classical_ground_energy(const struct DickeModel *model, double *value);

/**
 * Classical energy at (q, p, jz, φ).
 *
 * # Safety
 * Pointers must be valid.
 */
enum DickeStatus dicke_classical_energy(const struct DickeModel *model,
                                        double q,
                                        double p,
                                        double jz,
                                        double phi,
                                        double *value);

/**
 * Diagonalize the positive-parity block truncated at `n_max` photons.
 * With `windowed != 0` all eigenvalues are computed and eigenvectors are
 * kept for `e_lo_over_j <= E/J <= e_hi_over_j`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DickeStatus dicke_eigen_compute(const struct DickeModel *model,
                                     uint32_t n_max,
                                     int32_t windowed,
                                     double e_lo_over_j,
                                     double e_hi_over_j,
                                     struct DickeEigen **eigen);

/**
 * # Safety
 * `eigen` must be null or a live handle.
 */
void dicke_eigen_free(struct DickeEigen *eigen);

/**
 * Basis dimension and number of eigenvalues (equal), plus the number of
 * stored eigenvectors.
 *
 * # Safety
 * Pointers must be valid; either output may be null.
 */
enum DickeStatus dicke_eigen_size(const struct DickeEigen *eigen, size_t *dim, size_t *num_vectors);

/**
 * Copy all eigenvalues (ascending) into `buf`. `written` receives the
 * number required; `BufferTooSmall` leaves `buf` untouched.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum DickeStatus dicke_eigen_energies(const struct DickeEigen *eigen,
                                      double *buf,
                                      size_t len,
                                      size_t *written);

/**
 * Survival probability of the coherent state centred at (φ, jz/J) on the
 * surface p = 0, q = q₊ at energy `e_over_j`·J. `times` must be strictly
 * increasing. `pr` (may be null) receives the participation ratio.
 *
 * # Safety
 * `times` and `sp` must hold `n` doubles.
 */
enum DickeStatus dicke_survival_probability(const struct DickeEigen *eigen,
                                            double e_over_j,
                                            double phi,
                                            double jz_tilde,
                                            const double *times,
                                            size_t n,
                                            double *sp,
                                            double *pr);

/**
 * Maximal Lyapunov exponent (two-trajectory renormalization) of the
 * orbit through (φ, jz/J) on the surface at `e_over_j`·J.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DickeStatus dicke_lyapunov(const struct DickeModel *model,
                                double e_over_j,
                                double phi,
                                double jz_tilde,
                                double t_total,
                                double *lambda);

/**
 * Jacobi theta function Θ₃(x, y) = 1 + 2 Σ y^(p²) cos(2px), 0 ≤ y < 1.
 *
 * # Safety
 * `value` must be valid.
 */
enum DickeStatus dicke_theta3(double x, double y, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DICKE_H */
