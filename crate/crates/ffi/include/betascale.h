#ifndef BETASCALE_H
#define BETASCALE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code returned by every fallible entry point.
 */
typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_ARGUMENT = 2,
  BS_STATUS_DOMAIN = 3,
  BS_STATUS_REFUSED = 4,
  BS_STATUS_GENERATION_FAILURE = 5,
  BS_STATUS_INSUFFICIENT_SAMPLES = 6,
  BS_STATUS_CONSISTENCY = 7,
  BS_STATUS_IO = 8,
  BS_STATUS_PANIC = 9,
} BsStatus;

/**
 * Opaque exact density of states.
 */
typedef struct BsDos BsDos;

/**
 * Opaque problem instance.
 */
typedef struct BsInstance BsInstance;

/**
 * Opaque parallel-tempering sample series.
 */
typedef struct BsSeries BsSeries;

/**
 * Exact thermodynamics at one inverse temperature.
 */
typedef struct BsThermo {
  double beta;
  double log_z;
  double mean_e;
  double c_beta;
  double sigma_h;
  double p_le_target;
} BsThermo;

typedef struct BsSchedule {
  uint64_t warmup_swaps;
  uint64_t sweeps_per_swap;
  uint64_t sample_stride_swaps;
  uint64_t n_samples;
  uint64_t seed;
} BsSchedule;

typedef struct BsBetaOfP0 {
  double beta_exact;
  double beta_expansion;
} BsBetaOfP0;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bs_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string produced by this library and not yet freed.
 */
void bs_string_free(char *s);

/**
 * Planted frustrated-loop instance on a `rows x cols` Chimera graph with
 * default loop parameters.
 *
 * # Safety
 * `out_instance` must be a valid pointer.
 */
enum BsStatus bs_instance_planted(size_t rows,
                                  size_t cols,
                                  uint64_t seed,
                                  struct BsInstance **out_instance);

/**
 * Bimodal ±1 couplings on a `rows x cols` Chimera graph.
 *
 * # Safety
 * `out_instance` must be a valid pointer.
 */
enum BsStatus bs_instance_bimodal(size_t rows,
                                  size_t cols,
                                  uint64_t seed,
                                  struct BsInstance **out_instance);

/**
 * 3-regular 3-XORSAT instance with `n_spins` variables.
 *
 * # Safety
 * `out_instance` must be a valid pointer.
 */
enum BsStatus bs_instance_xorsat3(size_t n_spins, uint64_t seed, struct BsInstance **out_instance);

/**
 * Parses an instance from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_instance` a valid pointer.
 */
enum BsStatus bs_instance_from_json(const char *json, struct BsInstance **out_instance);

/**
 * Serializes an instance to JSON; free the result with [`bs_string_free`].
 *
 * # Safety
 * `instance` must be a live handle; `out_json` a valid pointer.
 */
enum BsStatus bs_instance_to_json(const struct BsInstance *instance, char **out_json);

/**
 * Hex content hash of an instance; free the result with [`bs_string_free`].
 *
 * # Safety
 * `instance` must be a live handle; `out_hash` a valid pointer.
 */
enum BsStatus bs_instance_hash(const struct BsInstance *instance, char **out_hash);

/**
 * Number of spins, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or a live handle.
 */
size_t bs_instance_n_spins(const struct BsInstance *instance);

/**
 * Ground energy known by construction. Writes 1 to `out_known` and the
 * energy to `out_e0` when available, 0 otherwise.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BsStatus bs_instance_known_e0(const struct BsInstance *instance,
                                   int32_t *out_known,
                                   double *out_e0);

/**
 * Energy of a configuration given as `n` spins with values ±1.
 *
 * # Safety
 * `spins` must point to `n` readable bytes; other pointers must be valid.
 */
enum BsStatus bs_instance_energy(const struct BsInstance *instance,
                                 const int8_t *spins,
                                 size_t n,
                                 double *out_energy);

/**
 * # Safety
 * `instance` must be null or a handle not yet freed.
 */
void bs_instance_free(struct BsInstance *instance);

/**
 * Exact density of states by exhaustive enumeration.
 *
 * # Safety
 * `instance` must be a live handle; `out_dos` a valid pointer.
 */
enum BsStatus bs_dos_enumerate(const struct BsInstance *instance, struct BsDos **out_dos);

/**
 * Number of distinct energy levels, or 0 for a null handle.
 *
 * # Safety
 * `dos` must be null or a live handle.
 */
size_t bs_dos_n_levels(const struct BsDos *dos);

/**
 * Copies level energies and degeneracies (ascending energy) into caller
 * buffers of length `len`, which must be at least the level count.
 *
 * # Safety
 * `energies` and `counts` must point to `len` writable elements.
 */
enum BsStatus bs_dos_levels(const struct BsDos *dos,
                            double *energies,
                            uint64_t *counts,
                            size_t len);

/**
 * Exact thermodynamics at `beta` with target energy `target_e`.
 *
 * # Safety
 * `dos` must be a live handle; `out_thermo` a valid pointer.
 */
enum BsStatus bs_dos_thermo(const struct BsDos *dos,
                            double beta,
                            double target_e,
                            struct BsThermo *out_thermo);

/**
 * Smallest β with `P(E <= target_e) >= q`.
 *
 * # Safety
 * `dos` must be a live handle; `out_beta` a valid pointer.
 */
enum BsStatus bs_dos_beta_star(const struct BsDos *dos,
                               double target_e,
                               double q,
                               double *out_beta);

/**
 * # Safety
 * `dos` must be null or a handle not yet freed.
 */
void bs_dos_free(struct BsDos *dos);

/**
 * Parallel tempering on a geometric ladder of `n_rungs` inverse
 * temperatures between `beta_min` and `beta_max`.
 *
 * # Safety
 * `instance` must be a live handle; other pointers must be valid.
 */
enum BsStatus bs_pt_run(const struct BsInstance *instance,
                        double beta_min,
                        double beta_max,
                        size_t n_rungs,
                        const struct BsSchedule *schedule,
                        struct BsSeries **out_series);

/**
 * # Safety
 * `series` must be null or a live handle.
 */
size_t bs_series_n_rungs(const struct BsSeries *series);

/**
 * # Safety
 * `series` must be null or a live handle.
 */
size_t bs_series_n_samples(const struct BsSeries *series);

/**
 * Inverse temperature of rung `rung` (ascending order).
 *
 * # Safety
 * `series` must be a live handle; `out_beta` a valid pointer.
 */
enum BsStatus bs_series_beta(const struct BsSeries *series, size_t rung, double *out_beta);

/**
 * Copies the energy samples of one rung into `buf` of length `len`.
 *
 * # Safety
 * `series` must be a live handle; `buf` must point to `len` writable values.
 */
enum BsStatus bs_series_energies(const struct BsSeries *series,
                                 size_t rung,
                                 double *buf,
                                 size_t len);

/**
 * # Safety
 * `series` must be null or a handle not yet freed.
 */
void bs_series_free(struct BsSeries *series);

/**
 * Inverse temperature at which `n` independent spins reach ground-state
 * probability `p0`.
 *
 * # Safety
 * `out_beta` must be a valid pointer.
 */
enum BsStatus bs_indep_spins_beta_of_p0(size_t n, double p0, struct BsBetaOfP0 *out_beta);

/**
 * Inverse temperature at which the Grover model on `n` spins reaches
 * ground-state probability `p0`.
 *
 * # Safety
 * `out_beta` must be a valid pointer.
 */
enum BsStatus bs_grover_beta_of_p0(size_t n, double p0, struct BsBetaOfP0 *out_beta);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len - 1` bytes) and returns the full message
 * length, or 0 when there is no pending error.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
size_t bs_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BETASCALE_H */
