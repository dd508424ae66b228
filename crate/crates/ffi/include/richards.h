/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef RICHARDS_H
#define RICHARDS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RichardsStatus {
  RICHARDS_STATUS_OK = 0,
  RICHARDS_STATUS_NULL_POINTER = 1,
  /**
   * Malformed or inconsistent input (configuration, parameters, geometry).
   */
  RICHARDS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A value outside the domain of a function.
   */
  RICHARDS_STATUS_DOMAIN = 3,
  RICHARDS_STATUS_NON_CONVERGENCE = 4,
  RICHARDS_STATUS_IO = 5,
  RICHARDS_STATUS_BUFFER_TOO_SMALL = 6,
  RICHARDS_STATUS_PANIC = 7,
} RichardsStatus;

/**
 * Soil hydraulics: retention curve, relative permeability and Kirchhoff transform.
 */
typedef struct RichardsHydraulics RichardsHydraulics;

/**
 * A configured simulation together with its current state.
 */
typedef struct RichardsSimulation RichardsSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next failing call.
 */
const char *richards_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *richards_version(void);

/**
 * Brooks–Corey soil. `p_b < 0` [Pa]; `paper_normalized != 0` selects `ρg = g`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RichardsStatus richards_hydraulics_new_brooks_corey(double k,
                                                         double mu,
                                                         double n,
                                                         double s_m,
                                                         double s_max,
                                                         double p_b,
                                                         double lambda,
                                                         int32_t paper_normalized,
                                                         struct RichardsHydraulics **out);

/**
 * van Genuchten soil with `alpha` in 1/Pa and `l > 1`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RichardsStatus richards_hydraulics_new_van_genuchten(double k,
                                                          double mu,
                                                          double n,
                                                          double s_m,
                                                          double s_max,
                                                          double alpha,
                                                          double l,
                                                          int32_t paper_normalized,
                                                          struct RichardsHydraulics **out);

/**
 * # Safety
 * `h` must come from a constructor of this library and not be used afterwards.
 */
void richards_hydraulics_free(struct RichardsHydraulics *h);

/**
 * Saturation at capillary pressure `p` [Pa].
 *
 * # Safety
 * Pointers must be valid.
 */
enum RichardsStatus richards_saturation(const struct RichardsHydraulics *h, double p, double *out);

/**
 * Relative permeability at saturation `s`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RichardsStatus richards_rel_perm(const struct RichardsHydraulics *h, double s, double *out);

/**
 * Generalized pressure `u` [m²/s] of capillary pressure `p` [Pa].
 *
 * # Safety
 * Pointers must be valid.
 */
enum RichardsStatus richards_kirchhoff(const struct RichardsHydraulics *h, double p, double *out);

/**
 * Capillary pressure [Pa] of generalized pressure `u`; fails at or below the minimal value.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RichardsStatus richards_inv_kirchhoff(const struct RichardsHydraulics *h,
                                           double u,
                                           double *out);

/**
 * Minimal generalized pressure; `-INFINITY` when unbounded.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RichardsStatus richards_u_min(const struct RichardsHydraulics *h, double *out);

/**
 * Simulation from a JSON configuration file, positioned at `t = 0`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RichardsStatus richards_simulation_new_from_file(const char *path,
                                                      struct RichardsSimulation **out);

/**
 * Simulation from JSON configuration text; relative file references resolve
 * against the working directory.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RichardsStatus richards_simulation_new_from_json(const char *json,
                                                      struct RichardsSimulation **out);

/**
 * # Safety
 * `sim` must come from a constructor of this library and not be used afterwards.
 */
void richards_simulation_free(struct RichardsSimulation *sim);

/**
 * Advances by one time step. On failure the state is left unchanged.
 *
 * # Safety
 * `sim` must be a valid handle.
 */
enum RichardsStatus richards_simulation_step(struct RichardsSimulation *sim);

/**
 * Number of time steps of the configured run, `⌈T/τ⌉`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RichardsStatus richards_simulation_num_steps(const struct RichardsSimulation *sim,
                                                  size_t *out);

/**
 * Current step index and time [s].
 *
 * # Safety
 * Pointers must be valid.
 */
enum RichardsStatus richards_simulation_time(const struct RichardsSimulation *sim,
                                             size_t *step,
                                             double *t);

/**
 * Number of mesh vertices and of surface cells.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RichardsStatus richards_simulation_sizes(const struct RichardsSimulation *sim,
                                              size_t *num_vertices,
                                              size_t *num_surface_cells);

/**
 * Vertex coordinates as interleaved `(x, z)` pairs; `len` counts doubles.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum RichardsStatus richards_simulation_vertices(const struct RichardsSimulation *sim,
                                                 double *buf,
                                                 size_t len);

/**
 * Generalized pressure at every vertex [m²/s].
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum RichardsStatus richards_simulation_generalized_pressure(const struct RichardsSimulation *sim,
                                                             double *buf,
                                                             size_t len);

/**
 * Capillary pressure at every vertex [Pa].
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum RichardsStatus richards_simulation_pressure(const struct RichardsSimulation *sim,
                                                 double *buf,
                                                 size_t len);

/**
 * Saturation at every vertex.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum RichardsStatus richards_simulation_saturation(const struct RichardsSimulation *sim,
                                                   double *buf,
                                                   size_t len);

/**
 * Surface water height on every surface cell [m], ordered by increasing x.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum RichardsStatus richards_simulation_surface_height(const struct RichardsSimulation *sim,
                                                       double *buf,
                                                       size_t len);

/**
 * Runs the whole configured simulation from `t = 0`, writing outputs to
 * `out_dir` (or nowhere if null). Leaves the handle at the final state.
 *
 * # Safety
 * `sim` must be a valid handle; `out_dir` null or a NUL-terminated string.
 */
enum RichardsStatus richards_simulation_run(struct RichardsSimulation *sim, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RICHARDS_H */
