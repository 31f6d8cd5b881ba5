#ifndef FOLIATION_LAB_H
#define FOLIATION_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_NULL_POINTER = 1,
  FL_STATUS_INVALID_ARGUMENT = 2,
  FL_STATUS_OUTSIDE_CHART = 3,
  FL_STATUS_BRANCH_OVERFLOW = 4,
  FL_STATUS_CRITICAL_LEAF = 5,
  FL_STATUS_SINGULAR_DENOMINATOR = 6,
  FL_STATUS_LIFT_INCOMPLETE = 7,
  FL_STATUS_CONTOUR_THROUGH_ZERO = 8,
  FL_STATUS_NO_CONVERGENCE = 9,
  FL_STATUS_EMPTY_RESULT = 10,
  FL_STATUS_INDEX_OUT_OF_RANGE = 11,
  FL_STATUS_INTERNAL = 12,
  FL_STATUS_PANIC = 13,
} FlStatus;

// How a continuation march ended.
typedef enum FlTerminal {
  FL_TERMINAL_REACHED_TARGET = 0,
  FL_TERMINAL_ESCAPE_CONFIRMED = 1,
  FL_TERMINAL_STEP_UNDERFLOW = 2,
  FL_TERMINAL_BRANCH_COLLISION = 3,
  FL_TERMINAL_INTEGRATION_FAILURE = 4,
} FlTerminal;

// Integrator settings. Create with [`fl_options_new`].
typedef struct FlOptions FlOptions;

// Certified periodic orbits returned by [`fl_find_orbits`].
typedef struct FlOrbitSet FlOrbitSet;

// A continuation trace returned by [`fl_continue`].
typedef struct FlTrace FlTrace;

typedef struct FlComplex {
  double re;
  double im;
} FlComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays valid until
// the next call into this library from the same thread.
const char *fl_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *fl_version(void);

// Default integrator options. Release with [`fl_options_free`].
struct FlOptions *fl_options_new(void);

// # Safety
// `opts` must come from [`fl_options_new`] and not be freed already, or be null.
void fl_options_free(struct FlOptions *opts);

// # Safety
// `opts` must be a live handle from [`fl_options_new`].
enum FlStatus fl_options_set_tolerances(struct FlOptions *opts,
                                        double rel_tol,
                                        double abs_tol,
                                        size_t max_steps);

// Set the guard annulus `rho < |h| < r_outer` outside which lifts are abandoned.
//
// # Safety
// `opts` must be a live handle from [`fl_options_new`].
enum FlStatus fl_options_set_guard(struct FlOptions *opts, double rho, double r_outer);

// `P^k(u)` and its derivative. `opts` may be null for the defaults.
//
// # Safety
// `out_value` and `out_derivative` must be valid for writes; `opts` must be null or live.
enum FlStatus fl_poincare(struct FlComplex a,
                          struct FlComplex eps,
                          struct FlComplex u,
                          size_t k,
                          const struct FlOptions *opts,
                          struct FlComplex *out_value,
                          struct FlComplex *out_derivative);

// Resonant Melnikov integral by quadrature with `n_points` nodes, and its closed form.
//
// # Safety
// `out_quadrature` and `out_closed_form` must be valid for writes.
enum FlStatus fl_melnikov(size_t m,
                          struct FlComplex u,
                          size_t n_points,
                          struct FlComplex *out_quadrature,
                          struct FlComplex *out_closed_form);

// Coefficient of `a u^(m+1)` in `P^m(u) - u` at `eps = i/m`.
//
// # Safety
// `out` must be valid for writes.
enum FlStatus fl_map_resonant_coefficient(size_t m, struct FlComplex *out);

// Abelian integral of the perturbation over the real oval `H = h`.
//
// # Safety
// `out` must be valid for writes.
enum FlStatus fl_pontryagin(struct FlComplex a, double h, size_t n_points, struct FlComplex *out);

// Number of m-periodic points inside `|u - center| < radius`.
//
// # Safety
// `out_count` must be valid for writes; `opts` must be null or live.
enum FlStatus fl_winding_count(struct FlComplex a,
                               struct FlComplex eps,
                               size_t m,
                               struct FlComplex center,
                               double radius,
                               size_t n_samples,
                               const struct FlOptions *opts,
                               int64_t *out_count);

// Certified m-periodic orbits. On success `*out_set` receives a handle to release with
// [`fl_orbit_set_free`]; on `FL_STATUS_EMPTY_RESULT` it is set to null.
//
// # Safety
// `out_set` must be valid for writes; `opts` must be null or live.
enum FlStatus fl_find_orbits(struct FlComplex a,
                             struct FlComplex eps,
                             size_t m,
                             const struct FlOptions *opts,
                             struct FlOrbitSet **out_set);

// # Safety
// `set` must come from [`fl_find_orbits`] and not be freed already, or be null.
void fl_orbit_set_free(struct FlOrbitSet *set);

// Number of orbits in the set, 0 for null.
//
// # Safety
// `set` must be null or live.
size_t fl_orbit_set_len(const struct FlOrbitSet *set);

// Copy the points `u_1..u_m` of orbit `index` into `out_points` (capacity `capacity`);
// `*out_len` receives `m` even when the buffer is too small.
//
// # Safety
// `set` must be live; `out_points` must hold `capacity` elements; `out_len` must be valid
// for writes.
enum FlStatus fl_orbit_set_points(const struct FlOrbitSet *set,
                                  size_t index,
                                  struct FlComplex *out_points,
                                  size_t capacity,
                                  size_t *out_len);

// Residual `|P^m(u_1) - u_1|`, multiplier `d(P^m)/du` and separation of orbit `index`.
//
// # Safety
// `set` must be live; every output pointer must be valid for writes.
enum FlStatus fl_orbit_set_diagnostics(const struct FlOrbitSet *set,
                                       size_t index,
                                       double *out_residual,
                                       struct FlComplex *out_multiplier,
                                       double *out_separation);

// Continue orbit `index` of `set` along the polyline `path` (starting at the orbit's
// `eps`), judging escape against `rho < |h| < r_outer`. On success `*out_trace` receives a
// handle to release with [`fl_trace_free`].
//
// # Safety
// `set` must be live; `path` must hold `n_vertices` elements; `out_trace` must be valid
// for writes; `opts` must be null or live.
enum FlStatus fl_continue(const struct FlOrbitSet *set,
                          size_t index,
                          const struct FlComplex *path,
                          size_t n_vertices,
                          double rho,
                          double r_outer,
                          const struct FlOptions *opts,
                          struct FlTrace **out_trace);

// # Safety
// `trace` must come from [`fl_continue`] and not be freed already, or be null.
void fl_trace_free(struct FlTrace *trace);

// Number of accepted samples, 0 for null.
//
// # Safety
// `trace` must be null or live.
size_t fl_trace_len(const struct FlTrace *trace);

// `eps`, base point `u_1` and loop containment in `A0` of sample `index`.
//
// # Safety
// `trace` must be live; every output pointer must be valid for writes.
enum FlStatus fl_trace_sample(const struct FlTrace *trace,
                              size_t index,
                              struct FlComplex *out_eps,
                              struct FlComplex *out_base_point,
                              bool *out_loop_in_a0);

// How the march ended; `ReachedTarget` for null.
//
// # Safety
// `trace` must be null or live.
enum FlTerminal fl_trace_terminal(const struct FlTrace *trace);

// The `eps` at which the loop leaves `A0` for good, or `FL_STATUS_EMPTY_RESULT`.
//
// # Safety
// `trace` must be live; `out` must be valid for writes.
enum FlStatus fl_trace_escape_eps(const struct FlTrace *trace, struct FlComplex *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOLIATION_LAB_H */
