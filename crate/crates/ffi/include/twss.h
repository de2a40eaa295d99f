/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef TWSS_H
#define TWSS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum TwssStatus {
  TWSS_STATUS_OK = 0,
  TWSS_STATUS_INVALID_ARGUMENT = 1,
  TWSS_STATUS_NULL_POINTER = 2,
  TWSS_STATUS_CONFIG_ERROR = 3,
  TWSS_STATUS_FACTORIZATION_ERROR = 4,
  TWSS_STATUS_SOLVE_ERROR = 5,
  TWSS_STATUS_ILL_POSED = 6,
  TWSS_STATUS_BUFFER_TOO_SMALL = 7,
  TWSS_STATUS_PANIC = 8,
} TwssStatus;

// Result of one solve.
typedef struct TwssSolution TwssSolution;

// A factorized scatterer, reusable for any number of incident waves.
typedef struct TwssSolver TwssSolver;

// Complex number with the layout of C99 `double _Complex`.
typedef struct TwssComplex {
  double re;
  double im;
} TwssComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse a TOML run configuration (the format read by the `twss` binary) and
// factorize the scatterer it describes. Only the `wave`, `medium`, `tree`,
// `leaf` and `projector` sections matter here.
//
// # Safety
// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
enum TwssStatus twss_solver_new(const char *config_toml, struct TwssSolver **out);

// Release a solver. Null is ignored.
//
// # Safety
// `solver` must come from [`twss_solver_new`] and not be used afterwards.
void twss_solver_free(struct TwssSolver *solver);

// Number of nodes on the outer boundary, the length of every trace.
//
// # Safety
// `solver` must be a live handle or null.
enum TwssStatus twss_solver_boundary_len(const struct TwssSolver *solver, size_t *out);

// Dimension of the solution space at the root.
//
// # Safety
// `solver` must be a live handle or null.
enum TwssStatus twss_solver_root_rank(const struct TwssSolver *solver, size_t *out);

// Boundary nodes and outward normals, each array of length `len`.
//
// # Safety
// Buffers must hold `len` doubles.
enum TwssStatus twss_solver_boundary_nodes(const struct TwssSolver *solver,
                                           double *x,
                                           double *y,
                                           double *nx,
                                           double *ny,
                                           size_t len);

// Scatter the plane wave `amplitude · exp(ik (cos θ, sin θ)·x)`.
//
// # Safety
// `solver` must be a live handle and `out` a valid pointer.
enum TwssStatus twss_solve_plane(const struct TwssSolver *solver,
                                 double direction,
                                 struct TwssComplex amplitude,
                                 struct TwssSolution **out);

// Scatter the field of a point source at `(sx, sy)` outside the scatterer.
//
// # Safety
// `solver` must be a live handle and `out` a valid pointer.
enum TwssStatus twss_solve_monopole(const struct TwssSolver *solver,
                                    double sx,
                                    double sy,
                                    struct TwssComplex amplitude,
                                    struct TwssSolution **out);

// Release a solution. Null is ignored.
//
// # Safety
// `solution` must come from a solve call and not be used afterwards.
void twss_solution_free(struct TwssSolution *solution);

// Relative residual of the incident-data fit.
//
// # Safety
// `solution` must be a live handle or null.
enum TwssStatus twss_solution_residual(const struct TwssSolution *solution, double *out);

// Copy the scattered Dirichlet and outward Neumann traces. Either buffer may
// be null to skip it.
//
// # Safety
// Non-null buffers must hold `len` entries.
enum TwssStatus twss_solution_scattered_trace(const struct TwssSolution *solution,
                                              struct TwssComplex *dirichlet,
                                              struct TwssComplex *neumann,
                                              size_t len);

// Scattered field at `n` points outside the scatterer support.
//
// # Safety
// `solver` must be the handle that produced `solution`; arrays hold `n` entries.
enum TwssStatus twss_solution_eval_exterior(const struct TwssSolver *solver,
                                            const struct TwssSolution *solution,
                                            const double *xs,
                                            const double *ys,
                                            size_t n,
                                            struct TwssComplex *out);

// Total field at `n` points inside the scatterer support.
//
// # Safety
// `solver` must be the handle that produced `solution`; arrays hold `n` entries.
enum TwssStatus twss_solution_eval_interior(const struct TwssSolver *solver,
                                            const struct TwssSolution *solution,
                                            const double *xs,
                                            const double *ys,
                                            size_t n,
                                            struct TwssComplex *out);

// Copy the message of the last failed call on this thread into `buf`,
// truncated and NUL-terminated. Returns the full message length without the
// terminator, so a zero-length call sizes the buffer.
//
// # Safety
// `buf` must hold `len` bytes, or be null with `len == 0`.
size_t twss_last_error_message(char *buf, size_t len);

// Static description of a status code.
const char *twss_status_string(enum TwssStatus status);

// Library version as a static NUL-terminated string.
const char *twss_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWSS_H */
