#ifndef IMEX_RRK_H
#define IMEX_RRK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// `0` Allen-Cahn, `1` Cahn-Hilliard.
#define IMEX_RRK_ALLEN_CAHN 0

#define IMEX_RRK_CAHN_HILLIARD 1

// `0` double-well, `1` three-phase multi-well.
#define IMEX_RRK_DOUBLE_WELL 0

#define IMEX_RRK_MULTI_WELL 1

// `0` standard, `1` IDT, `2` RT.
#define IMEX_RRK_MODE_STANDARD 0

#define IMEX_RRK_MODE_IDT 1

#define IMEX_RRK_MODE_RT 2

// Result codes.
typedef enum ImexRrkStatus {
  IMEX_RRK_STATUS_OK = 0,
  IMEX_RRK_STATUS_NULL_POINTER = 1,
  IMEX_RRK_STATUS_INVALID_ARGUMENT = 2,
  IMEX_RRK_STATUS_UNKNOWN_TABLEAU = 3,
  IMEX_RRK_STATUS_INVALID_TABLEAU = 4,
  IMEX_RRK_STATUS_INVALID_MODEL = 5,
  IMEX_RRK_STATUS_SINGULAR_SOLVE = 6,
  IMEX_RRK_STATUS_SAV_DEGENERATE = 7,
  IMEX_RRK_STATUS_NON_POSITIVE_RELAXATION = 8,
  IMEX_RRK_STATUS_ENERGY_INCREASE = 9,
  IMEX_RRK_STATUS_PANIC = 10,
  IMEX_RRK_STATUS_INTERNAL = 11,
} ImexRrkStatus;

// Solution `(u, r, t)`.
typedef struct ImexRrkState ImexRrkState;

// Model, grid and tableau with solver workspace.
typedef struct ImexRrkStepper ImexRrkStepper;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *imex_rrk_version(void);

// Message of the last failure on this thread. Valid until the next failing
// call on the same thread.
const char *imex_rrk_last_error(void);

// Creates a stepper for an operator/potential on an `nx` x `ny` periodic
// box `[0, lx) x [0, ly)` with a builtin tableau.
//
// # Safety
// `tableau` must be a NUL-terminated string and `out` a valid pointer.
enum ImexRrkStatus imex_rrk_stepper_new(uint32_t operator_,
                                        uint32_t potential,
                                        size_t components,
                                        double epsilon,
                                        double c0,
                                        size_t nx,
                                        size_t ny,
                                        double lx,
                                        double ly,
                                        const char *tableau,
                                        struct ImexRrkStepper **out);

// # Safety
// `stepper` must come from [`imex_rrk_stepper_new`] or be null.
void imex_rrk_stepper_free(struct ImexRrkStepper *stepper);

// Number of doubles in a field buffer for this stepper.
//
// # Safety
// `stepper` must be valid; `out` must be a valid pointer.
enum ImexRrkStatus imex_rrk_stepper_field_len(const struct ImexRrkStepper *stepper, size_t *out);

// Creates a state at `t = 0` with `r` consistent with `values`.
//
// # Safety
// `values` must point to `len` doubles; `stepper` and `out` must be valid.
enum ImexRrkStatus imex_rrk_state_new(const struct ImexRrkStepper *stepper,
                                      const double *values,
                                      size_t len,
                                      struct ImexRrkState **out);

// # Safety
// `state` must come from [`imex_rrk_state_new`] or be null.
void imex_rrk_state_free(struct ImexRrkState *state);

// Copies `u` into `values` (same layout as [`imex_rrk_state_new`]).
//
// # Safety
// `values` must point to `len` writable doubles.
enum ImexRrkStatus imex_rrk_state_values(const struct ImexRrkState *state,
                                         double *values,
                                         size_t len);

// Reads `t` and `r`. Either output may be null.
//
// # Safety
// `state` must be valid; non-null outputs must be writable.
enum ImexRrkStatus imex_rrk_state_scalars(const struct ImexRrkState *state, double *t, double *r);

// Modified energy `(eps^2/2)|grad u|^2 + r^2 - C0` of a state.
//
// # Safety
// All pointers must be valid.
enum ImexRrkStatus imex_rrk_modified_energy(struct ImexRrkStepper *stepper,
                                            const struct ImexRrkState *state,
                                            double *out);

// Advances `state` in place by one step. `gamma` may be null. On failure
// the state is unchanged.
//
// # Safety
// All non-null pointers must be valid.
enum ImexRrkStatus imex_rrk_step(struct ImexRrkStepper *stepper,
                                 struct ImexRrkState *state,
                                 double tau,
                                 uint32_t mode,
                                 double *gamma);

// Integrates `state` in place to `t_final` with nominal step `tau`.
// `steps` (may be null) receives the number of steps taken.
//
// # Safety
// All non-null pointers must be valid.
enum ImexRrkStatus imex_rrk_integrate(struct ImexRrkStepper *stepper,
                                      struct ImexRrkState *state,
                                      double t_final,
                                      double tau,
                                      uint32_t mode,
                                      size_t *steps);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMEX_RRK_H */
