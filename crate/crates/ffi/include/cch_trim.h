#ifndef CCH_TRIM_H
#define CCH_TRIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CCH_OK 0

#define CCH_ERR_NULL 1

#define CCH_ERR_ARGUMENT 2

#define CCH_ERR_CONFIG 3

#define CCH_ERR_NO_CONVERGENCE 4

#define CCH_ERR_MODEL 5

#define CCH_ERR_IO 6

#define CCH_ERR_PANIC 7

#define CCH_STRATEGY_BL 0

#define CCH_STRATEGY_STRIM 1

#define CCH_STRATEGY_MPTRIM 2

#define CCH_STRATEGY_HTRIM 3

// Number of entries written by `cch_solution_controls`.
#define CCH_CONTROL_COUNT 11

// One converged trim point.
typedef struct CchSolution CchSolution;

// A configured aircraft and solver.
typedef struct CchTrimmer CchTrimmer;

typedef struct CchTrimSummary {
  // m/s
  double speed;
  // W
  double power;
  // Upper plus lower rotor thrust, N.
  double rotor_load;
  // N
  double propeller_thrust;
  double lift_offset;
  double residual_norm;
  uint32_t iterations;
  // Nonzero when the lift-offset schedule could not be met.
  uint8_t lift_offset_saturated;
} CchTrimSummary;

typedef struct CchSearchResult {
  // deg
  double delta_e;
  // W
  double power;
  // %
  double til;
  // Power saved against STrim at the same speed, %.
  double reduction;
  uint32_t probes;
  // Nonzero when the optimum sits on the -15 deg end of the range.
  uint8_t at_domain_edge;
} CchSearchResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Solver for the built-in aircraft.
//
// # Safety
// `out` must be a valid pointer to writable storage for one pointer.
int32_t cch_trimmer_new_default(struct CchTrimmer **out);

// Solver for an aircraft given as TOML text.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` writable.
int32_t cch_trimmer_new_from_toml(const char *toml, struct CchTrimmer **out);

// Solver for an aircraft read from a TOML file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
int32_t cch_trimmer_new_from_file(const char *path, struct CchTrimmer **out);

// # Safety
// `trimmer` must come from a `cch_trimmer_new_*` call and not be used again.
// Null is ignored.
void cch_trimmer_free(struct CchTrimmer *trimmer);

// Trim one point from a cold start. `delta_e` is used by MPTrim and HTrim
// only.
//
// # Safety
// `trimmer` must be live and `out` writable.
int32_t cch_trim(const struct CchTrimmer *trimmer,
                 double speed,
                 int32_t strategy_code,
                 double delta_e,
                 struct CchSolution **out);

// # Safety
// `solution` must come from `cch_trim` and not be used again. Null is ignored.
void cch_solution_free(struct CchSolution *solution);

// # Safety
// `solution` must be live and `out` writable.
int32_t cch_solution_summary(const struct CchSolution *solution, struct CchTrimSummary *out);

// Writes the controls and attitudes in degrees, in the order
// θ0, Δθ0, θ1c, Δθ1c, θ1s, Δθ1s, θprop, δe, δr, pitch, roll.
//
// # Safety
// `values` must point to at least `len` writable doubles.
int32_t cch_solution_controls(const struct CchSolution *solution, double *values, size_t len);

// Elevator allocation at one speed: STrim reference, then the staged
// descent with the given TIL ceiling (percent, `INFINITY` for none).
//
// # Safety
// `trimmer` must be live and `out` writable.
int32_t cch_elevator_search(const struct CchTrimmer *trimmer,
                            double speed,
                            double til_cap,
                            struct CchSearchResult *out);

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *cch_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cch_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CCH_TRIM_H */
