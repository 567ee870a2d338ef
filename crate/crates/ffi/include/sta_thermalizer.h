/* C interface to the sta-thermalizer control-schedule library. */

#ifndef STA_THERMALIZER_H
#define STA_THERMALIZER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes; mirrors the CLI exit codes for the fallible classes.
typedef enum StaStatus {
  // Success.
  STA_STATUS_OK = 0,
  // A required pointer was null.
  STA_STATUS_NULL_POINTER = 1,
  // Parameters outside the mathematical domain or a violated precondition.
  STA_STATUS_DOMAIN = 2,
  // The computation failed numerically.
  STA_STATUS_NUMERICAL = 3,
} StaStatus;

// Opaque synthesized control schedule.
typedef struct StaSchedule StaSchedule;

// Control values sampled at one time of a schedule.
typedef struct StaControlSample {
  // Squared trap frequency (may be negative during trap inversion).
  double omega_sq;
  // Dephasing strength.
  double gamma;
  // Kernel coefficient A.
  double a;
  // Kernel coefficient C.
  double c;
  // Effective frequency; the exact trajectory carries B = omega_eff / 2.
  double omega_eff;
  // Scaling factor relative to the initial normalization.
  double eta;
} StaControlSample;

// Endpoint of a propagation run: final kernel coefficients and the
// worst-coefficient deviation from the target thermal state.
typedef struct StaFinalState {
  double a;
  double b;
  double c;
  double deviation;
} StaFinalState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Synthesize a control schedule between two thermal states.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
// On success it receives an owned handle that must be released with
// [`sta_schedule_free`]; on failure it is set to null.
enum StaStatus sta_schedule_create(double omega0,
                                   double beta0,
                                   double omegaf,
                                   double betaf,
                                   double tf,
                                   uintptr_t n_steps,
                                   struct StaSchedule **out);

// Release a schedule handle. Null is accepted and ignored.
//
// # Safety
// `handle` must be null or a pointer previously returned by
// [`sta_schedule_create`] that has not yet been freed.
void sta_schedule_free(struct StaSchedule *handle);

// Protocol duration of a schedule; NaN for a null handle.
//
// # Safety
// `handle` must be null or a live schedule handle.
double sta_schedule_duration(const struct StaSchedule *handle);

// Whether the schedule needs `gamma_t < 0` somewhere (1), or is
// realizable by the stochastic schemes (0); -1 for a null handle.
//
// # Safety
// `handle` must be null or a live schedule handle.
int32_t sta_schedule_non_markovian(const struct StaSchedule *handle);

// Sample the control fields of a schedule at time `t` in `[0, tf]`.
//
// # Safety
// `handle` must be a live schedule handle; `out` must point to
// writable storage for one [`StaControlSample`].
enum StaStatus sta_schedule_sample(const struct StaSchedule *handle,
                                   double t,
                                   struct StaControlSample *out);

// Location and signed value of the extremal dephasing strength.
// `degenerate` receives 1 when the dephasing vanishes identically.
//
// # Safety
// `handle` must be a live schedule handle; `t_max`, `gamma_max`, and
// `degenerate` must be valid writable pointers.
enum StaStatus sta_schedule_gamma_max(const struct StaSchedule *handle,
                                      double *t_max,
                                      double *gamma_max,
                                      int32_t *degenerate);

// Integrate the consistency dynamics along the schedule from its
// initial thermal state and report the final coefficients together
// with the worst-coefficient deviation from the target.
// `n_steps == 0` selects the default resolution.
//
// # Safety
// `handle` must be a live schedule handle; `out` must point to
// writable storage for one [`StaFinalState`].
enum StaStatus sta_schedule_propagate(const struct StaSchedule *handle,
                                      uintptr_t n_steps,
                                      struct StaFinalState *out);

// Kernel coefficients of the thermal state at `(omega, beta)`.
//
// # Safety
// `a`, `b`, and `c` must be valid writable pointers.
enum StaStatus sta_thermal_coeffs(double omega, double beta, double *a, double *b, double *c);

// Von Neumann entropy of the Gaussian state with kernel coefficients
// `(a, b, c)`.
//
// # Safety
// `entropy` must be a valid writable pointer.
enum StaStatus sta_state_entropy(double a, double b, double c, double *entropy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STA_THERMALIZER_H */
