#ifndef PODSIM_H
#define PODSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PodsimStatus {
  PODSIM_STATUS_OK = 0,
  PODSIM_STATUS_NULL_POINTER = 1,
  PODSIM_STATUS_INVALID_UTF8 = 2,
  PODSIM_STATUS_CONFIG = 3,
  PODSIM_STATUS_SIM_FAULT = 4,
  PODSIM_STATUS_PANIC = 5,
  PODSIM_STATUS_INVALID_ARGUMENT = 6,
} PodsimStatus;

/**
 * Values of [`PodsimChannels::grasp`].
 */
typedef enum PodsimGrasp {
  PODSIM_GRASP_OPEN = -1,
  PODSIM_GRASP_HOLD = 0,
  PODSIM_GRASP_CLOSE = 1,
} PodsimGrasp;

/**
 * Mission events accepted by [`podsim_sim_fire_event`].
 */
typedef enum PodsimEvent {
  PODSIM_EVENT_TAKEOFF = 0,
  PODSIM_EVENT_ABORT = 1,
} PodsimEvent;

/**
 * Opaque simulation handle.
 */
typedef struct PodsimSim PodsimSim;

typedef struct PodsimChannels {
  double thrust;
  double yaw;
  double pitch;
  double buoyancy;
  double winch;
  /**
   * One of the `PodsimGrasp` values.
   */
  int32_t grasp;
} PodsimChannels;

typedef struct PodsimTelemetry {
  double t_s;
  double x_m;
  double y_m;
  double depth_m;
  double roll_deg;
  double pitch_deg;
  double yaw_deg;
  double servo_u;
  double effective_volume_m3;
  double power_w;
  double closure;
  double tether_length_m;
  /**
   * Mission phase code; see [`podsim_phase_name`].
   */
  uint32_t phase;
} PodsimTelemetry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next podsim call on the same thread.
 */
const char *podsim_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *podsim_version(void);

/**
 * Static name of a phase code, or NULL for an unknown code.
 */
const char *podsim_phase_name(uint32_t code);

/**
 * Creates a simulation from a scenario JSON document.
 *
 * # Safety
 * `scenario_json` must be a valid NUL-terminated string and `out` a valid
 * pointer to writable storage for one handle.
 */
enum PodsimStatus podsim_sim_new(const char *scenario_json, struct PodsimSim **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `sim` must be NULL or a handle from [`podsim_sim_new`] not yet freed.
 */
void podsim_sim_free(struct PodsimSim *sim);

/**
 * Sets the six input channels used from the next step on.
 *
 * # Safety
 * `sim` must be a live handle and `channels` a valid pointer.
 */
enum PodsimStatus podsim_sim_set_channels(struct PodsimSim *sim,
                                          const struct PodsimChannels *channels);

/**
 * Queues a mission event for the next step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum PodsimStatus podsim_sim_fire_event(struct PodsimSim *sim, uint32_t event);

/**
 * Advances `steps` fixed steps. Queued events fire on the first of them.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum PodsimStatus podsim_sim_step(struct PodsimSim *sim, uint64_t steps);

/**
 * Copies the current telemetry record into `out`.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid writable pointer.
 */
enum PodsimStatus podsim_sim_telemetry(const struct PodsimSim *sim, struct PodsimTelemetry *out);

/**
 * Restores the scenario's initial conditions and drops queued events.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum PodsimStatus podsim_sim_reset(struct PodsimSim *sim);

/**
 * Maximum depth the default pod can return from when carrying `total_mass_kg`.
 * Writes `INFINITY` when the skin does not limit the depth.
 *
 * # Safety
 * `out_depth_m` must be a valid writable pointer.
 */
enum PodsimStatus podsim_max_sustainable_depth(double total_mass_kg, double *out_depth_m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PODSIM_H */
