#ifndef REACTIVE_PLATOON_H
#define REACTIVE_PLATOON_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Size of the broadcast buffer in [`RpDriveState`], including the NUL.
 */
#define RP_BROADCAST_CAPACITY 257

#define RP_RANGEFINDER_COUNT 19

typedef enum RpStatus {
  RP_STATUS_OK = 0,
  RP_STATUS_NULL_POINTER = 1,
  RP_STATUS_INVALID_ARGUMENT = 2,
  RP_STATUS_PARSE = 3,
  RP_STATUS_UNKNOWN_VEHICLE = 4,
  RP_STATUS_IO = 5,
  RP_STATUS_PANIC = 6,
} RpStatus;

typedef struct RpBus RpBus;

typedef struct RpDriver RpDriver;

typedef struct RpSim RpSim;

/**
 * Sensor sample without the received messages.
 */
typedef struct RpCarState {
  double angle;
  int32_t gear;
  double rpm;
  double speed_x;
  double speed_y;
  double track[RP_RANGEFINDER_COUNT];
  double track_pos;
  double dist_raced;
  double dist_from_start;
  double lap_time;
} RpCarState;

/**
 * Actuator command. `broadcast` is a NUL-terminated string.
 */
typedef struct RpDriveState {
  double accel;
  double brake;
  int32_t gear;
  double steer;
  double clutch;
  int32_t meta;
  char broadcast[RP_BROADCAST_CAPACITY];
} RpDriveState;

/**
 * Simulator-side pose and progress of one vehicle.
 */
typedef struct RpPose {
  double x;
  double y;
  double heading;
  /**
   * m/s
   */
  double speed;
  double track_pos;
  uint32_t lap_count;
} RpPose;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread, or an empty string. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *rp_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library that has not
 * been freed yet.
 */
void rp_string_free(char *s);

/**
 * # Safety
 * `out` must be null or point to writable memory for one `RpCarState`.
 */
enum RpStatus rp_car_state_default(struct RpCarState *out);

/**
 * # Safety
 * `out` must be null or point to writable memory for one `RpDriveState`.
 */
enum RpStatus rp_drive_state_default(struct RpDriveState *out);

/**
 * Parses a sensor datagram. Received messages are not represented in
 * `RpCarState` and are dropped. `clamped` may be null.
 *
 * # Safety
 * `text` must be null or NUL-terminated; `out` and `clamped` must be null or
 * valid for writes.
 */
enum RpStatus rp_parse_sensors(const char *text, struct RpCarState *out, bool *clamped);

/**
 * # Safety
 * `cs` must be null or valid for reads; `out` null or valid for writes.
 */
enum RpStatus rp_serialize_sensors(const struct RpCarState *cs, char **out);

/**
 * Parses an action datagram. `clamped` may be null.
 *
 * # Safety
 * `text` must be null or NUL-terminated; `out` and `clamped` must be null or
 * valid for writes.
 */
enum RpStatus rp_parse_actions(const char *text, struct RpDriveState *out, bool *clamped);

/**
 * # Safety
 * `ds` must be null or valid for reads; `out` null or valid for writes.
 */
enum RpStatus rp_serialize_actions(const struct RpDriveState *ds, char **out);

int32_t rp_shifting(double rpm, int32_t gear);

double rp_steering(double angle, double track_pos);

double rp_gas(double speed_x, double steer);

/**
 * True when a vehicle this close to the one ahead asks it to speed up.
 */
bool rp_request_faster(double dist);

/**
 * Creates a driver by name: `my`, `platoon`, `platoon:<km/h>` or `parked`.
 *
 * # Safety
 * `kind` must be null or NUL-terminated; `out` null or valid for writes.
 */
enum RpStatus rp_driver_new(const char *kind, struct RpDriver **out);

/**
 * Advances a driver by one sample. `senders` and `messages` are parallel
 * arrays of `count` received messages; both may be null when `count` is 0.
 *
 * # Safety
 * Pointers must be null or valid for the described reads and writes; every
 * `messages[i]` must be NUL-terminated.
 */
enum RpStatus rp_driver_step(struct RpDriver *driver,
                             double dt,
                             const struct RpCarState *cs,
                             const size_t *senders,
                             const char *const *messages,
                             size_t count,
                             struct RpDriveState *out);

/**
 * # Safety
 * `driver` must be null or a live handle from [`rp_driver_new`].
 */
void rp_driver_free(struct RpDriver *driver);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum RpStatus rp_bus_new(size_t vehicles, struct RpBus **out);

/**
 * Stages `text` as vehicle `id`'s message; peers see it after the next
 * [`rp_bus_advance`].
 *
 * # Safety
 * `bus` must be null or a live handle; `text` null or NUL-terminated.
 */
enum RpStatus rp_bus_publish(struct RpBus *bus, size_t id, const char *text);

/**
 * # Safety
 * `bus` must be null or a live handle.
 */
enum RpStatus rp_bus_advance(struct RpBus *bus);

/**
 * The message `reader` currently receives from `sender` (empty when the
 * sender was silent). Reading one's own channel is an error.
 *
 * # Safety
 * `bus` must be null or a live handle; `out` null or valid for writes.
 */
enum RpStatus rp_bus_receive(const struct RpBus *bus, size_t reader, size_t sender, char **out);

/**
 * Counts of non-empty messages published and delivered so far. Either
 * pointer may be null.
 *
 * # Safety
 * `bus` must be null or a live handle; the out pointers null or writable.
 */
enum RpStatus rp_bus_stats(const struct RpBus *bus, uint64_t *published, uint64_t *delivered);

/**
 * # Safety
 * `bus` must be null or a live handle from [`rp_bus_new`].
 */
void rp_bus_free(struct RpBus *bus);

/**
 * Default oval and settings with the given comma-separated drivers.
 *
 * # Safety
 * `drivers` must be null or NUL-terminated; `out` null or valid for writes.
 */
enum RpStatus rp_sim_new(const char *drivers, struct RpSim **out);

/**
 * Simulation from a key-value config file.
 *
 * # Safety
 * `path` must be null or NUL-terminated; `out` null or valid for writes.
 */
enum RpStatus rp_sim_from_config(const char *path, struct RpSim **out);

/**
 * Advances every vehicle by `steps` lockstep steps.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
enum RpStatus rp_sim_step(struct RpSim *sim, uint64_t steps);

/**
 * # Safety
 * `sim` must be null or a live handle. Returns 0 for null.
 */
size_t rp_sim_vehicle_count(const struct RpSim *sim);

/**
 * # Safety
 * `sim` must be null or a live handle; `out` null or valid for writes.
 */
enum RpStatus rp_sim_pose(const struct RpSim *sim, size_t id, struct RpPose *out);

/**
 * # Safety
 * `sim` must be null or a live handle from `rp_sim_new` or
 * `rp_sim_from_config`.
 */
void rp_sim_free(struct RpSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REACTIVE_PLATOON_H */
