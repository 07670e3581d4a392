#ifndef ISAC_H
#define ISAC_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call. On anything but `ISAC_OK` the
 * message is available from `isac_last_error_message` on the same thread.
 */
typedef enum IsacStatus {
  ISAC_STATUS_OK = 0,
  ISAC_STATUS_NULL_POINTER = 1,
  ISAC_STATUS_INVALID_ARGUMENT = 2,
  ISAC_STATUS_INVALID_CONFIG = 3,
  ISAC_STATUS_IO = 4,
  ISAC_STATUS_NUMERICAL = 5,
  ISAC_STATUS_PANIC = 6,
} IsacStatus;

typedef enum IsacSlotStatus {
  ISAC_SLOT_STATUS_OPTIMAL = 0,
  ISAC_SLOT_STATUS_MAX_ITERS = 1,
  ISAC_SLOT_STATUS_INFEASIBLE = 2,
  ISAC_SLOT_STATUS_INTERNAL_ERROR = 3,
} IsacSlotStatus;

typedef enum IsacGesture {
  ISAC_GESTURE_INACTIVE = 0,
  ISAC_GESTURE_PICKING_UP = 1,
  ISAC_GESTURE_PUTTING_DOWN = 2,
} IsacGesture;

/**
 * Design modes accepted as `uint32_t mode`.
 */
typedef enum IsacMode {
  ISAC_MODE_JOINT = 0,
  ISAC_MODE_POWER_ONLY = 1,
  ISAC_MODE_BEAM_ONLY = 2,
  ISAC_MODE_STATIC_NO_ADAPT = 3,
} IsacMode;

/**
 * Simulator configuration: scenario, power budget, QoS thresholds,
 * optimizer and tracker settings.
 */
typedef struct IsacConfig IsacConfig;

/**
 * Per-slot records of one simulated episode.
 */
typedef struct IsacEpisode IsacEpisode;

typedef struct IsacSlotSummary {
  size_t slot;
  enum IsacSlotStatus status;
  double sum_sens_sinr;
  /**
   * Sensing power per sensing beam, watts.
   */
  double sense_power;
  size_t iterations;
  bool rank_one_qos_violation;
  /**
   * Seconds spent in the optimizer.
   */
  double wall_time;
} IsacSlotSummary;

typedef struct IsacUserRecord {
  double true_distance;
  double true_theta;
  double true_height;
  double est_distance;
  double est_theta;
  double est_height;
  enum IsacGesture gesture;
  bool delta;
  double gamma;
  double comm_sinr;
  double sens_sinr;
  /**
   * Communication power of this user, watts.
   */
  double user_power;
} IsacUserRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *isac_version(void);

/**
 * Creates a configuration with every default.
 */
enum IsacStatus isac_config_default(struct IsacConfig **out);

/**
 * Parses a TOML configuration. Missing sections and keys keep their
 * defaults; unknown keys are an error.
 */
enum IsacStatus isac_config_from_toml(const char *toml, struct IsacConfig **out);

/**
 * Reads a TOML configuration file.
 */
enum IsacStatus isac_config_load(const char *path, struct IsacConfig **out);

enum IsacStatus isac_config_set_p_max_dbm(struct IsacConfig *config, double p_max_dbm);

enum IsacStatus isac_config_set_num_antennas(struct IsacConfig *config, size_t num_antennas);

enum IsacStatus isac_config_num_users(const struct IsacConfig *config, size_t *out);

void isac_config_free(struct IsacConfig *config);

/**
 * Simulates one episode of the configured scenario. `seed` drives the
 * measurement noise; `mode` is an [`IsacMode`] value.
 */
enum IsacStatus isac_episode_run(const struct IsacConfig *config,
                                 uint32_t mode,
                                 uint64_t seed,
                                 struct IsacEpisode **out);

enum IsacStatus isac_episode_num_slots(const struct IsacEpisode *episode, size_t *out);

enum IsacStatus isac_episode_num_users(const struct IsacEpisode *episode, size_t *out);

enum IsacStatus isac_episode_slot(const struct IsacEpisode *episode,
                                  size_t slot,
                                  struct IsacSlotSummary *out);

enum IsacStatus isac_episode_user(const struct IsacEpisode *episode,
                                  size_t slot,
                                  size_t user,
                                  struct IsacUserRecord *out);

/**
 * Writes the episode CSV, with a trailing `wall_time` column if `timing`.
 */
enum IsacStatus isac_episode_write_csv(const struct IsacEpisode *episode,
                                       const char *path,
                                       bool timing);

void isac_episode_free(struct IsacEpisode *episode);

/**
 * Solves one static slot: every user at the mid gesture height with the
 * QoS indicators `delta[0..num_users]`.
 */
enum IsacStatus isac_static_solve(const struct IsacConfig *config,
                                  uint32_t mode,
                                  const bool *delta,
                                  size_t num_users,
                                  struct IsacSlotSummary *out);

/**
 * Copies the last error message of the calling thread into `buf` as a
 * NUL-terminated string, truncated to `len - 1` bytes, and returns the full
 * message length. Pass a null `buf` to query the length only.
 *
 * # Safety
 *
 * `buf` must be null or valid for writes of `len` bytes.
 */
size_t isac_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISAC_H */
