#ifndef HETNET_H
#define HETNET_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum HetnetPlatform {
  HETNET_PLATFORM_ARDUINO_XBEE = 0,
  HETNET_PLATFORM_SUNSPOT = 1,
  HETNET_PLATFORM_TELOSB = 2,
  HETNET_PLATFORM_ISENSE = 3,
} HetnetPlatform;

typedef enum HetnetStatus {
  HETNET_STATUS_OK = 0,
  HETNET_STATUS_NULL_POINTER = 1,
  HETNET_STATUS_INVALID_ARGUMENT = 2,
  HETNET_STATUS_BUFFER_TOO_SMALL = 3,
  HETNET_STATUS_PAYLOAD_TOO_LARGE = 4,
  HETNET_STATUS_TRUNCATED_FRAME = 5,
  HETNET_STATUS_BAD_FCS = 6,
  HETNET_STATUS_DISPATCH_MISMATCH = 7,
  HETNET_STATUS_BAD_CHECKSUM = 8,
  HETNET_STATUS_UNSUPPORTED = 9,
  HETNET_STATUS_MALFORMED = 10,
  HETNET_STATUS_INVALID_SCENARIO = 11,
  HETNET_STATUS_IO = 12,
  HETNET_STATUS_NOT_RUN = 13,
  HETNET_STATUS_PANIC = 14,
} HetnetStatus;

/**
 * A logical MAC frame; the payload excludes the dispatch prefix.
 */
typedef struct HetnetFrame HetnetFrame;

typedef struct HetnetSim HetnetSim;

/**
 * One row of simulation output. Absent RSSI means are NaN.
 */
typedef struct HetnetMetrics {
  enum HetnetPlatform tx_platform;
  enum HetnetPlatform rx_platform;
  double distance_m;
  uint32_t payload_bytes;
  uint64_t sent;
  uint64_t received;
  double rx_pps;
  double loss_pct;
  double rssi_mean_dbm;
  double rssi_raw_mean;
  double tx_pps;
  uint64_t channel_drops;
  uint64_t overload_drops;
  uint64_t restart_drops;
} HetnetMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never NULL.
 */
const char *hetnet_status_str(enum HetnetStatus status);

/**
 * Message of the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *hetnet_last_error(void);

/**
 * CRC-16/KERMIT as used for the 802.15.4 FCS.
 *
 * # Safety
 * `data` must point to `len` readable octets (or `len` must be 0).
 */
uint16_t hetnet_crc16(const uint8_t *data, uintptr_t len);

/**
 * dBm for a raw RSSI octet reported by `platform`.
 */
double hetnet_rssi_normalize(enum HetnetPlatform platform, uint8_t raw, double offset_db);

/**
 * Raw octet `platform` would report for `dbm`.
 */
uint8_t hetnet_rssi_encode(enum HetnetPlatform platform, double dbm, double offset_db);

/**
 * Broadcast beacon from `tx` under the default interop settings.
 *
 * # Safety
 * `payload` must point to `len` readable octets; `out` must be writable.
 */
enum HetnetStatus hetnet_frame_new_beacon(enum HetnetPlatform tx,
                                          uint8_t seq,
                                          const uint8_t *payload,
                                          uintptr_t len,
                                          struct HetnetFrame **out);

/**
 * Host-side bytes `platform` emits for `frame`.
 *
 * # Safety
 * `frame` must be a live handle; `buf` must hold `cap` writable octets;
 * `out_len` must be writable.
 */
enum HetnetStatus hetnet_frame_wrap(const struct HetnetFrame *frame,
                                    enum HetnetPlatform platform,
                                    uint8_t *buf,
                                    uintptr_t cap,
                                    uintptr_t *out_len);

/**
 * Air frame the radio of `platform` sends for host bytes from
 * [`hetnet_frame_wrap`].
 *
 * # Safety
 * As for [`hetnet_frame_wrap`]; `host` must point to `len` octets.
 */
enum HetnetStatus hetnet_to_air(enum HetnetPlatform platform,
                                const uint8_t *host,
                                uintptr_t len,
                                uint8_t seq,
                                uint8_t *buf,
                                uintptr_t cap,
                                uintptr_t *out_len);

/**
 * What the radio of `platform` hands its host for an air frame.
 *
 * # Safety
 * As for [`hetnet_to_air`].
 */
enum HetnetStatus hetnet_from_air(enum HetnetPlatform platform,
                                  const uint8_t *air,
                                  uintptr_t len,
                                  uint8_t rssi_raw,
                                  uint8_t *buf,
                                  uintptr_t cap,
                                  uintptr_t *out_len);

/**
 * Decode bytes received by `platform` into a new frame handle.
 *
 * # Safety
 * `data` must point to `len` readable octets; `out` must be writable.
 */
enum HetnetStatus hetnet_frame_unwrap(enum HetnetPlatform platform,
                                      const uint8_t *data,
                                      uintptr_t len,
                                      struct HetnetFrame **out);

/**
 * # Safety
 * `frame` must be a live handle.
 */
uint8_t hetnet_frame_seq(const struct HetnetFrame *frame);

/**
 * Short source address, or 0xFFFF if the handle is NULL or extended.
 *
 * # Safety
 * `frame` must be a live handle or NULL.
 */
uint16_t hetnet_frame_src(const struct HetnetFrame *frame);

/**
 * Borrowed view of the payload, valid while the handle lives.
 *
 * # Safety
 * `frame` must be a live handle; `out_len` must be writable.
 */
const uint8_t *hetnet_frame_payload(const struct HetnetFrame *frame, uintptr_t *out_len);

/**
 * # Safety
 * `frame` must come from this library and not be used afterwards.
 */
void hetnet_frame_free(struct HetnetFrame *frame);

/**
 * New simulation. `scenario_path` and `profiles_path` may each be NULL
 * for the built-in defaults.
 *
 * # Safety
 * Non-NULL paths must be NUL-terminated; `out` must be writable.
 */
enum HetnetStatus hetnet_sim_new(const char *scenario_path,
                                 const char *profiles_path,
                                 struct HetnetSim **out);

/**
 * Override seed, beacons per run and repetitions. Zero leaves the last
 * two unchanged. Discards earlier results.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum HetnetStatus hetnet_sim_configure(struct HetnetSim *sim,
                                       uint64_t seed,
                                       uint32_t beacons_per_run,
                                       uint32_t repetitions);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum HetnetStatus hetnet_sim_run(struct HetnetSim *sim);

/**
 * Number of result rows; 0 before a successful run.
 *
 * # Safety
 * `sim` must be a live handle or NULL.
 */
uintptr_t hetnet_sim_record_count(const struct HetnetSim *sim);

/**
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum HetnetStatus hetnet_sim_record(const struct HetnetSim *sim,
                                    uintptr_t index,
                                    struct HetnetMetrics *out);

/**
 * Write `metrics.csv` and `drops.csv` into `dir`, creating it.
 *
 * # Safety
 * `sim` must be a live handle; `dir` must be NUL-terminated.
 */
enum HetnetStatus hetnet_sim_write_csv(const struct HetnetSim *sim, const char *dir);

/**
 * # Safety
 * `sim` must come from this library and not be used afterwards.
 */
void hetnet_sim_free(struct HetnetSim *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HETNET_H */
