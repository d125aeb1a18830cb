/* Copyright 2026 The nanofb Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the nanofb simulation library. Every call returns a
 * nanofb_status; on failure nanofb_last_error() describes the problem
 * (per thread). Strings handed out by the library are released with
 * nanofb_string_free.
 */
#ifndef NANOFB_NANOFB_H
#define NANOFB_NANOFB_H

#include <stddef.h>
#include <stdint.h>

#if defined(NANOFB_BUILDING_LIBRARY)
#define NANOFB_API __attribute__((visibility("default")))
#else
#define NANOFB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nanofb_status {
  NANOFB_OK = 0,
  NANOFB_ERR_DIMENSION = 1,
  NANOFB_ERR_SHAPE = 2,
  NANOFB_ERR_REGIME = 3,
  NANOFB_ERR_DETUNING_SIGN = 4,
  NANOFB_ERR_BLOWUP = 5,
  NANOFB_ERR_TOO_FEW_SAMPLES = 6,
  NANOFB_ERR_NEAR_SINGULAR_GAIN = 7,
  NANOFB_ERR_OUT_OF_VALIDITY = 8,
  NANOFB_ERR_CONFIG = 9,
  NANOFB_ERR_INVALID_ARGUMENT = 10,
  NANOFB_ERR_EMPTY_INPUT = 11,
  NANOFB_ERR_DIVERGENCE = 12,
  NANOFB_ERR_IO = 13,
  NANOFB_ERR_NULL = 50,
  NANOFB_ERR_INTERNAL = 99
} nanofb_status;

typedef struct nanofb_config nanofb_config;
typedef struct nanofb_sweep nanofb_sweep;
typedef struct nanofb_crosscheck nanofb_crosscheck;

typedef struct nanofb_sweep_row {
  double v_p_over_wT;
  double v_x_over_wT;
  double VxM_c, VpM_c;
  double VxM_uc, VpM_uc;
  double xi;
  double VxM_pred, VpM_pred;
  double nbar_c, nbar_uc;
  double Teff_c, Teff_uc; /* linear convention */
  double Teff_c_angular, Teff_uc_angular;
  int converged; /* controlled point produced finite stationary moments */
  int region_ok;
} nanofb_sweep_row;

typedef struct nanofb_coeffs {
  double C1_re, C1_im;
  double C2_re, C2_im;
  double chi;
  double xi_M_re, xi_M_im;
} nanofb_coeffs;

NANOFB_API const char* nanofb_version(void);
NANOFB_API const char* nanofb_last_error(void);
NANOFB_API const char* nanofb_status_name(nanofb_status s);
NANOFB_API void nanofb_string_free(char* s);

/* Configuration */
NANOFB_API nanofb_status nanofb_config_load(const char* path, nanofb_config** out);
NANOFB_API nanofb_status nanofb_config_parse(const char* text, nanofb_config** out);
NANOFB_API nanofb_status nanofb_config_preset(const char* name, nanofb_config** out);
NANOFB_API nanofb_status nanofb_config_set(nanofb_config* cfg, const char* key, const char* value);
NANOFB_API nanofb_status nanofb_config_echo(const nanofb_config* cfg, char** text);
/* Canonical (SI) value of one key as it appears in the echo. */
NANOFB_API nanofb_status nanofb_config_get(const nanofb_config* cfg, const char* key, char** value);
NANOFB_API void nanofb_config_free(nanofb_config* cfg);

/* Derived quantities; *regime_ok receives 1 when every regime check passes. */
NANOFB_API nanofb_status nanofb_derive_report(const nanofb_config* cfg, char** text, int* regime_ok);
NANOFB_API nanofb_status nanofb_reduced_coeffs(const nanofb_config* cfg, double v_x, double v_p, nanofb_coeffs* out);

/* Gain sweep (a config without a sweep block yields one row) */
NANOFB_API nanofb_status nanofb_sweep_run(const nanofb_config* cfg, nanofb_sweep** out);
NANOFB_API size_t nanofb_sweep_size(const nanofb_sweep* s);
NANOFB_API nanofb_status nanofb_sweep_get(const nanofb_sweep* s, size_t i, nanofb_sweep_row* row);
NANOFB_API int nanofb_sweep_diverged(const nanofb_sweep* s);
/* Writes sweep.csv, manifest.txt and summary.txt into dir. */
NANOFB_API nanofb_status nanofb_sweep_write(const nanofb_sweep* s, const char* dir);
NANOFB_API nanofb_status nanofb_sweep_csv(const nanofb_sweep* s, char** text);
NANOFB_API void nanofb_sweep_free(nanofb_sweep* s);

/* Engine cross-check */
NANOFB_API nanofb_status nanofb_crosscheck_run(const nanofb_config* cfg, nanofb_crosscheck** out);
NANOFB_API int nanofb_crosscheck_passed(const nanofb_crosscheck* c);
NANOFB_API nanofb_status nanofb_crosscheck_text(const nanofb_crosscheck* c, char** text);
/* Writes crosscheck.txt and manifest.txt into dir. */
NANOFB_API nanofb_status nanofb_crosscheck_write(const nanofb_crosscheck* c, const char* dir);
NANOFB_API void nanofb_crosscheck_free(nanofb_crosscheck* c);

/* Single trajectory; writes trajectory.csv, summary.txt and manifest.txt into dir. */
NANOFB_API nanofb_status nanofb_simulate(const nanofb_config* cfg, const char* dir, char** summary);

#ifdef __cplusplus
}
#endif

#endif /* NANOFB_NANOFB_H */
