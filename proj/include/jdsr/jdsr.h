/* C interface to the joint deblurring / super-resolution / structure library.
 * Every call returns a jdsr_status; on failure jdsr_last_error() holds a
 * message for the calling thread until its next failing call. */
#ifndef JDSR_JDSR_H
#define JDSR_JDSR_H

#include <stddef.h>

#if defined(JDSR_BUILDING_LIBRARY)
#define JDSR_API __attribute__((visibility("default")))
#else
#define JDSR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum jdsr_status {
  JDSR_OK = 0,
  JDSR_ERR_INVALID_ARGUMENT = 1,
  JDSR_ERR_DIMENSION_MISMATCH = 2,
  JDSR_ERR_BEHIND_CAMERA = 3,
  JDSR_ERR_NEAR_PI_ROTATION = 4,
  JDSR_ERR_IO = 5,
  JDSR_ERR_PARSE = 6,
  JDSR_ERR_NUMERICAL = 7,
  JDSR_ERR_INTERNAL = 99
} jdsr_status;

typedef struct jdsr_config jdsr_config;

typedef struct jdsr_run_summary {
  int frames;
  int iterations;
  int flagged_frames;
  double initial_energy;
  double final_energy;
} jdsr_run_summary;

typedef struct jdsr_eval_summary {
  double mean_image_psnr;
  double mean_depth_psnr;
  double mean_depth_rel;
  double ate;
} jdsr_eval_summary;

JDSR_API const char* jdsr_version(void);
JDSR_API const char* jdsr_last_error(void);
JDSR_API const char* jdsr_status_name(jdsr_status status);

/* n <= 0 selects the hardware thread count. Results do not depend on it. */
JDSR_API void jdsr_set_threads(int n);

JDSR_API jdsr_status jdsr_config_default(jdsr_config** out);
JDSR_API jdsr_status jdsr_config_load(const char* path, jdsr_config** out);
JDSR_API jdsr_status jdsr_config_parse(const char* text, jdsr_config** out);
/* Applies one `key = value` assignment with the file syntax. The handle is
   left unchanged when the result fails to parse or validate. */
JDSR_API jdsr_status jdsr_config_set(jdsr_config* config, const char* key, const char* value);
/* Copies the resolved config text (NUL-terminated) into buf when it fits;
 * *needed always receives the required size including the terminator. */
JDSR_API jdsr_status jdsr_config_text(const jdsr_config* config, char* buf, size_t capacity,
                                      size_t* needed);
JDSR_API void jdsr_config_free(jdsr_config* config);

JDSR_API jdsr_status jdsr_synth(const jdsr_config* config, const char* out_dir);
/* Returns JDSR_ERR_NUMERICAL after writing all outputs when frames were
 * flagged by the solver. summary may be NULL. */
JDSR_API jdsr_status jdsr_run(const jdsr_config* config, const char* in_dir, const char* out_dir,
                              jdsr_run_summary* summary);
/* est_dirs holds count estimate directories; summary (may be NULL) receives
 * the first one's averages. */
JDSR_API jdsr_status jdsr_eval(const char* const* est_dirs, size_t count, const char* gt_dir,
                               const char* report_path, jdsr_eval_summary* summary);

#ifdef __cplusplus
}
#endif

#endif
