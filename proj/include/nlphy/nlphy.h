#ifndef NLPHY_H
#define NLPHY_H

#include <stddef.h>
#include <stdint.h>

#if defined(NLPHY_BUILDING_LIBRARY)
#define NLPHY_API __attribute__((visibility("default")))
#else
#define NLPHY_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nlphy_status {
  NLPHY_OK = 0,
  NLPHY_ERR_CONFIG = 1,      /* invalid configuration: unknown key, bad type, out of range */
  NLPHY_ERR_IO = 2,          /* file could not be read or written */
  NLPHY_ERR_NUMERIC = 3,     /* rank-deficient or singular channel, degenerate measurement */
  NLPHY_ERR_INVALID_ARG = 4, /* null handle, bad enum, buffer too small */
  NLPHY_ERR_INTERNAL = 5
} nlphy_status;

typedef struct nlphy_experiment nlphy_experiment;

typedef struct nlphy_oracle_report {
  int rows;
  int cols;
  int trials;
  int matches;
  double max_deviation;
  int max_perturbation;
  double seconds;
} nlphy_oracle_report;

NLPHY_API const char* nlphy_version(void);
NLPHY_API const char* nlphy_status_string(nlphy_status s);
/* Message of the last failing call on this thread; "" if none. */
NLPHY_API const char* nlphy_last_error(void);

NLPHY_API nlphy_status nlphy_experiment_load(const char* path, nlphy_experiment** out);
NLPHY_API nlphy_status nlphy_experiment_from_json(const char* json_text, nlphy_experiment** out);
NLPHY_API void nlphy_experiment_free(nlphy_experiment* exp);

NLPHY_API nlphy_status nlphy_experiment_set_seed(nlphy_experiment* exp, uint64_t seed);
/* jobs <= 0 selects the hardware concurrency. */
NLPHY_API nlphy_status nlphy_experiment_set_jobs(nlphy_experiment* exp, int jobs);

/* out_dir may be NULL to skip writing artifacts. */
NLPHY_API nlphy_status nlphy_experiment_run(nlphy_experiment* exp, const char* out_dir);
/* axis: "snr", "boost" or "n_pe". */
NLPHY_API nlphy_status nlphy_experiment_sweep(nlphy_experiment* exp, const char* axis, const char* out_dir);

/* Copy NUL-terminated text into buf. *needed (optional) receives the size
   including the terminator; a too-small buf yields NLPHY_ERR_INVALID_ARG
   and leaves buf untouched. buf may be NULL with cap 0 to query the size. */
NLPHY_API nlphy_status nlphy_experiment_summary_json(const nlphy_experiment* exp, char* buf, size_t cap,
                                                     size_t* needed);
NLPHY_API nlphy_status nlphy_experiment_resolved_json(const nlphy_experiment* exp, char* buf, size_t cap,
                                                      size_t* needed);

/* kind: "sphere", "llr" or "vp". */
NLPHY_API nlphy_status nlphy_oracle_run(const char* kind, int trials, int rows, int cols, uint64_t seed,
                                        nlphy_oracle_report* out);

NLPHY_API nlphy_status nlphy_mcs_table_csv(char* buf, size_t cap, size_t* needed);

#ifdef __cplusplus
}
#endif

#endif
