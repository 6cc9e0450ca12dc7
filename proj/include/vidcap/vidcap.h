/* C interface to the vidcap library. Strings returned through char** out
   parameters are owned by the caller and released with vidcap_string_free. */
#ifndef VIDCAP_VIDCAP_H
#define VIDCAP_VIDCAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(VIDCAP_BUILDING_LIBRARY)
#define VIDCAP_API __attribute__((visibility("default")))
#else
#define VIDCAP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vidcap_status {
  VIDCAP_OK = 0,
  VIDCAP_ERR_INTERNAL = 1,
  VIDCAP_ERR_CONFIG = 2,
  VIDCAP_ERR_PARSE = 3,
  VIDCAP_ERR_VALIDATION = 4,
  VIDCAP_ERR_IO = 5,
  VIDCAP_ERR_NUMERIC = 6,
  VIDCAP_ERR_ARGUMENT = 7
} vidcap_status;

typedef struct vidcap_config vidcap_config;
typedef struct vidcap_corpus vidcap_corpus;

/* Zero / NULL fields mean "not overridden". */
typedef struct vidcap_overrides {
  int has_seed;
  uint64_t seed;
  int jobs;
  const char* profile;
} vidcap_overrides;

VIDCAP_API const char* vidcap_version(void);
/* Message of the last failed call on this thread; "" when none. */
VIDCAP_API const char* vidcap_last_error(void);
VIDCAP_API const char* vidcap_status_name(vidcap_status status);
VIDCAP_API void vidcap_string_free(char* s);
/* 0 debug, 1 info, 2 warning, 3 error, 4 silent. */
VIDCAP_API vidcap_status vidcap_set_log_level(int level);

/* overrides may be NULL. */
VIDCAP_API vidcap_status vidcap_config_load(const char* path, const vidcap_overrides* overrides, vidcap_config** out);
/* base_dir resolves relative paths; NULL means the working directory. */
VIDCAP_API vidcap_status vidcap_config_parse(const char* json_text, const char* base_dir,
                                             const vidcap_overrides* overrides, vidcap_config** out);
VIDCAP_API void vidcap_config_free(vidcap_config* cfg);
VIDCAP_API vidcap_status vidcap_config_output_dir(const vidcap_config* cfg, char** out);

/* Commands. out receives a short summary (or the plan for dry runs); it may be NULL. */
VIDCAP_API vidcap_status vidcap_run(const vidcap_config* cfg, int dry_run, char** out);
VIDCAP_API vidcap_status vidcap_oracle_sweep(const vidcap_config* cfg, int dry_run, char** out);
VIDCAP_API vidcap_status vidcap_analyze(const vidcap_config* cfg, int dry_run, char** out);
VIDCAP_API vidcap_status vidcap_stats(const vidcap_config* cfg, int dry_run, char** out);
/* cfg may be NULL for the default preset. */
VIDCAP_API vidcap_status vidcap_synth(const vidcap_config* cfg, const char* out_dir, int dry_run, char** out);
/* features_dir NULL: "features" next to the corpus file. */
VIDCAP_API vidcap_status vidcap_ingest(const char* corpus_path, const char* features_dir, int dry_run, char** out);
VIDCAP_API vidcap_status vidcap_report(const char* output_dir, char** out);

/* Corpus handles. */
VIDCAP_API vidcap_status vidcap_corpus_load(const char* corpus_path, const char* features_dir, vidcap_corpus** out);
VIDCAP_API vidcap_status vidcap_corpus_from_config(const vidcap_config* cfg, vidcap_corpus** out);
VIDCAP_API void vidcap_corpus_free(vidcap_corpus* corpus);
VIDCAP_API vidcap_status vidcap_corpus_counts(const vidcap_corpus* corpus, size_t* num_videos, size_t* num_segments,
                                              size_t* feature_dim);
VIDCAP_API vidcap_status vidcap_corpus_stats_json(const vidcap_corpus* corpus, char** out);

/* Corpus-level metric over n whitespace-separated caption strings.
   metric: "bleu4", "meteor", "rouge_l" or "cider". */
VIDCAP_API vidcap_status vidcap_score(const char* metric, const char* const* candidates,
                                      const char* const* references, size_t n, double* out);
/* ROC AUC of scores against 0/1 labels. */
VIDCAP_API vidcap_status vidcap_roc_auc(const double* scores, const int* labels, size_t n, double* out);
/* Combined Wilcoxon / corrected-t significance of paired fold scores. */
VIDCAP_API vidcap_status vidcap_significance(const double* a, const double* b, size_t n, double test_frac,
                                             double train_frac, double alpha, double* combined_p, int* significant);

#ifdef __cplusplus
}
#endif

#endif
