/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The tkgd Authors */

#ifndef TKGD_TKGD_H_
#define TKGD_TKGD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TKGD_BUILDING_LIBRARY)
#define TKGD_API __attribute__((visibility("default")))
#else
#define TKGD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tkgd_status {
  TKGD_OK = 0,
  TKGD_E_INVALID_ARGUMENT = 1,
  TKGD_E_IO = 2,
  TKGD_E_PARSE = 3,
  TKGD_E_CONFIG = 4,
  TKGD_E_CHECKPOINT = 5,
  TKGD_E_NUMERIC = 6,
  TKGD_E_LLM_TRANSPORT = 7,
  TKGD_E_LLM_AUTH = 8,
  TKGD_E_INTERNAL = 9
} tkgd_status;

typedef struct tkgd_config tkgd_config;
typedef struct tkgd_dataset tkgd_dataset;
typedef struct tkgd_model tkgd_model;
typedef struct tkgd_report tkgd_report;

/* Receives one line of progress output. */
typedef void (*tkgd_print_fn)(const char* line, void* user);

TKGD_API const char* tkgd_version(void);
TKGD_API const char* tkgd_status_name(tkgd_status status);
/* Message of the last failure on the calling thread ("" if none). */
TKGD_API const char* tkgd_last_error(void);
/* Warnings go to stderr unless disabled. */
TKGD_API void tkgd_set_warnings(int enabled);

/* ---- configuration ---- */
TKGD_API tkgd_status tkgd_config_load(const char* path, tkgd_config** out);
TKGD_API tkgd_status tkgd_config_parse(const char* text, tkgd_config** out);
/* `key` is `section.key` (or a bare key that names exactly one setting). */
TKGD_API tkgd_status tkgd_config_set(tkgd_config* cfg, const char* key, const char* value);
TKGD_API void tkgd_config_set_printer(tkgd_config* cfg, tkgd_print_fn fn, void* user);
/* Writes 64 hex characters plus a terminating NUL. */
TKGD_API tkgd_status tkgd_config_digest(const tkgd_config* cfg, char out[65]);
TKGD_API void tkgd_config_free(tkgd_config* cfg);

/* ---- pipeline commands; artifacts go under the configured run.out ---- */
TKGD_API tkgd_status tkgd_prepare(const tkgd_config* cfg);
TKGD_API tkgd_status tkgd_train_teacher(const tkgd_config* cfg);
/* `teacher_checkpoint` may be NULL for <out>/teacher.ckpt. */
TKGD_API tkgd_status tkgd_distill(const tkgd_config* cfg, const char* teacher_checkpoint);
/* `checkpoint` may be NULL for <out>/student.ckpt; `split` is "train", "valid" or "test"
   (NULL for "test"). `out` may be NULL. */
TKGD_API tkgd_status tkgd_evaluate(const tkgd_config* cfg, const char* checkpoint, const char* split,
                                   tkgd_report** out);
/* `teacher_checkpoint` and `queries` may be NULL. `calls` may be NULL. */
TKGD_API tkgd_status tkgd_cache_llm(const tkgd_config* cfg, const char* teacher_checkpoint, const char* queries,
                                    size_t* calls);
/* NULL `checkpoint` means <out>/student.ckpt; NULL `output` means
   <out>/<checkpoint stem>_embeddings.txt. */
TKGD_API tkgd_status tkgd_export(const tkgd_config* cfg, const char* checkpoint, const char* output);

/* ---- reports ---- */
TKGD_API size_t tkgd_report_queries(const tkgd_report* r);
TKGD_API double tkgd_report_mrr(const tkgd_report* r);
TKGD_API double tkgd_report_mr(const tkgd_report* r);
/* k in {1, 3, 10}; other k return -1. */
TKGD_API double tkgd_report_hits(const tkgd_report* r, int k);
TKGD_API const char* tkgd_report_json(const tkgd_report* r);
TKGD_API const char* tkgd_report_table(const tkgd_report* r);
TKGD_API void tkgd_report_free(tkgd_report* r);

/* ---- datasets ---- */
TKGD_API tkgd_status tkgd_dataset_load(const tkgd_config* cfg, tkgd_dataset** out);
TKGD_API size_t tkgd_dataset_entities(const tkgd_dataset* d);
TKGD_API size_t tkgd_dataset_relations(const tkgd_dataset* d);
TKGD_API size_t tkgd_dataset_times(const tkgd_dataset* d);
/* `split` is "train", "valid" or "test"; unknown names return 0. */
TKGD_API size_t tkgd_dataset_facts(const tkgd_dataset* d, const char* split);
TKGD_API void tkgd_dataset_free(tkgd_dataset* d);

/* ---- models ---- */
TKGD_API tkgd_status tkgd_model_load(const char* checkpoint, tkgd_model** out);
TKGD_API size_t tkgd_model_dim(const tkgd_model* m);
/* "ttranse" or "tadistmult". */
TKGD_API const char* tkgd_model_backbone(const tkgd_model* m);
TKGD_API tkgd_status tkgd_model_score(const tkgd_model* m, uint32_t subject, uint32_t relation, uint32_t object,
                                      uint32_t time, double* score);
TKGD_API void tkgd_model_free(tkgd_model* m);

#ifdef __cplusplus
}
#endif

#endif /* TKGD_TKGD_H_ */
