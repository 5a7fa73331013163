// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "tkgd/tkgd.h"

#include <exception>
#include <string>

#include "checkpoint.hpp"
#include "config.hpp"
#include "error.hpp"
#include "pipeline.hpp"

struct tkgd_config {
  tkgd::RunConfig cfg;
  tkgd_print_fn print = nullptr;
  void* user = nullptr;

  tkgd::Printer printer() const {
    if (print == nullptr) return {};
    return [fn = print, user = user](std::string_view line) { fn(std::string(line).c_str(), user); };
  }
};

struct tkgd_dataset {
  tkgd::Dataset data;
};

struct tkgd_model {
  tkgd::ModelParams<float> params;
  std::string backbone;
};

struct tkgd_report {
  tkgd::RankingReport report;
  std::string json;
  std::string table;
};

namespace {

thread_local std::string g_last_error;

tkgd_status to_status(tkgd::ErrorCode c) { return static_cast<tkgd_status>(static_cast<int>(c)); }

template <class F>
tkgd_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return TKGD_OK;
  } catch (const tkgd::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TKGD_E_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return TKGD_E_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TKGD_E_INTERNAL;
  }
}

tkgd_status null_arg(const char* name) {
  g_last_error = std::string("argument '") + name + "' must not be NULL";
  return TKGD_E_INVALID_ARGUMENT;
}

std::optional<std::filesystem::path> opt_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

std::filesystem::path checkpoint_or_default(const tkgd_config* cfg, const char* checkpoint) {
  return opt_path(checkpoint).value_or(tkgd::RunPaths{cfg->cfg.out_dir}.student_checkpoint());
}

}  // namespace

extern "C" {

const char* tkgd_version(void) { return "0.1.0"; }

const char* tkgd_status_name(tkgd_status status) {
  switch (status) {
    case TKGD_OK: return "ok";
    case TKGD_E_INVALID_ARGUMENT: return "invalid argument";
    case TKGD_E_IO: return "io error";
    case TKGD_E_PARSE: return "parse error";
    case TKGD_E_CONFIG: return "config error";
    case TKGD_E_CHECKPOINT: return "checkpoint error";
    case TKGD_E_NUMERIC: return "numeric error";
    case TKGD_E_LLM_TRANSPORT: return "llm transport error";
    case TKGD_E_LLM_AUTH: return "llm auth error";
    case TKGD_E_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* tkgd_last_error(void) { return g_last_error.c_str(); }

void tkgd_set_warnings(int enabled) { tkgd::set_warnings_enabled(enabled != 0); }

tkgd_status tkgd_config_load(const char* path, tkgd_config** out) {
  if (path == nullptr) return null_arg("path");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new tkgd_config{tkgd::parse_config(path)}; });
}

tkgd_status tkgd_config_parse(const char* text, tkgd_config** out) {
  if (text == nullptr) return null_arg("text");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new tkgd_config{tkgd::parse_config_text(text)}; });
}

tkgd_status tkgd_config_set(tkgd_config* cfg, const char* key, const char* value) {
  if (cfg == nullptr) return null_arg("cfg");
  if (key == nullptr) return null_arg("key");
  if (value == nullptr) return null_arg("value");
  return guarded([&] {
    tkgd::RunConfig next = cfg->cfg;
    tkgd::apply_setting(next, key, value);
    tkgd::validate(next);
    cfg->cfg = std::move(next);
  });
}

void tkgd_config_set_printer(tkgd_config* cfg, tkgd_print_fn fn, void* user) {
  if (cfg == nullptr) return;
  cfg->print = fn;
  cfg->user = user;
}

tkgd_status tkgd_config_digest(const tkgd_config* cfg, char out[65]) {
  if (cfg == nullptr) return null_arg("cfg");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    const std::string hex = tkgd::to_hex(cfg->cfg.digest());
    hex.copy(out, 64);
    out[64] = '\0';
  });
}

void tkgd_config_free(tkgd_config* cfg) { delete cfg; }

tkgd_status tkgd_prepare(const tkgd_config* cfg) {
  if (cfg == nullptr) return null_arg("cfg");
  return guarded([&] { tkgd::run_prepare(cfg->cfg, cfg->printer()); });
}

tkgd_status tkgd_train_teacher(const tkgd_config* cfg) {
  if (cfg == nullptr) return null_arg("cfg");
  return guarded([&] { tkgd::run_train_teacher(cfg->cfg, cfg->printer()); });
}

tkgd_status tkgd_distill(const tkgd_config* cfg, const char* teacher_checkpoint) {
  if (cfg == nullptr) return null_arg("cfg");
  return guarded([&] { tkgd::run_distill(cfg->cfg, opt_path(teacher_checkpoint), cfg->printer()); });
}

tkgd_status tkgd_evaluate(const tkgd_config* cfg, const char* checkpoint, const char* split, tkgd_report** out) {
  if (cfg == nullptr) return null_arg("cfg");
  if (out != nullptr) *out = nullptr;
  return guarded([&] {
    const tkgd::Split which = tkgd::parse_split(split == nullptr ? "test" : split);
    auto result = tkgd::run_evaluate(cfg->cfg, checkpoint_or_default(cfg, checkpoint), which, cfg->printer());
    if (out != nullptr) *out = new tkgd_report{result.report, std::move(result.json), std::move(result.table)};
  });
}

tkgd_status tkgd_cache_llm(const tkgd_config* cfg, const char* teacher_checkpoint, const char* queries,
                           size_t* calls) {
  if (cfg == nullptr) return null_arg("cfg");
  return guarded([&] {
    const std::size_t n = tkgd::run_cache_llm(cfg->cfg, opt_path(teacher_checkpoint), opt_path(queries), cfg->printer());
    if (calls != nullptr) *calls = n;
  });
}

tkgd_status tkgd_export(const tkgd_config* cfg, const char* checkpoint, const char* output) {
  if (cfg == nullptr) return null_arg("cfg");
  return guarded([&] {
    const auto ckpt = checkpoint_or_default(cfg, checkpoint);
    const auto dest = opt_path(output).value_or(cfg->cfg.out_dir / (ckpt.stem().string() + "_embeddings.txt"));
    tkgd::run_export(cfg->cfg, ckpt, dest, cfg->printer());
  });
}

size_t tkgd_report_queries(const tkgd_report* r) { return r ? r->report.n_queries : 0; }
double tkgd_report_mrr(const tkgd_report* r) { return r ? r->report.mrr : 0.0; }
double tkgd_report_mr(const tkgd_report* r) { return r ? r->report.mr : 0.0; }
double tkgd_report_hits(const tkgd_report* r, int k) {
  if (r == nullptr) return -1.0;
  auto it = r->report.hits.find(k);
  return it == r->report.hits.end() ? -1.0 : it->second;
}
const char* tkgd_report_json(const tkgd_report* r) { return r ? r->json.c_str() : ""; }
const char* tkgd_report_table(const tkgd_report* r) { return r ? r->table.c_str() : ""; }
void tkgd_report_free(tkgd_report* r) { delete r; }

tkgd_status tkgd_dataset_load(const tkgd_config* cfg, tkgd_dataset** out) {
  if (cfg == nullptr) return null_arg("cfg");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new tkgd_dataset{tkgd::load_run_data(cfg->cfg).data}; });
}

size_t tkgd_dataset_entities(const tkgd_dataset* d) { return d ? d->data.vocab.num_entities() : 0; }
size_t tkgd_dataset_relations(const tkgd_dataset* d) { return d ? d->data.vocab.num_relations() : 0; }
size_t tkgd_dataset_times(const tkgd_dataset* d) { return d ? d->data.vocab.num_times() : 0; }
size_t tkgd_dataset_facts(const tkgd_dataset* d, const char* split) {
  if (d == nullptr || split == nullptr) return 0;
  const std::string_view s(split);
  if (s == "train") return d->data.train.size();
  if (s == "valid") return d->data.valid.size();
  if (s == "test") return d->data.test.size();
  return 0;
}
void tkgd_dataset_free(tkgd_dataset* d) { delete d; }

tkgd_status tkgd_model_load(const char* checkpoint, tkgd_model** out) {
  if (checkpoint == nullptr) return null_arg("checkpoint");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto ck = tkgd::load_checkpoint(checkpoint);
    std::string name(tkgd::to_string(ck.params.dims.backbone));
    *out = new tkgd_model{std::move(ck.params), std::move(name)};
  });
}

size_t tkgd_model_dim(const tkgd_model* m) { return m ? m->params.dims.dim : 0; }
const char* tkgd_model_backbone(const tkgd_model* m) { return m ? m->backbone.c_str() : ""; }

tkgd_status tkgd_model_score(const tkgd_model* m, uint32_t subject, uint32_t relation, uint32_t object, uint32_t time,
                             double* score) {
  if (m == nullptr) return null_arg("m");
  if (score == nullptr) return null_arg("score");
  const auto& d = m->params.dims;
  if (subject >= d.n_entities || object >= d.n_entities || relation >= d.n_relations || time >= d.n_times()) {
    g_last_error = "fact ids out of range for this model";
    return TKGD_E_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *score = static_cast<double>(tkgd::score(m->params, tkgd::Quadruple{subject, relation, object, time}));
  });
}

void tkgd_model_free(tkgd_model* m) { delete m; }

}  // extern "C"
