// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "checkpoint.hpp"
#include "config.hpp"
#include "eval.hpp"
#include "llm.hpp"
#include "synthetic.hpp"
#include "trainer.hpp"

namespace tkgd {

using Printer = std::function<void(std::string_view)>;

/// Artifact locations under the run's output directory.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path data_dir() const { return root / "data"; }
  std::filesystem::path rules_file() const { return data_dir() / "rules.tsv"; }
  std::filesystem::path summary_file() const { return data_dir() / "summary.json"; }
  std::filesystem::path teacher_checkpoint() const { return root / "teacher.ckpt"; }
  std::filesystem::path student_checkpoint() const { return root / "student.ckpt"; }
  std::filesystem::path teacher_log() const { return root / "teacher_log.jsonl"; }
  std::filesystem::path distill_log() const { return root / "distill_log.jsonl"; }
  std::filesystem::path llm_cache() const { return root / "llm_cache.jsonl"; }
  std::filesystem::path report_file(const std::filesystem::path& checkpoint, Split split) const;
};

struct RunData {
  Dataset data;
  std::optional<std::vector<PlantedRule>> rules;
};

/// The prepared dataset under `<out>/data` when present, else the configured
/// source (synthetic generator or `data.path`).
RunData load_run_data(const RunConfig& cfg);

/// Offline or remote auxiliary teacher as configured by `llm.*`. The returned
/// object keeps whatever it borrows (rule index) alive.
struct LlmHandle {
  std::unique_ptr<RuleIndex> rules;
  std::unique_ptr<LlmTeacher> teacher;
};
LlmHandle make_llm(const RunConfig& cfg, const RunData& run, const ModelParams<float>* task_teacher);

void run_prepare(const RunConfig& cfg, const Printer& print);

TrainResult run_train_teacher(const RunConfig& cfg, const Printer& print);

TrainResult run_distill(const RunConfig& cfg, const std::optional<std::filesystem::path>& teacher_checkpoint,
                        const Printer& print);

struct EvaluationOutput {
  RankingReport report;
  std::string json;   // machine-readable, byte-deterministic
  std::string table;  // human-readable
  std::filesystem::path report_path;
};

std::string report_json(const RankingReport& r, Split split, const Digest& dataset_digest,
                        const Digest& checkpoint_digest, const Digest& config_digest);
std::string report_table(const RankingReport& r, Split split);

EvaluationOutput run_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint, Split split,
                              const Printer& print);

/// Pre-populates the LLM cache for the teacher's top-k candidates of each
/// query. Queries come from a TSV file (`subject relation object year [slot]`)
/// or default to both slots of every training fact. Returns endpoint calls.
std::size_t run_cache_llm(const RunConfig& cfg, const std::optional<std::filesystem::path>& teacher_checkpoint,
                          const std::optional<std::filesystem::path>& queries, const Printer& print);

/// Plain-text embedding dump, one row per line.
void run_export(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::filesystem::path& output,
                const Printer& print);

}  // namespace tkgd
