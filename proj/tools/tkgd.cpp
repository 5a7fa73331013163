// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

// Command-line front end. Talks to the library only through tkgd.h.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tkgd/tkgd.h"

namespace {

struct Common {
  std::string config;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  const std::size_t n = std::char_traits<char>::length(line);
  if (n == 0 || line[n - 1] != '\n') std::fputc('\n', stdout);
  std::fflush(stdout);
}

int report_failure(tkgd_status st) {
  std::fprintf(stderr, "tkgd: %s: %s\n", tkgd_status_name(st), tkgd_last_error());
  return static_cast<int>(st);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--threads", c.threads, "Worker threads for evaluation and LLM requests")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "Override run.seed");
  cmd->add_option("--out", c.out, "Override run.out (output directory)");
  cmd->add_option("--set", c.overrides, "Override any setting, as section.key=value")->allow_extra_args(false);
  cmd->add_flag("-q,--quiet", c.quiet, "Suppress progress output");
}

// Loads the config and applies command-line overrides.
tkgd_status open_config(const Common& c, tkgd_config** cfg) {
  tkgd_status st = tkgd_config_load(c.config.c_str(), cfg);
  if (st != TKGD_OK) return st;
  auto set = [&](const char* key, const std::string& value) {
    if (st == TKGD_OK) st = tkgd_config_set(*cfg, key, value.c_str());
  };
  if (c.threads) set("run.threads", std::to_string(*c.threads));
  if (c.seed) set("run.seed", std::to_string(*c.seed));
  if (!c.out.empty()) set("run.out", c.out);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "tkgd: --set expects key=value, got '%s'\n", kv.c_str());
      st = TKGD_E_INVALID_ARGUMENT;
      break;
    }
    set(kv.substr(0, eq).c_str(), kv.substr(eq + 1));
  }
  if (!c.quiet) tkgd_config_set_printer(*cfg, print_line, nullptr);
  return st;
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal knowledge graph distillation"};
  app.set_version_flag("--version", std::string(tkgd_version()));
  app.require_subcommand(1);

  Common common;
  std::string checkpoint, split = "test", teacher, queries, output;

  auto* prepare = app.add_subcommand("prepare", "Load or generate the dataset into <out>/data");
  add_common(prepare, common);

  auto* train = app.add_subcommand("train-teacher", "Train the high-dimensional teacher");
  add_common(train, common);

  auto* distill = app.add_subcommand("distill", "Distill a low-dimensional student from the teacher");
  add_common(distill, common);
  distill->add_option("--teacher", teacher, "Teacher checkpoint (default <out>/teacher.ckpt)");

  auto* evaluate = app.add_subcommand("evaluate", "Rank a split with a checkpoint");
  add_common(evaluate, common);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate (default <out>/student.ckpt)");
  evaluate->add_option("--split", split, "train, valid or test")->check(CLI::IsMember({"train", "valid", "test"}));

  auto* cache = app.add_subcommand("cache-llm", "Pre-populate the LLM score cache");
  add_common(cache, common);
  cache->add_option("--teacher", teacher, "Teacher checkpoint (default <out>/teacher.ckpt)");
  cache->add_option("--queries", queries, "TSV of subject, relation, object, year [, slot]")->check(CLI::ExistingFile);

  auto* exporter = app.add_subcommand("export", "Dump embeddings as text");
  add_common(exporter, common);
  exporter->add_option("--checkpoint", checkpoint, "Checkpoint to export (default <out>/student.ckpt)");
  exporter->add_option("-o,--output", output, "Output file (default <out>/<checkpoint>_embeddings.txt)");

  CLI11_PARSE(app, argc, argv);

  tkgd_config* cfg = nullptr;
  tkgd_status st = open_config(common, &cfg);
  if (st != TKGD_OK) {
    tkgd_config_free(cfg);
    return report_failure(st);
  }

  if (prepare->parsed()) {
    st = tkgd_prepare(cfg);
  } else if (train->parsed()) {
    st = tkgd_train_teacher(cfg);
  } else if (distill->parsed()) {
    st = tkgd_distill(cfg, or_null(teacher));
  } else if (evaluate->parsed()) {
    tkgd_report* report = nullptr;
    st = tkgd_evaluate(cfg, or_null(checkpoint), split.c_str(), &report);
    tkgd_report_free(report);
  } else if (cache->parsed()) {
    st = tkgd_cache_llm(cfg, or_null(teacher), or_null(queries), nullptr);
  } else if (exporter->parsed()) {
    st = tkgd_export(cfg, or_null(checkpoint), or_null(output));
  }
  tkgd_config_free(cfg);
  return st == TKGD_OK ? 0 : report_failure(st);
}
