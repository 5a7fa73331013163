// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "digest.hpp"
#include "eval.hpp"
#include "graph.hpp"
#include "models.hpp"
#include "synthetic.hpp"
#include "trainer.hpp"

namespace tkgd {

enum class LlmMode { kNone, kRemote, kMockEcho, kMockRules, kMockNoise };

std::string_view to_string(LlmMode m);
LlmMode parse_llm_mode(std::string_view name);

struct LlmSettings {
  LlmMode mode = LlmMode::kNone;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::size_t topk = 10;
  std::size_t max_in_flight = 4;
  int retries = 3;
  std::size_t backoff_ms = 500;
  std::size_t timeout_s = 60;
  std::uint64_t noise_seed = 0;
};

struct SyntheticSettings {
  bool enabled = false;
  SyntheticSpec spec;
};

/// Everything a pipeline command needs. Defaults mirror the reference
/// training setup: teacher 400 / student 25 dimensions, batch 1024,
/// 10,000 epochs, temperature 7, Adagrad.
struct RunConfig {
  std::filesystem::path data_path;
  TimeField time_field = TimeField::kBegin;
  SyntheticSettings synthetic;

  Backbone backbone = Backbone::kTTransE;
  std::size_t teacher_dim = 400;
  std::size_t student_dim = 25;

  std::size_t batch_size = 1024;
  std::size_t max_epochs = 10000;
  double lr = 0.1;
  double eps = 1e-8;
  std::size_t negatives = 8;
  double margin = 1.0;
  std::size_t valid_every = 10;
  std::size_t valid_limit = 0;

  DistillConfig distill;  // phase epochs resolved from max_epochs when unset
  bool phase1_explicit = false;
  bool phase2_explicit = false;

  RankMode eval_mode = RankMode::kRaw;
  TiePolicy tie_policy = TiePolicy::kPessimistic;

  LlmSettings llm;

  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::filesystem::path out_dir = "run";

  /// Canonical `key = value` listing of every setting.
  std::string canonical() const;
  /// Digest of the settings that influence results (threads and out excluded).
  Digest digest() const;

  SupervisedConfig teacher_training() const;
  DistillConfig distillation() const;
};

/// Parses an INI-style file: `[section]` headers, `key = value` lines, `#`/`;`
/// comments. Absent keys keep their defaults; unknown keys are errors.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");

/// Applies one `section.key = value` override (as from the command line).
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Checks cross-field constraints; throws naming the offending key.
void validate(const RunConfig& cfg);

}  // namespace tkgd
