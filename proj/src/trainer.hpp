// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eval.hpp"
#include "graph.hpp"
#include "llm.hpp"
#include "losses.hpp"
#include "models.hpp"

namespace tkgd {

struct TrainLogRecord {
  std::size_t epoch = 0;
  int phase = 1;
  std::string method;
  double train_loss = 0.0;
  std::optional<double> valid_mrr;
  std::size_t llm_calls = 0;
};

std::string log_to_line(const TrainLogRecord& r);

using LogSink = std::function<void(const TrainLogRecord&)>;

struct ValidationConfig {
  std::size_t every = 10;  // epochs between validation passes; the final epoch is always validated
  std::size_t limit = 0;   // max validation facts (0 = all)
  RankMode mode = RankMode::kRaw;
  TiePolicy tie_policy = TiePolicy::kPessimistic;
  std::size_t threads = 1;
};

struct SupervisedConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 1024;
  std::size_t negatives = 8;
  double margin = 1.0;
  double lr = 0.1;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  ValidationConfig validation;
};

struct TrainResult {
  ModelParams<float> best;  // best-validation parameters
  std::vector<TrainLogRecord> log;
  double best_valid_mrr = 0.0;
  std::size_t best_epoch = 0;
  std::size_t llm_calls = 0;
};

/// Backbone training with sampled negatives and Adagrad (teacher, or a
/// from-scratch student).
TrainResult train_supervised(ModelParams<float> params, const Dataset& data, const SupervisedConfig& cfg,
                             const LogSink& sink = {});

enum class DistillMethod { kOurs, kBkd, kFitnet, kRkd };

std::string_view to_string(DistillMethod m);
DistillMethod parse_distill_method(std::string_view name);

struct DistillConfig {
  DistillMethod method = DistillMethod::kOurs;
  double tau = 7.0;
  double alpha_kd = 0.9;
  double lambda_llm = 0.5;
  double beta = 0.1;
  double delta = 1.0;
  std::size_t phase1_epochs = 80;
  std::size_t phase2_epochs = 20;
  std::size_t llm_topk = 10;
  std::size_t llm_max_in_flight = 4;
  double hint_weight = 1.0;
  double rkd_weight = 1.0;
  std::size_t rkd_batch = 16;
  std::size_t batch_size = 1024;
  double lr = 0.1;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  ValidationConfig validation;
};

void validate(const DistillConfig& cfg);

struct StudentState {
  ModelParams<float> params;
  std::optional<ParamTensor<float>> fitnet_regressor;  // d_student x d_teacher
};

/// Student with a regressor iff `method` is FitNet.
StudentState make_student(const ModelDims& dims, const ModelDims& teacher_dims, DistillMethod method,
                          std::uint64_t seed);

/// Two-phase distillation. Phase 1 minimises L1 + beta*L3; phase 2 adds
/// lambda_llm * L2 on the teacher's top-k candidates rescored by `llm`.
/// Baselines run phase1+phase2 epochs of their own objective in one stage.
TrainResult distill_run(const ModelParams<float>& teacher, StudentState student, const Dataset& data,
                        LlmTeacher* llm, LlmCache* cache, const DistillConfig& cfg, const LogSink& sink = {});

/// Indices of the `k` highest scores, descending (ties by lower index).
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k);

}  // namespace tkgd
