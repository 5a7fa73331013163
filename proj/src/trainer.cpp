// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>
#include <unordered_set>

#include "error.hpp"
#include "random.hpp"

namespace tkgd {

std::string log_to_line(const TrainLogRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["phase"] = r.phase;
  j["method"] = r.method;
  j["train_loss"] = r.train_loss;
  if (r.valid_mrr) j["valid_mrr"] = *r.valid_mrr;
  j["llm_calls"] = r.llm_calls;
  return j.dump();
}

std::string_view to_string(DistillMethod m) {
  switch (m) {
    case DistillMethod::kOurs: return "ours";
    case DistillMethod::kBkd: return "bkd";
    case DistillMethod::kFitnet: return "fitnet";
    case DistillMethod::kRkd: return "rkd";
  }
  return "?";
}

DistillMethod parse_distill_method(std::string_view name) {
  if (name == "ours") return DistillMethod::kOurs;
  if (name == "bkd") return DistillMethod::kBkd;
  if (name == "fitnet") return DistillMethod::kFitnet;
  if (name == "rkd") return DistillMethod::kRkd;
  fail(ErrorCode::kInvalidArgument, "unknown distillation method '" + std::string(name) + "' (expected ours|bkd|fitnet|rkd)");
}

void validate(const DistillConfig& cfg) {
  auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, what); };
  if (!(cfg.tau > 0)) bad("tau must be > 0");
  if (!(cfg.alpha_kd >= 0 && cfg.alpha_kd <= 1)) bad("alpha_kd must lie in [0, 1]");
  if (!(cfg.delta > 0)) bad("delta must be > 0");
  if (cfg.lambda_llm < 0 || cfg.beta < 0 || cfg.hint_weight < 0 || cfg.rkd_weight < 0) bad("loss weights must be >= 0");
  if (cfg.batch_size < 1) bad("batch_size must be >= 1");
  if (cfg.llm_topk < 1 || cfg.llm_topk > kMaxPromptCandidates) bad("llm_topk must lie in [1, 50]");
  if (cfg.rkd_batch < 3) bad("rkd_batch must be >= 3");
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
  return v;
}

std::span<const Quadruple> validation_facts(const Dataset& data, const ValidationConfig& v) {
  std::span<const Quadruple> facts = data.valid;
  if (v.limit != 0 && facts.size() > v.limit) facts = facts.first(v.limit);
  return facts;
}

bool due(std::size_t epoch, std::size_t total, const ValidationConfig& v) {
  return epoch == total || (v.every != 0 && epoch % v.every == 0);
}

void check_finite(double loss, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    fail(ErrorCode::kNumeric, "training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(batch));
  }
}

std::vector<double> widen(const std::vector<float>& x) { return {x.begin(), x.end()}; }

// Tracks the best validation MRR; without a validation split the last epoch wins.
struct BestTracker {
  bool has_valid;
  bool seen = false;
  double best_mrr = 0.0;
  std::size_t best_epoch = 0;

  void offer(const ModelParams<float>& params, std::size_t epoch, std::optional<double> mrr, ModelParams<float>& best) {
    if (!has_valid) {
      best = params;
      best_epoch = epoch;
      return;
    }
    if (mrr && (!seen || *mrr > best_mrr)) {
      seen = true;
      best_mrr = *mrr;
      best_epoch = epoch;
      best = params;
    }
  }
};

}  // namespace

TrainResult train_supervised(ModelParams<float> params, const Dataset& data, const SupervisedConfig& cfg,
                             const LogSink& sink) {
  if (cfg.batch_size < 1) fail(ErrorCode::kConfig, "batch_size must be >= 1");
  if (cfg.negatives < 1) fail(ErrorCode::kConfig, "negatives must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  Gradients<float> grads(params.dims);
  const auto valid = validation_facts(data, cfg.validation);
  TrainResult result;
  result.best = params;
  BestTracker tracker{!valid.empty()};
  const SupervisedLoss spec{cfg.margin};

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(data.train.size(), rng);
    double total = 0;
    std::size_t batch_id = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      grads.clear();
      double batch_loss = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const auto& q = data.train[order[k]];
        const auto negs = sample_negatives(q, cfg.negatives, data.vocab.num_entities(), rng);
        batch_loss += backbone_loss<float>(params, q, negs, spec, &grads, weight);
      }
      check_finite(batch_loss, epoch, batch_id);
      grads.apply_adagrad(params, cfg.lr, cfg.eps);
      total += batch_loss;
    }
    TrainLogRecord rec;
    rec.epoch = epoch;
    rec.phase = 1;
    rec.method = "supervised";
    rec.train_loss = total / static_cast<double>(std::max<std::size_t>(1, data.train.size()));
    if (!valid.empty() && due(epoch, cfg.epochs, cfg.validation)) {
      rec.valid_mrr = evaluate(params, data, valid, cfg.validation.mode, cfg.validation.tie_policy,
                               cfg.validation.threads)
                          .mrr;
    }
    tracker.offer(params, epoch, rec.valid_mrr, result.best);
    result.log.push_back(rec);
    if (sink) sink(rec);
  }
  result.best_valid_mrr = tracker.best_mrr;
  result.best_epoch = tracker.best_epoch;
  return result;
}

StudentState make_student(const ModelDims& dims, const ModelDims& teacher_dims, DistillMethod method,
                          std::uint64_t seed) {
  StudentState st;
  st.params = init_params<float>(dims, seed);
  if (method == DistillMethod::kFitnet) {
    ParamTensor<float> reg(dims.dim, teacher_dims.dim);
    std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims.dim));
    for (auto& v : reg.values) v = static_cast<float>(uniform_real(rng, -bound, bound));
    st.fitnet_regressor = std::move(reg);
  }
  return st;
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  idx.resize(k);
  return idx;
}

namespace {

struct QueryWork {
  Quadruple q;
  Slot slot;
  std::vector<double> teacher;
  std::vector<double> student;
  std::vector<double> dstudent;
  std::vector<std::size_t> topk;
};

// Unique entities touched by a batch, first-appearance order.
std::vector<EntityId> batch_entities(std::span<const Quadruple> facts, std::span<const std::size_t> order) {
  std::vector<EntityId> out;
  std::unordered_set<EntityId> seen;
  for (auto i : order) {
    for (EntityId e : {facts[i].s, facts[i].o}) {
      if (seen.insert(e).second) out.push_back(e);
    }
  }
  return out;
}

std::vector<double> gather_rows(const ParamTensor<float>& table, std::span<const EntityId> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * table.cols);
  for (auto r : rows) {
    auto row = table.row(r);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace

TrainResult distill_run(const ModelParams<float>& teacher, StudentState student, const Dataset& data,
                        LlmTeacher* llm, LlmCache* cache, const DistillConfig& cfg, const LogSink& sink) {
  validate(cfg);
  const bool ours = cfg.method == DistillMethod::kOurs;
  const bool uses_llm = ours && cfg.lambda_llm > 0 && cfg.phase2_epochs > 0;
  if (uses_llm && llm == nullptr) {
    fail(ErrorCode::kInvalidArgument, "method 'ours' with lambda_llm > 0 needs an LLM teacher handle");
  }
  if (teacher.dims.backbone != student.params.dims.backbone) {
    fail(ErrorCode::kInvalidArgument, "teacher and student backbones differ");
  }
  if (teacher.dims.n_entities != data.vocab.num_entities() || student.params.dims.n_entities != data.vocab.num_entities()) {
    fail(ErrorCode::kInvalidArgument, "model entity tables do not match the dataset vocabulary");
  }
  if (cfg.method == DistillMethod::kFitnet && !student.fitnet_regressor) {
    fail(ErrorCode::kInvalidArgument, "FitNet distillation needs a regressor in the student state");
  }
  LlmCache local_cache;
  if (cache == nullptr) cache = &local_cache;

  auto& params = student.params;
  const std::size_t n_entities = data.vocab.num_entities();
  const std::size_t total_epochs = cfg.phase1_epochs + cfg.phase2_epochs;
  std::mt19937_64 rng(cfg.seed);
  Gradients<float> grads(params.dims);
  std::vector<float> reg_grad;
  const auto valid = validation_facts(data, cfg.validation);
  TrainResult result;
  result.best = params;
  BestTracker tracker{!valid.empty()};
  const std::size_t calls_before = llm ? llm->calls() : 0;

  std::vector<EntityId> all_entities(n_entities);
  std::iota(all_entities.begin(), all_entities.end(), 0);

  for (std::size_t epoch = 1; epoch <= total_epochs; ++epoch) {
    const int phase = (ours && epoch > cfg.phase1_epochs) ? 2 : 1;
    const bool align = phase == 2 && cfg.lambda_llm > 0;
    const auto order = shuffled_indices(data.train.size(), rng);
    double total = 0;
    std::size_t n_queries_epoch = 0;
    std::size_t batch_id = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      grads.clear();

      std::vector<QueryWork> work;
      work.reserve(batch.size() * 2);
      for (auto i : batch) {
        for (Slot slot : {Slot::kObject, Slot::kSubject}) {
          QueryWork w{data.train[i], slot, {}, {}, {}, {}};
          w.teacher = widen(score_slot(teacher, w.q, slot, all_entities));
          w.student = widen(score_slot(params, w.q, slot, all_entities));
          work.push_back(std::move(w));
        }
      }
      const double per_query = 1.0 / static_cast<double>(work.size());
      double batch_loss = 0;

      for (auto& w : work) {
        const std::size_t gt = slot_entity(w.q, w.slot);
        LossResult l1 = ours ? kd_soft_loss(w.teacher, w.student, gt, cfg.tau, cfg.alpha_kd)
                             : bkd_loss(w.teacher, w.student, cfg.tau);
        w.dstudent = std::move(l1.grad);
        double loss = l1.value;
        if (cfg.beta > 0) {
          const LossResult l3 = supervised_loss(w.student, gt);
          loss += cfg.beta * l3.value;
          for (std::size_t c = 0; c < n_entities; ++c) w.dstudent[c] += cfg.beta * l3.grad[c];
        }
        batch_loss += loss * per_query;
      }

      if (align) {
        std::vector<LlmQuery> prompts;
        prompts.reserve(work.size());
        for (auto& w : work) {
          w.topk = top_k_indices(w.teacher, cfg.llm_topk);
          std::vector<EntityId> cands(w.topk.begin(), w.topk.end());
          prompts.push_back(build_prompt(w.q, w.slot, cands, data.vocab));
        }
        const auto rescored = score_many(*llm, prompts, *cache, cfg.llm_max_in_flight);
        for (std::size_t k = 0; k < work.size(); ++k) {
          const auto& llm_scores = rescored[k].scores;
          if (rescored[k].fallback) continue;
          if (*std::max_element(llm_scores.begin(), llm_scores.end()) ==
              *std::min_element(llm_scores.begin(), llm_scores.end())) {
            continue;  // no ordering information
          }
          auto& w = work[k];
          std::vector<double> sub(w.topk.size());
          for (std::size_t j = 0; j < w.topk.size(); ++j) sub[j] = w.student[w.topk[j]];
          const LossResult l2 = normalized_alignment_loss(llm_scores, sub, cfg.delta);
          batch_loss += cfg.lambda_llm * l2.value * per_query;
          for (std::size_t j = 0; j < w.topk.size(); ++j) w.dstudent[w.topk[j]] += cfg.lambda_llm * l2.grad[j];
        }
      }

      for (auto& w : work) {
        std::vector<float> ds(w.dstudent.size());
        for (std::size_t c = 0; c < ds.size(); ++c) ds[c] = static_cast<float>(w.dstudent[c] * per_query);
        const auto pairs = slot_pairs(w.q, w.slot, all_entities);
        backprop_pairs<float>(params, w.q.p, w.q.t, pairs, ds, grads);
      }

      if (cfg.method == DistillMethod::kFitnet || cfg.method == DistillMethod::kRkd) {
        auto entities = batch_entities(data.train, batch);
        if (cfg.method == DistillMethod::kRkd && entities.size() > cfg.rkd_batch) entities.resize(cfg.rkd_batch);
        const auto s_rows = gather_rows(params.entity(), entities);
        const auto t_rows = gather_rows(teacher.entity(), entities);
        const MatrixView sv{s_rows, entities.size(), params.dims.dim};
        const MatrixView tv{t_rows, entities.size(), teacher.dims.dim};
        std::vector<double> d_rows;
        double weight = 0;
        if (cfg.method == DistillMethod::kFitnet) {
          auto& reg = *student.fitnet_regressor;
          const std::vector<double> reg_values(reg.values.begin(), reg.values.end());
          const auto hint = fitnet_hint_loss(sv, tv, MatrixView{reg_values, reg.rows, reg.cols});
          weight = cfg.hint_weight;
          batch_loss += weight * hint.value;
          d_rows = hint.d_student;
          reg_grad.assign(hint.d_regressor.size(), 0.0f);
          for (std::size_t k = 0; k < reg_grad.size(); ++k) reg_grad[k] = static_cast<float>(weight * hint.d_regressor[k]);
        } else if (entities.size() >= 3) {
          try {
            const auto rk = rkd_loss(sv, tv);
            weight = cfg.rkd_weight;
            batch_loss += weight * rk.value;
            d_rows = rk.d_student;
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kNumeric) throw;  // coincident batch: nothing to align
          }
        }
        for (std::size_t r = 0; r < entities.size() && !d_rows.empty(); ++r) {
          auto g = grads.row(0, entities[r]);
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += static_cast<float>(weight * d_rows[r * g.size() + k]);
        }
      }

      check_finite(batch_loss, epoch, batch_id);
      grads.apply_adagrad(params, cfg.lr, cfg.eps);
      if (cfg.method == DistillMethod::kFitnet && !reg_grad.empty()) {
        adagrad_step<float>(*student.fitnet_regressor, reg_grad, cfg.lr, cfg.eps);
      }
      total += batch_loss * static_cast<double>(work.size());
      n_queries_epoch += work.size();
    }

    TrainLogRecord rec;
    rec.epoch = epoch;
    rec.phase = phase;
    rec.method = std::string(to_string(cfg.method));
    rec.train_loss = total / static_cast<double>(std::max<std::size_t>(1, n_queries_epoch));
    rec.llm_calls = llm ? llm->calls() - calls_before : 0;
    if (!valid.empty() && due(epoch, total_epochs, cfg.validation)) {
      rec.valid_mrr =
          evaluate(params, data, valid, cfg.validation.mode, cfg.validation.tie_policy, cfg.validation.threads).mrr;
    }
    tracker.offer(params, epoch, rec.valid_mrr, result.best);
    result.log.push_back(rec);
    if (sink) sink(rec);
  }
  result.best_valid_mrr = tracker.best_mrr;
  result.best_epoch = tracker.best_epoch;
  result.llm_calls = llm ? llm->calls() - calls_before : 0;
  return result;
}

}  // namespace tkgd
