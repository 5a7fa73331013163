// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace tkgd {

namespace fs = std::filesystem;

namespace {

void say(const Printer& print, const std::string& line) {
  if (print) print(line);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

LogSink jsonl_sink(std::ofstream& out, const Printer& print) {
  return [&out, print](const TrainLogRecord& r) {
    out << log_to_line(r) << '\n';
    out.flush();
    if (r.valid_mrr) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "epoch %zu  phase %d  loss %.6f  valid MRR %.4f", r.epoch, r.phase,
                    r.train_loss, *r.valid_mrr);
      say(print, buf);
    }
  };
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

Checkpoint load_for(const RunConfig& cfg, const Dataset& data, const fs::path& path) {
  CheckpointExpectations expect;
  expect.dims = dims_for(cfg.backbone, 0, data.vocab);
  expect.dataset_digest = data.digest();
  return load_checkpoint(path, expect);
}

}  // namespace

fs::path RunPaths::report_file(const fs::path& checkpoint, Split split) const {
  return root / ("report_" + checkpoint.stem().string() + "_" + std::string(to_string(split)) + ".json");
}

RunData load_run_data(const RunConfig& cfg) {
  const RunPaths paths{cfg.out_dir};
  const LoadOptions options{cfg.time_field};
  RunData run;
  if (fs::exists(paths.data_dir() / "train.txt")) {
    run.data = load_quadruples(paths.data_dir(), LoadOptions{TimeField::kBegin});
    if (fs::exists(paths.rules_file())) run.rules = read_rules(paths.rules_file());
    return run;
  }
  if (cfg.synthetic.enabled) {
    auto synth = generate_synthetic(cfg.synthetic.spec);
    run.data = std::move(synth.data);
    run.rules = std::move(synth.rules);
    return run;
  }
  if (cfg.data_path.empty()) {
    fail(ErrorCode::kConfig, "config key 'data.path' is not set (and synthetic.enabled is false)");
  }
  run.data = load_quadruples(cfg.data_path, options);
  if (fs::exists(cfg.data_path / "rules.tsv")) run.rules = read_rules(cfg.data_path / "rules.tsv");
  return run;
}

LlmHandle make_llm(const RunConfig& cfg, const RunData& run, const ModelParams<float>* task_teacher) {
  LlmHandle h;
  switch (cfg.llm.mode) {
    case LlmMode::kNone:
      break;
    case LlmMode::kMockEcho:
      if (task_teacher == nullptr) fail(ErrorCode::kConfig, "llm.mode mock-echo needs a teacher checkpoint");
      h.teacher = mock_teacher(MockMode::kEchoTeacher, task_teacher);
      break;
    case LlmMode::kMockRules:
      if (!run.rules) fail(ErrorCode::kConfig, "llm.mode mock-rules needs a rules.tsv next to the dataset");
      h.rules = std::make_unique<RuleIndex>(*run.rules, run.data.vocab);
      h.teacher = mock_teacher(MockMode::kPlantedRules, nullptr, h.rules.get());
      break;
    case LlmMode::kMockNoise:
      h.teacher = mock_teacher(MockMode::kNoise, nullptr, nullptr, cfg.llm.noise_seed);
      break;
    case LlmMode::kRemote: {
      RemoteOptions o;
      o.endpoint = cfg.llm.endpoint;
      o.model = cfg.llm.model;
      if (const char* key = std::getenv("TKGD_LLM_API_KEY")) o.api_key = key;
      o.max_retries = cfg.llm.retries;
      o.backoff = std::chrono::milliseconds(cfg.llm.backoff_ms);
      o.timeout = std::chrono::seconds(cfg.llm.timeout_s);
      h.teacher = remote_teacher(o);
      break;
    }
  }
  return h;
}

void run_prepare(const RunConfig& cfg, const Printer& print) {
  const RunPaths paths{cfg.out_dir};
  RunData run;
  if (cfg.synthetic.enabled) {
    auto synth = generate_synthetic(cfg.synthetic.spec);
    run.data = std::move(synth.data);
    run.rules = std::move(synth.rules);
  } else {
    if (cfg.data_path.empty()) fail(ErrorCode::kConfig, "config key 'data.path' is not set (and synthetic.enabled is false)");
    run.data = load_quadruples(cfg.data_path, LoadOptions{cfg.time_field});
    if (fs::exists(cfg.data_path / "rules.tsv")) run.rules = read_rules(cfg.data_path / "rules.tsv");
  }
  write_dataset(run.data, paths.data_dir());
  if (run.rules) write_rules(*run.rules, paths.rules_file());

  const auto& v = run.data.vocab;
  nlohmann::ordered_json summary;
  summary["entities"] = v.num_entities();
  summary["relations"] = v.num_relations();
  summary["time_buckets"] = v.num_times();
  summary["first_year"] = v.years().front();
  summary["last_year"] = v.years().back();
  summary["train"] = run.data.train.size();
  summary["valid"] = run.data.valid.size();
  summary["test"] = run.data.test.size();
  summary["dataset_digest"] = to_hex(run.data.digest());
  open_out(paths.summary_file()) << summary.dump(2) << '\n';
  say(print, "prepared " + paths.data_dir().string() + ": " + std::to_string(v.num_entities()) + " entities, " +
                 std::to_string(v.num_relations()) + " relations, " + std::to_string(v.num_times()) +
                 " time buckets, " + std::to_string(run.data.train.size()) + "/" +
                 std::to_string(run.data.valid.size()) + "/" + std::to_string(run.data.test.size()) +
                 " train/valid/test facts");
}

TrainResult run_train_teacher(const RunConfig& cfg, const Printer& print) {
  const RunPaths paths{cfg.out_dir};
  const RunData run = load_run_data(cfg);
  const auto dims = dims_for(cfg.backbone, cfg.teacher_dim, run.data.vocab);
  auto log = open_out(paths.teacher_log());
  say(print, "training " + std::string(to_string(cfg.backbone)) + " teacher, dim " + std::to_string(cfg.teacher_dim));
  TrainResult result = train_supervised(init_params<float>(dims, cfg.seed), run.data, cfg.teacher_training(),
                                        jsonl_sink(log, print));
  save_checkpoint(paths.teacher_checkpoint(), result.best, run.data.digest(), cfg.digest());
  say(print, "teacher: best valid MRR " + fixed(result.best_valid_mrr, 4) + " at epoch " +
                 std::to_string(result.best_epoch) + " -> " + paths.teacher_checkpoint().string());
  return result;
}

TrainResult run_distill(const RunConfig& cfg, const std::optional<fs::path>& teacher_checkpoint, const Printer& print) {
  const RunPaths paths{cfg.out_dir};
  const RunData run = load_run_data(cfg);
  const Checkpoint teacher = load_for(cfg, run.data, teacher_checkpoint.value_or(paths.teacher_checkpoint()));
  const DistillConfig dcfg = cfg.distillation();
  const bool needs_llm = dcfg.method == DistillMethod::kOurs && dcfg.lambda_llm > 0 && dcfg.phase2_epochs > 0;
  if (needs_llm && cfg.llm.mode == LlmMode::kNone) {
    fail(ErrorCode::kConfig, "config key 'llm.mode': distill.method 'ours' with lambda_llm > 0 needs an LLM teacher");
  }
  LlmHandle llm = needs_llm ? make_llm(cfg, run, &teacher.params) : LlmHandle{};
  std::optional<LlmCache> cache;
  if (llm.teacher) cache.emplace(paths.llm_cache());

  const auto dims = dims_for(cfg.backbone, cfg.student_dim, run.data.vocab);
  StudentState student = make_student(dims, teacher.params.dims, dcfg.method, cfg.seed);
  auto log = open_out(paths.distill_log());
  say(print, "distilling " + std::string(to_string(dcfg.method)) + " student, dim " + std::to_string(cfg.student_dim) +
                 " (teacher dim " + std::to_string(teacher.params.dims.dim) + ")");
  TrainResult result = distill_run(teacher.params, std::move(student), run.data, llm.teacher.get(),
                                   cache ? &*cache : nullptr, dcfg, jsonl_sink(log, print));
  save_checkpoint(paths.student_checkpoint(), result.best, run.data.digest(), cfg.digest());
  say(print, "student: best valid MRR " + fixed(result.best_valid_mrr, 4) + " at epoch " +
                 std::to_string(result.best_epoch) + ", " + std::to_string(result.llm_calls) + " LLM calls -> " +
                 paths.student_checkpoint().string());
  return result;
}

std::string report_json(const RankingReport& r, Split split, const Digest& dataset_digest,
                        const Digest& checkpoint_digest, const Digest& config_digest) {
  nlohmann::ordered_json j;
  j["split"] = to_string(split);
  j["mode"] = to_string(r.mode);
  j["tie_policy"] = to_string(r.tie_policy);
  j["n_queries"] = r.n_queries;
  j["mrr"] = r.mrr;
  j["mr"] = r.mr;
  for (int k : kHitsAt) j["hits@" + std::to_string(k)] = r.hits.at(k);
  j["dataset_digest"] = to_hex(dataset_digest);
  j["checkpoint_digest"] = to_hex(checkpoint_digest);
  j["config_digest"] = to_hex(config_digest);
  return j.dump(2) + "\n";
}

std::string report_table(const RankingReport& r, Split split) {
  std::ostringstream o;
  char line[200];
  std::snprintf(line, sizeof(line), "%-6s %-9s %-12s %8s %8s %9s %8s %8s %8s\n", "split", "mode", "ties", "queries",
                "MRR", "MR", "Hits@1", "Hits@3", "Hits@10");
  o << line;
  std::snprintf(line, sizeof(line), "%-6s %-9s %-12s %8zu %8.2f %9.2f %8.2f %8.2f %8.2f\n",
                std::string(to_string(split)).c_str(), std::string(to_string(r.mode)).c_str(),
                std::string(to_string(r.tie_policy)).c_str(), r.n_queries, 100 * r.mrr, r.mr, 100 * r.hits.at(1),
                100 * r.hits.at(3), 100 * r.hits.at(10));
  o << line;
  return o.str();
}

EvaluationOutput run_evaluate(const RunConfig& cfg, const fs::path& checkpoint, Split split, const Printer& print) {
  const RunPaths paths{cfg.out_dir};
  const RunData run = load_run_data(cfg);
  const Checkpoint ck = load_for(cfg, run.data, checkpoint);
  EvaluationOutput out;
  out.report = evaluate(ck.params, run.data, split, cfg.eval_mode, cfg.tie_policy, cfg.threads);
  out.json = report_json(out.report, split, run.data.digest(), ck.file_digest, cfg.digest());
  out.table = report_table(out.report, split);
  out.report_path = paths.report_file(checkpoint, split);
  open_out(out.report_path) << out.json;
  say(print, out.table);
  return out;
}

namespace {

std::vector<std::pair<Quadruple, Slot>> read_queries(const fs::path& file, const Vocabulary& vocab) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::kIo, "cannot open query file " + file.string());
  std::vector<std::pair<Quadruple, Slot>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, '\t');) f.push_back(tok);
    const std::string where = file.string() + ":" + std::to_string(lineno);
    if (f.size() < 4) fail(ErrorCode::kParse, where + ": expected subject, relation, object, year [, slot]");
    const auto s = vocab.find_entity(f[0]);
    const auto p = vocab.find_relation(f[1]);
    const auto o = vocab.find_entity(f[2]);
    if (!s || !o) fail(ErrorCode::kParse, where + ": unknown entity");
    if (!p) fail(ErrorCode::kParse, where + ": unknown relation '" + f[1] + "'");
    const auto year = parse_year(f[3]);
    if (!year) fail(ErrorCode::kParse, where + ": query year must be concrete");
    const Quadruple q{*s, *p, *o, vocab.clamp_year(*year)};
    if (f.size() >= 5 && !f[4].empty()) {
      if (f[4] == "object") out.emplace_back(q, Slot::kObject);
      else if (f[4] == "subject") out.emplace_back(q, Slot::kSubject);
      else fail(ErrorCode::kParse, where + ": slot must be 'object' or 'subject'");
    } else {
      out.emplace_back(q, Slot::kObject);
      out.emplace_back(q, Slot::kSubject);
    }
  }
  return out;
}

}  // namespace

std::size_t run_cache_llm(const RunConfig& cfg, const std::optional<fs::path>& teacher_checkpoint,
                          const std::optional<fs::path>& queries, const Printer& print) {
  const RunPaths paths{cfg.out_dir};
  if (cfg.llm.mode == LlmMode::kNone) fail(ErrorCode::kConfig, "config key 'llm.mode' is 'none'; nothing to cache");
  const RunData run = load_run_data(cfg);
  const Checkpoint teacher = load_for(cfg, run.data, teacher_checkpoint.value_or(paths.teacher_checkpoint()));
  LlmHandle llm = make_llm(cfg, run, &teacher.params);
  LlmCache cache(paths.llm_cache());

  std::vector<std::pair<Quadruple, Slot>> todo;
  if (queries) {
    todo = read_queries(*queries, run.data.vocab);
  } else {
    for (const auto& q : run.data.train) {
      todo.emplace_back(q, Slot::kObject);
      todo.emplace_back(q, Slot::kSubject);
    }
  }
  std::vector<EntityId> all(run.data.vocab.num_entities());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<EntityId>(i);
  std::vector<LlmQuery> prompts;
  prompts.reserve(todo.size());
  for (const auto& [q, slot] : todo) {
    const auto scores = score_slot(teacher.params, q, slot, all);
    std::vector<double> wide(scores.begin(), scores.end());
    const auto top = top_k_indices(wide, cfg.llm.topk);
    std::vector<EntityId> cands(top.begin(), top.end());
    prompts.push_back(build_prompt(q, slot, cands, run.data.vocab));
  }
  const std::size_t before = llm.teacher->calls();
  const auto results = score_many(*llm.teacher, prompts, cache, cfg.llm.max_in_flight);
  const std::size_t calls = llm.teacher->calls() - before;
  std::size_t hits = 0, fallbacks = 0;
  for (const auto& r : results) {
    hits += r.from_cache ? 1 : 0;
    fallbacks += r.fallback ? 1 : 0;
  }
  say(print, std::to_string(prompts.size()) + " queries: " + std::to_string(hits) + " cached, " +
                 std::to_string(calls) + " LLM calls, " + std::to_string(fallbacks) + " unparseable -> " +
                 paths.llm_cache().string());
  return calls;
}

void run_export(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& output, const Printer& print) {
  const RunData run = load_run_data(cfg);
  const Checkpoint ck = load_for(cfg, run.data, checkpoint);
  const auto& p = ck.params;
  const auto& v = run.data.vocab;
  auto out = open_out(output);
  out << "# backbone " << to_string(p.dims.backbone) << " dim " << p.dims.dim << '\n';
  auto dump = [&out](const ParamTensor<float>& t, const std::string& section, auto label) {
    out << '[' << section << "]\n";
    char buf[32];
    for (std::size_t r = 0; r < t.rows; ++r) {
      out << label(r);
      for (float x : t.row(r)) {
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(x));
        out << '\t' << buf;
      }
      out << '\n';
    }
  };
  auto index = [](std::size_t r) { return std::to_string(r); };
  dump(p.entity(), "entity", [&](std::size_t r) { return sanitize_name(v.entity_name(static_cast<EntityId>(r))); });
  if (p.dims.backbone == Backbone::kTTransE) {
    dump(p.relation(), "relation", [&](std::size_t r) { return sanitize_name(v.relation_name(static_cast<RelationId>(r))); });
    dump(p.time(), "time", [&](std::size_t r) { return std::to_string(v.year(static_cast<TimeId>(r))); });
  } else {
    dump(p.token(), "token", [&](std::size_t r) {
      return r < v.num_relations() ? sanitize_name(v.relation_name(static_cast<RelationId>(r)))
                                   : "digit_" + std::to_string(r - v.num_relations());
    });
    dump(p.lstm_w(), "lstm_w", index);
    dump(p.lstm_u(), "lstm_u", index);
    dump(p.lstm_b(), "lstm_b", index);
  }
  if (!out) fail(ErrorCode::kIo, "short write to " + output.string());
  say(print, "wrote " + output.string());
}

}  // namespace tkgd
