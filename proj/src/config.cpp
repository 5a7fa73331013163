// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "error.hpp"

namespace tkgd {

std::string_view to_string(LlmMode m) {
  switch (m) {
    case LlmMode::kNone: return "none";
    case LlmMode::kRemote: return "remote";
    case LlmMode::kMockEcho: return "mock-echo";
    case LlmMode::kMockRules: return "mock-rules";
    case LlmMode::kMockNoise: return "mock-noise";
  }
  return "?";
}

LlmMode parse_llm_mode(std::string_view name) {
  for (auto m : {LlmMode::kNone, LlmMode::kRemote, LlmMode::kMockEcho, LlmMode::kMockRules, LlmMode::kMockNoise}) {
    if (name == to_string(m)) return m;
  }
  fail(ErrorCode::kConfig, "unknown llm.mode '" + std::string(name) +
                               "' (expected none|remote|mock-echo|mock-rules|mock-noise)");
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void type_error(std::string_view key, std::string_view value, std::string_view expected) {
  fail(ErrorCode::kConfig, "config key '" + std::string(key) + "': expected " + std::string(expected) + ", got '" +
                               std::string(value) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    type_error(key, value, std::is_floating_point_v<T> ? "a number" : "a non-negative integer");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  type_error(key, value, "a boolean");
}

std::string unquote(std::string value) {
  if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') || (value.front() == '\'' && value.back() == '\''))) {
    return value.substr(1, value.size() - 2);
  }
  return value;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto sz = [](auto get) {
      return [get](RunConfig& c, std::string_view k, std::string_view v) { get(c) = parse_number<std::size_t>(k, v); };
    };
    auto real = [](auto get) {
      return [get](RunConfig& c, std::string_view k, std::string_view v) { get(c) = parse_number<double>(k, v); };
    };
    t["data.path"] = [](RunConfig& c, std::string_view, std::string_view v) { c.data_path = std::string(v); };
    t["data.time_field"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      if (v == "begin") c.time_field = TimeField::kBegin;
      else if (v == "end") c.time_field = TimeField::kEnd;
      else type_error(k, v, "begin|end");
    };
    t["synthetic.enabled"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.synthetic.enabled = parse_bool(k, v); };
    t["synthetic.entities"] = sz([](RunConfig& c) -> std::size_t& { return c.synthetic.spec.n_entities; });
    t["synthetic.relations"] = sz([](RunConfig& c) -> std::size_t& { return c.synthetic.spec.n_relations; });
    t["synthetic.buckets"] = sz([](RunConfig& c) -> std::size_t& { return c.synthetic.spec.n_buckets; });
    t["synthetic.facts"] = sz([](RunConfig& c) -> std::size_t& { return c.synthetic.spec.n_facts; });
    t["synthetic.pattern_strength"] = real([](RunConfig& c) -> double& { return c.synthetic.spec.pattern_strength; });
    t["synthetic.seed"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.synthetic.spec.seed = parse_number<std::uint64_t>(k, v);
    };

    t["model.backbone"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      try {
        c.backbone = parse_backbone(v);
      } catch (const Error&) {
        type_error(k, v, "ttranse|tadistmult");
      }
    };
    t["model.teacher_dim"] = sz([](RunConfig& c) -> std::size_t& { return c.teacher_dim; });
    t["model.student_dim"] = sz([](RunConfig& c) -> std::size_t& { return c.student_dim; });

    t["train.batch_size"] = sz([](RunConfig& c) -> std::size_t& { return c.batch_size; });
    t["train.max_epochs"] = sz([](RunConfig& c) -> std::size_t& { return c.max_epochs; });
    t["train.lr"] = real([](RunConfig& c) -> double& { return c.lr; });
    t["train.eps"] = real([](RunConfig& c) -> double& { return c.eps; });
    t["train.negatives"] = sz([](RunConfig& c) -> std::size_t& { return c.negatives; });
    t["train.margin"] = real([](RunConfig& c) -> double& { return c.margin; });
    t["train.valid_every"] = sz([](RunConfig& c) -> std::size_t& { return c.valid_every; });
    t["train.valid_limit"] = sz([](RunConfig& c) -> std::size_t& { return c.valid_limit; });

    t["distill.method"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      try {
        c.distill.method = parse_distill_method(v);
      } catch (const Error&) {
        type_error(k, v, "ours|bkd|fitnet|rkd");
      }
    };
    t["distill.tau"] = real([](RunConfig& c) -> double& { return c.distill.tau; });
    t["distill.alpha_kd"] = real([](RunConfig& c) -> double& { return c.distill.alpha_kd; });
    t["distill.lambda_llm"] = real([](RunConfig& c) -> double& { return c.distill.lambda_llm; });
    t["distill.beta"] = real([](RunConfig& c) -> double& { return c.distill.beta; });
    t["distill.delta"] = real([](RunConfig& c) -> double& { return c.distill.delta; });
    t["distill.phase1_epochs"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.distill.phase1_epochs = parse_number<std::size_t>(k, v);
      c.phase1_explicit = true;
    };
    t["distill.phase2_epochs"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.distill.phase2_epochs = parse_number<std::size_t>(k, v);
      c.phase2_explicit = true;
    };
    t["distill.hint_weight"] = real([](RunConfig& c) -> double& { return c.distill.hint_weight; });
    t["distill.rkd_weight"] = real([](RunConfig& c) -> double& { return c.distill.rkd_weight; });
    t["distill.rkd_batch"] = sz([](RunConfig& c) -> std::size_t& { return c.distill.rkd_batch; });

    t["eval.mode"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      if (v == "raw") c.eval_mode = RankMode::kRaw;
      else if (v == "filtered") c.eval_mode = RankMode::kFiltered;
      else type_error(k, v, "raw|filtered");
    };
    t["eval.tie_policy"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      try {
        c.tie_policy = parse_tie_policy(v);
      } catch (const Error&) {
        type_error(k, v, "pessimistic|optimistic|mean");
      }
    };

    t["llm.mode"] = [](RunConfig& c, std::string_view, std::string_view v) { c.llm.mode = parse_llm_mode(v); };
    t["llm.endpoint"] = [](RunConfig& c, std::string_view, std::string_view v) { c.llm.endpoint = std::string(v); };
    t["llm.model"] = [](RunConfig& c, std::string_view, std::string_view v) { c.llm.model = std::string(v); };
    t["llm.topk"] = sz([](RunConfig& c) -> std::size_t& { return c.llm.topk; });
    t["llm.max_in_flight"] = sz([](RunConfig& c) -> std::size_t& { return c.llm.max_in_flight; });
    t["llm.retries"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.llm.retries = parse_number<int>(k, v); };
    t["llm.backoff_ms"] = sz([](RunConfig& c) -> std::size_t& { return c.llm.backoff_ms; });
    t["llm.timeout_s"] = sz([](RunConfig& c) -> std::size_t& { return c.llm.timeout_s; });
    t["llm.noise_seed"] = [](RunConfig& c, std::string_view k, std::string_view v) {
      c.llm.noise_seed = parse_number<std::uint64_t>(k, v);
    };

    t["run.seed"] = [](RunConfig& c, std::string_view k, std::string_view v) { c.seed = parse_number<std::uint64_t>(k, v); };
    t["run.threads"] = sz([](RunConfig& c) -> std::size_t& { return c.threads; });
    t["run.out"] = [](RunConfig& c, std::string_view, std::string_view v) { c.out_dir = std::string(v); };
    return t;
  }();
  return table;
}

// Bare keys resolve when exactly one section defines them.
std::string resolve_key(std::string_view key) {
  if (key.find('.') != std::string_view::npos) return std::string(key);
  std::string match;
  for (const auto& [full, _] : setters()) {
    if (full.substr(full.find('.') + 1) == key) {
      if (!match.empty()) fail(ErrorCode::kConfig, "config key '" + std::string(key) + "' is ambiguous; use section.key");
      match = full;
    }
  }
  return match.empty() ? std::string(key) : match;
}

}  // namespace

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  const std::string full = resolve_key(key);
  auto it = setters().find(full);
  if (it == setters().end()) fail(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
  it->second(cfg, full, value);
}

RunConfig parse_config_text(std::string_view text, std::string_view origin) {
  RunConfig cfg;
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::kConfig, std::string(origin) + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfig, std::string(origin) + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    value = unquote(value);
    try {
      apply_setting(cfg, section.empty() ? key : section + "." + key, value);
    } catch (const Error& e) {
      fail(e.code(), std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config_text(ss.str(), path.string());
  if (!cfg.data_path.empty() && cfg.data_path.is_relative()) cfg.data_path = path.parent_path() / cfg.data_path;
  return cfg;
}

void validate(const RunConfig& c) {
  auto need = [](bool ok, const char* key, const std::string& what) {
    if (!ok) fail(ErrorCode::kConfig, std::string("config key '") + key + "': " + what);
  };
  need(c.teacher_dim >= 1, "model.teacher_dim", "must be >= 1");
  need(c.student_dim >= 1, "model.student_dim", "must be >= 1");
  need(c.batch_size >= 1, "train.batch_size", "must be >= 1");
  need(c.lr > 0, "train.lr", "must be > 0");
  need(c.eps >= 0, "train.eps", "must be >= 0");
  need(c.negatives >= 1, "train.negatives", "must be >= 1");
  need(c.margin > 0, "train.margin", "must be > 0");
  need(c.distill.tau > 0, "distill.tau", "must be > 0");
  need(c.distill.alpha_kd >= 0 && c.distill.alpha_kd <= 1, "distill.alpha_kd", "must lie in [0, 1]");
  need(c.distill.delta > 0, "distill.delta", "must be > 0");
  need(c.distill.lambda_llm >= 0, "distill.lambda_llm", "must be >= 0");
  need(c.distill.beta >= 0, "distill.beta", "must be >= 0");
  need(c.distill.hint_weight >= 0, "distill.hint_weight", "must be >= 0");
  need(c.distill.rkd_weight >= 0, "distill.rkd_weight", "must be >= 0");
  need(c.distill.rkd_batch >= 3, "distill.rkd_batch", "must be >= 3");
  need(c.llm.topk >= 1 && c.llm.topk <= kMaxPromptCandidates, "llm.topk", "must lie in [1, 50]");
  need(c.llm.max_in_flight >= 1, "llm.max_in_flight", "must be >= 1");
  need(c.llm.retries >= 0, "llm.retries", "must be >= 0");
  need(c.threads >= 1, "run.threads", "must be >= 1");
  need(c.synthetic.spec.pattern_strength >= 0 && c.synthetic.spec.pattern_strength <= 1,
       "synthetic.pattern_strength", "must lie in [0, 1]");
  if (c.synthetic.enabled) {
    need(c.synthetic.spec.n_entities >= 1, "synthetic.entities", "must be >= 1");
    need(c.synthetic.spec.n_relations >= 1, "synthetic.relations", "must be >= 1");
    need(c.synthetic.spec.n_buckets >= 1, "synthetic.buckets", "must be >= 1");
    need(c.synthetic.spec.n_facts >= 1, "synthetic.facts", "must be >= 1");
  }
  if (c.teacher_dim < c.student_dim) {
    warn("teacher_dim (" + std::to_string(c.teacher_dim) + ") is smaller than student_dim (" +
         std::to_string(c.student_dim) + "); distillation assumes a larger teacher");
  }
}

std::string RunConfig::canonical() const {
  std::ostringstream o;
  o.precision(17);
  o << "data.path = " << data_path.string() << "\n";
  o << "data.time_field = " << (time_field == TimeField::kBegin ? "begin" : "end") << "\n";
  o << "synthetic.enabled = " << (synthetic.enabled ? "true" : "false") << "\n";
  o << "synthetic.entities = " << synthetic.spec.n_entities << "\n";
  o << "synthetic.relations = " << synthetic.spec.n_relations << "\n";
  o << "synthetic.buckets = " << synthetic.spec.n_buckets << "\n";
  o << "synthetic.facts = " << synthetic.spec.n_facts << "\n";
  o << "synthetic.pattern_strength = " << synthetic.spec.pattern_strength << "\n";
  o << "synthetic.seed = " << synthetic.spec.seed << "\n";
  o << "model.backbone = " << to_string(backbone) << "\n";
  o << "model.teacher_dim = " << teacher_dim << "\n";
  o << "model.student_dim = " << student_dim << "\n";
  o << "train.batch_size = " << batch_size << "\n";
  o << "train.max_epochs = " << max_epochs << "\n";
  o << "train.lr = " << lr << "\n";
  o << "train.eps = " << eps << "\n";
  o << "train.negatives = " << negatives << "\n";
  o << "train.margin = " << margin << "\n";
  o << "train.valid_every = " << valid_every << "\n";
  o << "train.valid_limit = " << valid_limit << "\n";
  const auto d = distillation();
  o << "distill.method = " << to_string(d.method) << "\n";
  o << "distill.tau = " << d.tau << "\n";
  o << "distill.alpha_kd = " << d.alpha_kd << "\n";
  o << "distill.lambda_llm = " << d.lambda_llm << "\n";
  o << "distill.beta = " << d.beta << "\n";
  o << "distill.delta = " << d.delta << "\n";
  o << "distill.phase1_epochs = " << d.phase1_epochs << "\n";
  o << "distill.phase2_epochs = " << d.phase2_epochs << "\n";
  o << "distill.hint_weight = " << d.hint_weight << "\n";
  o << "distill.rkd_weight = " << d.rkd_weight << "\n";
  o << "distill.rkd_batch = " << d.rkd_batch << "\n";
  o << "eval.mode = " << to_string(eval_mode) << "\n";
  o << "eval.tie_policy = " << to_string(tie_policy) << "\n";
  o << "llm.mode = " << to_string(llm.mode) << "\n";
  o << "llm.endpoint = " << llm.endpoint << "\n";
  o << "llm.model = " << llm.model << "\n";
  o << "llm.topk = " << llm.topk << "\n";
  o << "llm.noise_seed = " << llm.noise_seed << "\n";
  o << "run.seed = " << seed << "\n";
  return o.str();
}

Digest RunConfig::digest() const { return sha256(canonical()); }

SupervisedConfig RunConfig::teacher_training() const {
  SupervisedConfig s;
  s.epochs = max_epochs;
  s.batch_size = batch_size;
  s.negatives = negatives;
  s.margin = margin;
  s.lr = lr;
  s.eps = eps;
  s.seed = seed;
  s.validation = ValidationConfig{valid_every, valid_limit, eval_mode, tie_policy, threads};
  return s;
}

DistillConfig RunConfig::distillation() const {
  DistillConfig d = distill;
  // 80% alignment with the task teacher, 20% with both teachers; a phase
  // given alone takes its count and the other one fills up max_epochs
  if (!phase1_explicit && !phase2_explicit) {
    d.phase2_epochs = max_epochs / 5;
    d.phase1_epochs = max_epochs - d.phase2_epochs;
  } else if (!phase1_explicit) {
    d.phase1_epochs = max_epochs > d.phase2_epochs ? max_epochs - d.phase2_epochs : 0;
  } else if (!phase2_explicit) {
    d.phase2_epochs = max_epochs > d.phase1_epochs ? max_epochs - d.phase1_epochs : 0;
  }
  d.llm_topk = llm.topk;
  d.llm_max_in_flight = llm.max_in_flight;
  d.batch_size = batch_size;
  d.lr = lr;
  d.eps = eps;
  d.seed = seed;
  d.validation = ValidationConfig{valid_every, valid_limit, eval_mode, tie_policy, threads};
  return d;
}

}  // namespace tkgd
