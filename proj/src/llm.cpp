// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "llm.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <future>
#include <json.hpp>
#include <random>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "random.hpp"

namespace tkgd {

using nlohmann::json;

std::string sanitize_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

LlmQuery build_prompt(const Quadruple& q, Slot slot, std::span<const EntityId> candidates, const Vocabulary& vocab) {
  if (candidates.empty()) fail(ErrorCode::kInvalidArgument, "build_prompt: empty candidate list");
  if (candidates.size() > kMaxPromptCandidates) {
    fail(ErrorCode::kInvalidArgument, "build_prompt: at most " + std::to_string(kMaxPromptCandidates) +
                                          " candidates fit the prompt budget, got " + std::to_string(candidates.size()));
  }
  if (!vocab.contains(q)) fail(ErrorCode::kInvalidArgument, "build_prompt: quadruple out of vocabulary bounds");
  LlmQuery lq;
  lq.query = q;
  lq.slot = slot;
  lq.candidates.assign(candidates.begin(), candidates.end());

  const std::string relation = sanitize_name(vocab.relation_name(q.p));
  const std::string year = std::to_string(vocab.year(q.t));
  const bool object = slot == Slot::kObject;
  const std::string known = sanitize_name(vocab.entity_name(object ? q.s : q.o));

  lq.system_prompt =
      "You are an expert on world history and temporal knowledge graphs. You judge how plausible candidate "
      "completions of a time-stamped fact are.";
  std::ostringstream u;
  if (object) {
    u << "Complete the temporal fact (" << known << ", " << relation << ", ?, " << year
      << ") by scoring each candidate object.\n";
    u << "Subject: " << known << "\n";
  } else {
    u << "Complete the temporal fact (?, " << relation << ", " << known << ", " << year
      << ") by scoring each candidate subject.\n";
    u << "Object: " << known << "\n";
  }
  u << "Relation: " << relation << "\n";
  u << "Year: " << year << "\n";
  u << "Missing slot: " << to_string(slot) << "\n\n";
  u << "Candidates:\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    u << (i + 1) << ". " << sanitize_name(vocab.entity_name(candidates[i])) << "\n";
  }
  u << "\nReply with exactly one line per candidate in the form `index: score`, where score is an integer from 0 "
       "(implausible) to 100 (certainly true). Output nothing else.\n";
  lq.user_prompt = u.str();
  lq.text = lq.system_prompt + "\n\n" + lq.user_prompt;
  lq.prompt_hash = sha256(lq.text);
  return lq;
}

ParsedScores parse_scores(std::string_view response, std::size_t n_candidates) {
  ParsedScores out;
  out.scores.assign(n_candidates, 50.0);
  std::vector<bool> seen(n_candidates, false);
  std::size_t start = 0;
  while (start <= response.size()) {
    auto end = response.find('\n', start);
    if (end == std::string_view::npos) end = response.size();
    std::string line(response.substr(start, end - start));
    start = end + 1;
    std::size_t k = 0;
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    std::size_t digits = k;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits == k || digits - k > 9) continue;
    const std::size_t index = std::stoul(line.substr(k, digits - k));
    k = digits;
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    if (k >= line.size() || (line[k] != ':' && line[k] != '.' && line[k] != ')' && line[k] != '=')) continue;
    ++k;
    const char* begin = line.c_str() + k;
    char* stop = nullptr;
    const double value = std::strtod(begin, &stop);
    if (stop == begin || !std::isfinite(value)) continue;
    if (index < 1 || index > n_candidates || seen[index - 1]) continue;
    seen[index - 1] = true;
    out.scores[index - 1] = std::clamp(value, 0.0, 100.0);
    ++out.matched;
  }
  out.failed = n_candidates == 0 || 2 * out.matched < n_candidates;
  return out;
}

std::string record_to_line(const LlmScoreRecord& r) {
  json j = {{"prompt_hash", r.prompt_hash}, {"model", r.model},       {"response", r.response},
            {"scores", r.scores},           {"parse_failed", r.parse_failed}, {"timestamp", r.timestamp}};
  return j.dump();
}

LlmScoreRecord record_from_line(std::string_view line) {
  auto j = json::parse(line);
  LlmScoreRecord r;
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.response = j.at("response").get<std::string>();
  r.scores = j.at("scores").get<std::vector<double>>();
  r.parse_failed = j.at("parse_failed").get<bool>();
  r.timestamp = j.value("timestamp", "");
  return r;
}

// ---------------------------------------------------------------- cache

LlmCache::LlmCache(std::filesystem::path file) : file_(std::move(file)) {
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
  std::ifstream in(*file_);
  std::string line;
  std::size_t lineno = 0;
  while (in && std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto r = record_from_line(line);
      index_.try_emplace(key(r.prompt_hash, r.model), std::move(r));
    } catch (const std::exception& e) {
      warn("skipping unreadable cache record at " + file_->string() + ":" + std::to_string(lineno));
    }
  }
  out_.open(*file_, std::ios::app);
  if (!out_) fail(ErrorCode::kIo, "cannot open LLM cache " + file_->string() + " for appending");
}

std::optional<LlmScoreRecord> LlmCache::find(const std::string& prompt_hash, const std::string& model) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(key(prompt_hash, model));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void LlmCache::append(const LlmScoreRecord& record) {
  std::lock_guard lock(mu_);
  if (!index_.try_emplace(key(record.prompt_hash, record.model), record).second) return;
  if (out_.is_open()) {
    out_ << record_to_line(record) << '\n';
    out_.flush();
  }
}

std::size_t LlmCache::size() const {
  std::lock_guard lock(mu_);
  return index_.size();
}

// ---------------------------------------------------------------- mocks

std::string render_scores(std::span<const double> scores) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu: %.17g\n", i + 1, scores[i]);
    out += buf;
  }
  return out;
}

namespace {

class EchoTeacher final : public LlmTeacher {
 public:
  explicit EchoTeacher(const ModelParams<float>& teacher) : teacher_(teacher) {}
  std::string model_id() const override { return "mock:echo-teacher"; }

 protected:
  std::string do_complete(const LlmQuery& q) override {
    const auto raw = score_slot(teacher_, q.query, q.slot, q.candidates);
    std::vector<double> scores(raw.begin(), raw.end());
    auto norm = min_max(scores);
    for (auto& v : norm) v *= 100.0;
    return render_scores(norm);
  }

 private:
  static std::vector<double> min_max(const std::vector<double>& x) {
    std::vector<double> out(x.size(), 0.5);
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*hi > *lo) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - *lo) / (*hi - *lo);
    }
    return out;
  }
  const ModelParams<float>& teacher_;
};

class PlantedRulesTeacher final : public LlmTeacher {
 public:
  explicit PlantedRulesTeacher(const RuleIndex& rules) : rules_(rules) {}
  std::string model_id() const override { return "mock:planted-rules"; }

 protected:
  std::string do_complete(const LlmQuery& q) override {
    const auto expected = rules_.expected(q.query, q.slot);
    std::vector<double> scores(q.candidates.size(), 0.0);
    for (std::size_t i = 0; i < q.candidates.size(); ++i) {
      if (expected && *expected == q.candidates[i]) scores[i] = 100.0;
    }
    return render_scores(scores);
  }

 private:
  const RuleIndex& rules_;
};

class NoiseTeacher final : public LlmTeacher {
 public:
  explicit NoiseTeacher(std::uint64_t seed) : seed_(seed) {}
  std::string model_id() const override { return "mock:noise-" + std::to_string(seed_); }

 protected:
  std::string do_complete(const LlmQuery& q) override {
    std::mt19937_64 rng(seed_ ^ digest_prefix64(q.prompt_hash));
    std::vector<double> scores(q.candidates.size());
    for (auto& v : scores) v = std::floor(uniform_real(rng, 0.0, 101.0));
    return render_scores(scores);
  }

 private:
  std::uint64_t seed_;
};

// ---------------------------------------------------------------- remote

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::kConfig, "llm.endpoint must be an http(s) URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class RemoteTeacher final : public LlmTeacher {
 public:
  explicit RemoteTeacher(RemoteOptions options) : options_(std::move(options)), url_(split_url(options_.endpoint)) {
    if (options_.model.empty()) fail(ErrorCode::kConfig, "llm.model must be set for a remote teacher");
  }
  std::string model_id() const override { return options_.model; }

 protected:
  std::string do_complete(const LlmQuery& q) override {
    const std::string body = chat_request_body(options_.model, q);
    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
    std::string last_error;
    auto delay = options_.backoff;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      httplib::Client client(url_.origin);
      client.set_connection_timeout(options_.timeout);
      client.set_read_timeout(options_.timeout);
      client.set_write_timeout(options_.timeout);
      auto res = client.Post(url_.path, headers, body, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) {
        fail(ErrorCode::kLlmAuth, "LLM endpoint rejected credentials (HTTP " + std::to_string(res->status) +
                                      "); check TKGD_LLM_API_KEY");
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        fail(ErrorCode::kLlmTransport, "LLM endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                           res->body.substr(0, 200));
      }
      return chat_response_content(res->body);
    }
    fail(ErrorCode::kLlmTransport, "LLM endpoint " + options_.endpoint + " unreachable after " +
                                       std::to_string(options_.max_retries + 1) + " attempts (" + last_error + ")");
  }

 private:
  RemoteOptions options_;
  Url url_;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::unique_ptr<LlmTeacher> mock_teacher(MockMode mode, const ModelParams<float>* teacher, const RuleIndex* rules,
                                         std::uint64_t seed) {
  switch (mode) {
    case MockMode::kEchoTeacher:
      if (teacher == nullptr) fail(ErrorCode::kInvalidArgument, "echo-teacher mock needs the task teacher");
      return std::make_unique<EchoTeacher>(*teacher);
    case MockMode::kPlantedRules:
      if (rules == nullptr) fail(ErrorCode::kInvalidArgument, "planted-rules mock needs a rule table");
      return std::make_unique<PlantedRulesTeacher>(*rules);
    case MockMode::kNoise:
      return std::make_unique<NoiseTeacher>(seed);
  }
  fail(ErrorCode::kInvalidArgument, "unknown mock mode");
}

std::unique_ptr<LlmTeacher> remote_teacher(const RemoteOptions& options) {
  return std::make_unique<RemoteTeacher>(options);
}

std::string chat_request_body(const std::string& model, const LlmQuery& q) {
  json body = {{"model", model},
               {"temperature", 0},
               {"messages", json::array({{{"role", "system"}, {"content", q.system_prompt}},
                                         {{"role", "user"}, {"content", q.user_prompt}}})}};
  return body.dump();
}

std::string chat_response_content(std::string_view body) {
  try {
    auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kLlmTransport, std::string("malformed chat-completions response: ") + e.what());
  }
}

namespace {

LlmScores from_record(const LlmScoreRecord& r, std::size_t n, bool cached) {
  LlmScores s;
  s.from_cache = cached;
  s.fallback = r.parse_failed || r.scores.size() != n;
  s.scores = s.fallback ? std::vector<double>(n, 50.0) : r.scores;
  return s;
}

LlmScoreRecord call_and_parse(LlmTeacher& handle, const LlmQuery& q) {
  LlmScoreRecord r;
  r.prompt_hash = to_hex(q.prompt_hash);
  r.model = handle.model_id();
  r.response = handle.complete(q);
  auto parsed = parse_scores(r.response, q.candidates.size());
  r.parse_failed = parsed.failed;
  r.scores = parsed.failed ? std::vector<double>{} : parsed.scores;
  r.timestamp = utc_timestamp();
  if (parsed.failed) {
    warn("LLM response for prompt " + r.prompt_hash.substr(0, 12) + " matched " + std::to_string(parsed.matched) +
         "/" + std::to_string(q.candidates.size()) + " candidates; using fallback scores");
  }
  return r;
}

}  // namespace

LlmScores score_candidates(LlmTeacher& handle, const LlmQuery& q, LlmCache& cache) {
  const std::string hash = to_hex(q.prompt_hash);
  if (auto hit = cache.find(hash, handle.model_id())) return from_record(*hit, q.candidates.size(), true);
  auto record = call_and_parse(handle, q);
  cache.append(record);
  return from_record(record, q.candidates.size(), false);
}

std::vector<LlmScores> score_many(LlmTeacher& handle, std::span<const LlmQuery> queries, LlmCache& cache,
                                  std::size_t max_in_flight) {
  max_in_flight = std::max<std::size_t>(1, max_in_flight);
  const std::string model = handle.model_id();
  std::vector<LlmScores> out(queries.size());
  std::vector<std::size_t> misses;
  std::unordered_map<std::string, std::size_t> first_miss;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const std::string hash = to_hex(queries[i].prompt_hash);
    if (auto hit = cache.find(hash, model)) {
      out[i] = from_record(*hit, queries[i].candidates.size(), true);
    } else if (first_miss.try_emplace(hash, i).second) {
      misses.push_back(i);
    }
  }
  std::vector<LlmScoreRecord> records(misses.size());
  for (std::size_t begin = 0; begin < misses.size(); begin += max_in_flight) {
    const std::size_t end = std::min(misses.size(), begin + max_in_flight);
    if (end - begin == 1) {
      records[begin] = call_and_parse(handle, queries[misses[begin]]);
      continue;
    }
    std::vector<std::future<LlmScoreRecord>> wave;
    for (std::size_t k = begin; k < end; ++k) {
      wave.push_back(std::async(std::launch::async, [&handle, &q = queries[misses[k]]] { return call_and_parse(handle, q); }));
    }
    for (std::size_t k = begin; k < end; ++k) records[k] = wave[k - begin].get();
  }
  for (std::size_t k = 0; k < misses.size(); ++k) {
    cache.append(records[k]);
    out[misses[k]] = from_record(records[k], queries[misses[k]].candidates.size(), false);
  }
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (out[i].scores.empty()) {
      const auto hit = cache.find(to_hex(queries[i].prompt_hash), model);
      out[i] = from_record(*hit, queries[i].candidates.size(), true);
    }
  }
  return out;
}

}  // namespace tkgd
