// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "digest.hpp"
#include "graph.hpp"
#include "models.hpp"
#include "synthetic.hpp"

namespace tkgd {

inline constexpr std::size_t kMaxPromptCandidates = 50;

/// One rescoring request: a query and an ordered candidate subset.
struct LlmQuery {
  Quadruple query;
  Slot slot = Slot::kObject;
  std::vector<EntityId> candidates;
  std::string system_prompt;
  std::string user_prompt;
  std::string text;  // canonical prompt: system, blank line, user
  Digest prompt_hash{};
};

/// Names rendered on one line: backslash, newline, CR and tab are escaped.
std::string sanitize_name(std::string_view name);

LlmQuery build_prompt(const Quadruple& q, Slot slot, std::span<const EntityId> candidates, const Vocabulary& vocab);

struct ParsedScores {
  std::vector<double> scores;  // [0, 100]; unmatched indices hold 50
  std::size_t matched = 0;
  bool failed = false;         // fewer than half of the candidates matched
};

/// Reads `index: score` lines (1-based index).
ParsedScores parse_scores(std::string_view response, std::size_t n_candidates);

struct LlmScoreRecord {
  std::string prompt_hash;  // lowercase hex
  std::string model;
  std::string response;
  std::vector<double> scores;
  bool parse_failed = false;
  std::string timestamp;
};

std::string record_to_line(const LlmScoreRecord& r);
LlmScoreRecord record_from_line(std::string_view line);

/// Append-only score cache keyed by (prompt digest, model). With a file path
/// every record is replayed on open and appended on insert.
class LlmCache {
 public:
  LlmCache() = default;
  explicit LlmCache(std::filesystem::path file);

  std::optional<LlmScoreRecord> find(const std::string& prompt_hash, const std::string& model) const;
  void append(const LlmScoreRecord& record);
  std::size_t size() const;
  const std::optional<std::filesystem::path>& file() const { return file_; }

 private:
  static std::string key(const std::string& hash, const std::string& model) { return hash + "|" + model; }
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> file_;
  std::ofstream out_;
  std::unordered_map<std::string, LlmScoreRecord> index_;
};

/// Handle to the auxiliary teacher. `complete` returns the raw response text.
class LlmTeacher {
 public:
  virtual ~LlmTeacher() = default;
  virtual std::string model_id() const = 0;
  std::string complete(const LlmQuery& q) {
    calls_.fetch_add(1);
    return do_complete(q);
  }
  /// Number of `complete` invocations, i.e. cache misses served.
  std::size_t calls() const { return calls_.load(); }

 protected:
  virtual std::string do_complete(const LlmQuery& q) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Renders scores as `index: score` lines, full precision.
std::string render_scores(std::span<const double> scores);

enum class MockMode { kEchoTeacher, kPlantedRules, kNoise };

/// Offline teachers. Echo needs `teacher`, planted-rules needs `rules`.
std::unique_ptr<LlmTeacher> mock_teacher(MockMode mode, const ModelParams<float>* teacher = nullptr,
                                         const RuleIndex* rules = nullptr, std::uint64_t seed = 0);

struct RemoteOptions {
  std::string endpoint;  // full URL of the chat-completions route
  std::string model;
  std::string api_key;   // from TKGD_LLM_API_KEY
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{60};
};

std::unique_ptr<LlmTeacher> remote_teacher(const RemoteOptions& options);

/// Request body sent to the chat-completions endpoint.
std::string chat_request_body(const std::string& model, const LlmQuery& q);
/// First choice's message content from a chat-completions response body.
std::string chat_response_content(std::string_view body);

struct LlmScores {
  std::vector<double> scores;
  bool fallback = false;   // parse failure; excluded from alignment
  bool from_cache = false;
};

LlmScores score_candidates(LlmTeacher& handle, const LlmQuery& q, LlmCache& cache);

/// Resolves a batch: cache hits first, then misses with at most `max_in_flight`
/// concurrent requests. Records are appended in query order.
std::vector<LlmScores> score_many(LlmTeacher& handle, std::span<const LlmQuery> queries, LlmCache& cache,
                                  std::size_t max_in_flight);

}  // namespace tkgd
