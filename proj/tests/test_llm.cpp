// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <fstream>
#include <thread>

#include "error.hpp"
#include "llm.hpp"
#include "losses.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace tkgd;

namespace {

Dataset tiny() {
  return build_dataset({{"Paris", "capital_of", "France", 1990}, {"Rome", "capital_of", "Italy", 1990},
                        {"Berlin", "capital_of", "Germany", 1991}},
                       {}, {});
}

std::vector<EntityId> first_n(std::size_t n) {
  std::vector<EntityId> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = static_cast<EntityId>(i);
  return c;
}

// Minimal chat-completions endpoint on a loopback port.
class FakeServer {
 public:
  explicit FakeServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  std::atomic<int> hits{0};

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string chat_reply(const std::string& content) {
  nlohmann::json j = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return j.dump();
}

RemoteOptions fast_options(const std::string& endpoint) {
  RemoteOptions o;
  o.endpoint = endpoint;
  o.model = "test-model";
  o.max_retries = 2;
  o.backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST_CASE("prompt: deterministic with one numbered line per candidate") {
  const Dataset d = tiny();
  const Quadruple q{*d.vocab.find_entity("Paris"), 0, *d.vocab.find_entity("France"), 0};
  const auto cands = first_n(6);
  const auto a = build_prompt(q, Slot::kObject, cands, d.vocab);
  const auto b = build_prompt(q, Slot::kObject, cands, d.vocab);
  CHECK(a.text == b.text);
  CHECK(a.prompt_hash == b.prompt_hash);
  CHECK(a.text.find("(Paris, capital_of, ?, 1990)") != std::string::npos);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::string line = std::to_string(i + 1) + ". " + d.vocab.entity_name(cands[i]) + "\n";
    CHECK(a.user_prompt.find(line) != std::string::npos);
  }
  CHECK(a.user_prompt.find("7. ") == std::string::npos);
  const auto subj = build_prompt(q, Slot::kSubject, cands, d.vocab);
  CHECK(subj.text.find("(?, capital_of, France, 1990)") != std::string::npos);
  CHECK(subj.prompt_hash != a.prompt_hash);
}

TEST_CASE("prompt: candidate order changes the hash") {
  const Dataset d = tiny();
  const Quadruple q{0, 0, 1, 0};
  std::vector<EntityId> c{0, 1, 2};
  const auto a = build_prompt(q, Slot::kObject, c, d.vocab);
  std::swap(c[0], c[2]);
  CHECK(build_prompt(q, Slot::kObject, c, d.vocab).prompt_hash != a.prompt_hash);
}

TEST_CASE("prompt: argument checks") {
  const Dataset d = tiny();
  const Quadruple q{0, 0, 1, 0};
  CHECK_THROWS_AS(build_prompt(q, Slot::kObject, {}, d.vocab), Error);
  std::vector<EntityId> many(kMaxPromptCandidates + 1, 0);
  CHECK_THROWS_AS(build_prompt(q, Slot::kObject, many, d.vocab), Error);
  CHECK_THROWS_AS(build_prompt({99, 0, 1, 0}, Slot::kObject, first_n(2), d.vocab), Error);
}

TEST_CASE("sanitize_name escapes control characters") {
  CHECK(sanitize_name("plain") == "plain");
  CHECK(sanitize_name("a\nb") == "a\\nb");
  CHECK(sanitize_name("a\tb\r") == "a\\tb\\r");
  CHECK(sanitize_name("back\\slash") == "back\\\\slash");
}

TEST_CASE("parse_scores: well formed") {
  const auto p = parse_scores("1: 90\n2: 10\n3: 55.5\n", 3);
  CHECK_FALSE(p.failed);
  CHECK(p.matched == 3);
  CHECK(p.scores == std::vector<double>{90, 10, 55.5});
}

TEST_CASE("parse_scores: tolerant separators and chatter") {
  const auto p = parse_scores("Sure!\n  2) 40\n1. 70 (likely)\n3 = 0\n", 3);
  CHECK_FALSE(p.failed);
  CHECK(p.scores == std::vector<double>{70, 40, 0});
}

TEST_CASE("parse_scores: clamping") {
  const auto p = parse_scores("1: 150\n2: -3\n", 2);
  CHECK(p.scores == std::vector<double>{100, 0});
}

TEST_CASE("parse_scores: one of four is a failure") {
  const auto p = parse_scores("1: 80\nno idea\n", 4);
  CHECK(p.failed);
  CHECK(p.matched == 1);
  CHECK(p.scores == std::vector<double>{80, 50, 50, 50});
}

TEST_CASE("parse_scores: half matched is accepted") {
  CHECK_FALSE(parse_scores("1: 80\n4: 20\n", 4).failed);
}

TEST_CASE("parse_scores: duplicates and out of range indices are ignored") {
  const auto p = parse_scores("1: 80\n1: 10\n7: 99\n0: 5\n2: 30\n", 2);
  CHECK(p.matched == 2);
  CHECK(p.scores == std::vector<double>{80, 30});
}

TEST_CASE("render and parse round trip exactly") {
  const std::vector<double> s{0, 1.0 / 3.0, 99.999999999, 100};
  const auto p = parse_scores(render_scores(s), s.size());
  CHECK(p.scores == s);
}

TEST_CASE("cache records round trip") {
  LlmScoreRecord r{"ab12", "m", "1: 5\n\"quoted\"", {5.0, 0.25}, false, "2026-01-01T00:00:00Z"};
  const auto back = record_from_line(record_to_line(r));
  CHECK(back.prompt_hash == r.prompt_hash);
  CHECK(back.model == r.model);
  CHECK(back.response == r.response);
  CHECK(back.scores == r.scores);
  CHECK(back.parse_failed == r.parse_failed);
  CHECK(record_to_line(r).find('\n') == std::string::npos);
}

TEST_CASE("cache persists across reopen and keys on the model") {
  test::TempDir dir("cache");
  const auto file = dir.path() / "sub" / "cache.jsonl";
  {
    LlmCache c(file);
    c.append({"h1", "m1", "r", {1.0}, false, ""});
    c.append({"h1", "m2", "r", {2.0}, false, ""});
    c.append({"h1", "m1", "dup", {9.0}, false, ""});
    CHECK(c.size() == 2);
  }
  LlmCache again(file);
  CHECK(again.size() == 2);
  CHECK(again.find("h1", "m1")->scores == std::vector<double>{1.0});
  CHECK(again.find("h1", "m2")->scores == std::vector<double>{2.0});
  CHECK_FALSE(again.find("h2", "m1").has_value());
}

TEST_CASE("cache contents never include the credential") {
  test::TempDir dir("cache-key");
  const auto file = dir.path() / "cache.jsonl";
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_reply("1: 10\n2: 20\n"), "application/json");
  });
  auto opts = fast_options(server.endpoint());
  opts.api_key = "sk-secret-value-123";
  auto handle = remote_teacher(opts);
  const Dataset d = tiny();
  LlmCache cache(file);
  score_candidates(*handle, build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(2), d.vocab), cache);
  std::ifstream in(file);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(!text.empty());
  CHECK(text.find("sk-secret") == std::string::npos);
}

TEST_CASE("warm cache makes no further calls") {
  const Dataset d = tiny();
  auto handle = mock_teacher(MockMode::kNoise, nullptr, nullptr, 3);
  LlmCache cache;
  std::vector<LlmQuery> qs;
  for (EntityId s = 0; s < 3; ++s) qs.push_back(build_prompt({s, 0, 1, 0}, Slot::kObject, first_n(4), d.vocab));
  qs.push_back(qs[0]);  // duplicate prompt within a batch
  const auto first = score_many(*handle, qs, cache, 2);
  CHECK(handle->calls() == 3);
  CHECK(first[3].scores == first[0].scores);
  const auto second = score_many(*handle, qs, cache, 2);
  CHECK(handle->calls() == 3);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    CHECK(second[i].from_cache);
    CHECK(second[i].scores == first[i].scores);
  }
  CHECK(score_candidates(*handle, qs[1], cache).from_cache);
  CHECK(handle->calls() == 3);
}

TEST_CASE("noise mock is deterministic per seed and prompt") {
  const Dataset d = tiny();
  const auto q = build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(5), d.vocab);
  auto a = mock_teacher(MockMode::kNoise, nullptr, nullptr, 11);
  auto b = mock_teacher(MockMode::kNoise, nullptr, nullptr, 11);
  auto c = mock_teacher(MockMode::kNoise, nullptr, nullptr, 12);
  CHECK(a->complete(q) == b->complete(q));
  CHECK(a->complete(q) != c->complete(q));
  CHECK(a->model_id() != c->model_id());
  const auto p = parse_scores(a->complete(q), 5);
  for (double v : p.scores) {
    CHECK(v >= 0);
    CHECK(v <= 100);
    CHECK(v == std::floor(v));
  }
}

TEST_CASE("planted-rules mock scores the rule's entity 100 and the rest 0") {
  SyntheticSpec spec;
  spec.n_entities = 12;
  spec.n_relations = 2;
  spec.n_buckets = 6;
  spec.n_facts = 60;
  spec.pattern_strength = 1.0;
  const auto syn = generate_synthetic(spec);
  const RuleIndex rules(syn.rules, syn.data.vocab);
  auto handle = mock_teacher(MockMode::kPlantedRules, nullptr, &rules);
  const auto all = first_n(syn.data.vocab.num_entities());
  for (const auto& q : syn.data.train) {
    for (Slot slot : {Slot::kObject, Slot::kSubject}) {
      const auto lq = build_prompt(q, slot, all, syn.data.vocab);
      const auto p = parse_scores(handle->complete(lq), all.size());
      const EntityId truth = slot == Slot::kObject ? q.o : q.s;
      for (EntityId e = 0; e < all.size(); ++e) CHECK(p.scores[e] == (e == truth ? 100.0 : 0.0));
    }
  }
}

TEST_CASE("echo mock reproduces the teacher ordering, so alignment to it is zero") {
  const Dataset d = test::random_dataset(12, 2, 3, 30, 0, 5);
  const auto teacher = init_params<float>(dims_for(Backbone::kTTransE, 8, d.vocab), 2);
  auto handle = mock_teacher(MockMode::kEchoTeacher, &teacher);
  LlmCache cache;
  const auto cands = first_n(10);
  for (const auto& q : d.train) {
    const auto lq = build_prompt(q, Slot::kObject, cands, d.vocab);
    const auto llm = score_candidates(*handle, lq, cache);
    REQUIRE_FALSE(llm.fallback);
    const auto raw = score_slot(teacher, q, Slot::kObject, cands);
    const std::vector<double> student(raw.begin(), raw.end());
    CHECK(normalized_alignment_loss(llm.scores, student, 1.0).value < 1e-12);
  }
}

TEST_CASE("mocks need their inputs") {
  CHECK_THROWS_AS(mock_teacher(MockMode::kEchoTeacher), Error);
  CHECK_THROWS_AS(mock_teacher(MockMode::kPlantedRules), Error);
}

TEST_CASE("unparseable response falls back to uniform scores and is cached as failed") {
  class Babbler final : public LlmTeacher {
   public:
    std::string model_id() const override { return "babbler"; }

   protected:
    std::string do_complete(const LlmQuery&) override { return "I cannot rank these."; }
  } handle;
  const Dataset d = tiny();
  LlmCache cache;
  set_warnings_enabled(false);
  const auto lq = build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(4), d.vocab);
  const auto s = score_candidates(handle, lq, cache);
  set_warnings_enabled(true);
  CHECK(s.fallback);
  CHECK(s.scores == std::vector<double>(4, 50.0));
  CHECK(cache.find(to_hex(lq.prompt_hash), "babbler")->parse_failed);
  CHECK(score_candidates(handle, lq, cache).fallback);
  CHECK(handle.calls() == 1);
}

TEST_CASE("chat request and response bodies") {
  const Dataset d = tiny();
  const auto lq = build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(2), d.vocab);
  const auto body = nlohmann::json::parse(chat_request_body("gpt-x", lq));
  CHECK(body.at("model") == "gpt-x");
  CHECK(body.at("temperature") == 0);
  CHECK(body.at("messages").size() == 2);
  CHECK(body.at("messages")[0].at("role") == "system");
  CHECK(body.at("messages")[0].at("content") == lq.system_prompt);
  CHECK(body.at("messages")[1].at("content") == lq.user_prompt);
  CHECK(chat_response_content(chat_reply("1: 3")) == "1: 3");
  CHECK_THROWS_AS(chat_response_content("{}"), Error);
  CHECK_THROWS_AS(chat_response_content("not json"), Error);
}

TEST_CASE("remote: successful exchange sends the bearer token") {
  std::string auth, model;
  FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    model = nlohmann::json::parse(req.body).at("model");
    res.set_content(chat_reply("1: 70\n2: 30\n"), "application/json");
  });
  auto opts = fast_options(server.endpoint());
  opts.api_key = "k-123";
  auto handle = remote_teacher(opts);
  const Dataset d = tiny();
  LlmCache cache;
  const auto s = score_candidates(*handle, build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(2), d.vocab), cache);
  CHECK(s.scores == std::vector<double>{70, 30});
  CHECK(auth == "Bearer k-123");
  CHECK(model == "test-model");
  CHECK(handle->model_id() == "test-model");
}

TEST_CASE("remote: 401 is an authentication error without retries") {
  FakeServer server([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  auto handle = remote_teacher(fast_options(server.endpoint()));
  const Dataset d = tiny();
  const auto lq = build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(2), d.vocab);
  try {
    handle->complete(lq);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLlmAuth);
  }
  CHECK(server.hits == 1);
}

TEST_CASE("remote: 429 and 500 are retried") {
  std::atomic<int> n{0};
  FakeServer server([&](const httplib::Request&, httplib::Response& res) {
    const int k = n++;
    if (k == 0) res.status = 429;
    else if (k == 1) res.status = 500;
    else res.set_content(chat_reply("1: 1\n"), "application/json");
  });
  auto handle = remote_teacher(fast_options(server.endpoint()));
  const Dataset d = tiny();
  CHECK(handle->complete(build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(1), d.vocab)) == "1: 1\n");
  CHECK(server.hits == 3);
}

TEST_CASE("remote: persistent server errors exhaust the retries") {
  FakeServer server([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  auto handle = remote_teacher(fast_options(server.endpoint()));
  const Dataset d = tiny();
  try {
    handle->complete(build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(1), d.vocab));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLlmTransport);
  }
  CHECK(server.hits == 3);
}

TEST_CASE("remote: unreachable endpoint is a transport error") {
  auto opts = fast_options("http://127.0.0.1:1/v1/chat/completions");
  opts.max_retries = 1;
  opts.timeout = std::chrono::seconds(2);
  auto handle = remote_teacher(opts);
  const Dataset d = tiny();
  try {
    handle->complete(build_prompt({0, 0, 1, 0}, Slot::kObject, first_n(1), d.vocab));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLlmTransport);
  }
}

TEST_CASE("remote: configuration errors") {
  CHECK_THROWS_AS(remote_teacher(fast_options("not a url")), Error);
  auto opts = fast_options("http://127.0.0.1:1/x");
  opts.model.clear();
  CHECK_THROWS_AS(remote_teacher(opts), Error);
}
