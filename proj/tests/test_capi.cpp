// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include <doctest.h>
#include <tkgd/tkgd.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& tag) {
    static int n = 0;
    path = fs::temp_directory_path() / ("tkgd_capi_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string mini_text(const fs::path& out) {
  return "[data]\npath = " + (fs::path(TKGD_TEST_DATA) / "mini").string() +
         "\n[model]\nteacher_dim = 12\nstudent_dim = 3\n"
         "[train]\nbatch_size = 32\nmax_epochs = 5\n"
         "[llm]\nmode = mock-echo\ntopk = 4\n"
         "[run]\nout = " + out.string() + "\n";
}

tkgd_config* parsed(const std::string& text) {
  tkgd_config* cfg = nullptr;
  REQUIRE(tkgd_config_parse(text.c_str(), &cfg) == TKGD_OK);
  REQUIRE(cfg != nullptr);
  return cfg;
}

void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->emplace_back(line); }

}  // namespace

TEST_CASE("capi: version and status names") {
  CHECK(std::strlen(tkgd_version()) > 0);
  CHECK(std::string(tkgd_status_name(TKGD_OK)) == "ok");
  CHECK(std::string(tkgd_status_name(TKGD_E_CONFIG)) == "config error");
  CHECK(std::strlen(tkgd_status_name(static_cast<tkgd_status>(77))) > 0);
}

TEST_CASE("capi: configuration errors carry a message") {
  tkgd_config* cfg = nullptr;
  CHECK(tkgd_config_parse("[model]\nstudnet_dim = 3\n", &cfg) == TKGD_E_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(tkgd_last_error()).find("studnet_dim") != std::string::npos);
  CHECK(tkgd_config_parse("[model]\nstudent_dim = 0\n", &cfg) == TKGD_E_CONFIG);
  CHECK(std::string(tkgd_last_error()).find("model.student_dim") != std::string::npos);
  CHECK(tkgd_config_load("/nonexistent/x.ini", &cfg) == TKGD_E_IO);
  CHECK(tkgd_config_parse(nullptr, &cfg) == TKGD_E_INVALID_ARGUMENT);
  CHECK(tkgd_config_parse("", nullptr) == TKGD_E_INVALID_ARGUMENT);
}

TEST_CASE("capi: settings and digests") {
  tkgd_config* cfg = parsed("");
  char a[65], b[65];
  REQUIRE(tkgd_config_digest(cfg, a) == TKGD_OK);
  CHECK(std::strlen(a) == 64);
  CHECK(tkgd_config_set(cfg, "run.threads", "3") == TKGD_OK);
  tkgd_config_digest(cfg, b);
  CHECK(std::string(a) == b);
  CHECK(tkgd_config_set(cfg, "distill.tau", "2") == TKGD_OK);
  tkgd_config_digest(cfg, b);
  CHECK(std::string(a) != b);
  CHECK(tkgd_config_set(cfg, "distill.tau", "-1") == TKGD_E_CONFIG);
  CHECK(tkgd_config_set(cfg, "nope", "1") == TKGD_E_CONFIG);
  CHECK(tkgd_config_set(cfg, nullptr, "1") == TKGD_E_INVALID_ARGUMENT);
  tkgd_config_free(cfg);
  tkgd_config_free(nullptr);
}

TEST_CASE("capi: full pipeline") {
  Scratch dir("pipe");
  tkgd_config* cfg = parsed(mini_text(dir.path));
  std::vector<std::string> lines;
  tkgd_config_set_printer(cfg, collect, &lines);

  REQUIRE(tkgd_prepare(cfg) == TKGD_OK);
  CHECK_FALSE(lines.empty());
  tkgd_dataset* d = nullptr;
  REQUIRE(tkgd_dataset_load(cfg, &d) == TKGD_OK);
  CHECK(tkgd_dataset_entities(d) == 31);
  CHECK(tkgd_dataset_relations(d) == 5);
  CHECK(tkgd_dataset_times(d) == 55);
  CHECK(tkgd_dataset_facts(d, "train") == 88);
  CHECK(tkgd_dataset_facts(d, "valid") == 11);
  CHECK(tkgd_dataset_facts(d, "test") == 11);
  CHECK(tkgd_dataset_facts(d, "other") == 0);
  tkgd_dataset_free(d);

  REQUIRE(tkgd_train_teacher(cfg) == TKGD_OK);
  REQUIRE(tkgd_distill(cfg, nullptr) == TKGD_OK);

  tkgd_report* r = nullptr;
  REQUIRE(tkgd_evaluate(cfg, nullptr, nullptr, &r) == TKGD_OK);
  CHECK(tkgd_report_queries(r) == 22);
  const double mrr = tkgd_report_mrr(r);
  CHECK(mrr > 0);
  CHECK(mrr <= 1);
  CHECK(tkgd_report_mr(r) >= 1);
  CHECK(tkgd_report_hits(r, 10) >= tkgd_report_hits(r, 3));
  CHECK(tkgd_report_hits(r, 3) >= tkgd_report_hits(r, 1));
  CHECK(tkgd_report_hits(r, 5) == -1);
  CHECK(std::string(tkgd_report_json(r)).find("\"split\": \"test\"") != std::string::npos);
  CHECK(std::string(tkgd_report_table(r)).find("MRR") != std::string::npos);
  tkgd_report_free(r);
  CHECK(tkgd_evaluate(cfg, nullptr, "valid", nullptr) == TKGD_OK);
  CHECK(tkgd_evaluate(cfg, nullptr, "holdout", nullptr) == TKGD_E_INVALID_ARGUMENT);

  REQUIRE(tkgd_export(cfg, nullptr, nullptr) == TKGD_OK);
  CHECK(fs::exists(dir.path / "student_embeddings.txt"));

  tkgd_model* m = nullptr;
  const std::string student = (dir.path / "student.ckpt").string();
  REQUIRE(tkgd_model_load(student.c_str(), &m) == TKGD_OK);
  CHECK(tkgd_model_dim(m) == 3);
  CHECK(std::string(tkgd_model_backbone(m)) == "ttranse");
  double s = 1;
  CHECK(tkgd_model_score(m, 0, 0, 1, 0, &s) == TKGD_OK);
  CHECK(s <= 0);  // negative distance
  CHECK(std::isfinite(s));
  CHECK(tkgd_model_score(m, 31, 0, 1, 0, &s) == TKGD_E_INVALID_ARGUMENT);
  CHECK(tkgd_model_score(m, 0, 0, 1, 55, &s) == TKGD_E_INVALID_ARGUMENT);
  CHECK(tkgd_model_score(m, 0, 0, 1, 0, nullptr) == TKGD_E_INVALID_ARGUMENT);
  tkgd_model_free(m);

  size_t calls = 99;
  CHECK(tkgd_cache_llm(cfg, nullptr, nullptr, &calls) == TKGD_OK);
  CHECK(calls == 0);  // distillation already cached every prompt
  tkgd_config_free(cfg);
}

TEST_CASE("capi: checkpoint errors") {
  Scratch dir("ckpt");
  const fs::path bogus = dir.path / "bogus.ckpt";
  std::ofstream(bogus) << "not a checkpoint";
  tkgd_model* m = nullptr;
  CHECK(tkgd_model_load(bogus.c_str(), &m) == TKGD_E_CHECKPOINT);
  CHECK(m == nullptr);
  CHECK(std::string(tkgd_last_error()).find("magic") != std::string::npos);
  CHECK(tkgd_model_load((dir.path / "missing.ckpt").c_str(), &m) == TKGD_E_IO);
}

TEST_CASE("capi: distilling without a teacher is reported") {
  Scratch dir("noteacher");
  tkgd_config* cfg = parsed(mini_text(dir.path));
  REQUIRE(tkgd_prepare(cfg) == TKGD_OK);
  CHECK(tkgd_distill(cfg, nullptr) == TKGD_E_IO);
  CHECK(std::string(tkgd_last_error()).find("teacher.ckpt") != std::string::npos);
  tkgd_config_free(cfg);
}
