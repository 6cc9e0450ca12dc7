#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "vidcap/vidcap.h"

namespace fs = std::filesystem;

namespace {

struct Owned {
  char* s = nullptr;
  ~Owned() { vidcap_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

fs::path temp_dir(const char* tag) {
  auto p = fs::temp_directory_path() / (std::string("vidcap_capi_") + tag + std::to_string(std::random_device{}()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(vidcap_version()).size() > 0);
  CHECK(std::string(vidcap_status_name(VIDCAP_ERR_CONFIG)) == "config");
  CHECK(vidcap_set_log_level(9) == VIDCAP_ERR_ARGUMENT);
  CHECK(vidcap_set_log_level(1) == VIDCAP_OK);
}

TEST_CASE("null arguments are rejected") {
  vidcap_config* cfg = nullptr;
  CHECK(vidcap_config_load(nullptr, nullptr, &cfg) == VIDCAP_ERR_ARGUMENT);
  CHECK(cfg == nullptr);
  CHECK(std::string(vidcap_last_error()).size() > 0);
  double out = 0;
  CHECK(vidcap_roc_auc(nullptr, nullptr, 2, &out) == VIDCAP_ERR_ARGUMENT);
}

TEST_CASE("config errors map to codes") {
  const auto dir = temp_dir("cfg");
  vidcap_config* cfg = nullptr;
  CHECK(vidcap_config_parse("{\"bogus\": 1}", dir.c_str(), nullptr, &cfg) == VIDCAP_ERR_CONFIG);
  CHECK(std::string(vidcap_last_error()).find("bogus") != std::string::npos);
  CHECK(vidcap_config_load((dir / "nope.json").c_str(), nullptr, &cfg) != VIDCAP_OK);
  Owned o;
  CHECK(vidcap_report(dir.c_str(), &o.s) == VIDCAP_ERR_CONFIG);
  fs::remove_all(dir);
}

TEST_CASE("metrics through the C API") {
  const char* c[] = {"add the oil to the pan", "stir the soup well now"};
  double v = 0;
  REQUIRE(vidcap_score("bleu4", c, c, 2, &v) == VIDCAP_OK);
  CHECK(v == doctest::Approx(100.0));
  REQUIRE(vidcap_score("rouge_l", c, c, 2, &v) == VIDCAP_OK);
  CHECK(v == doctest::Approx(100.0));
  CHECK(vidcap_score("wer", c, c, 2, &v) != VIDCAP_OK);

  const double s[] = {0.9, 0.8, 0.1};
  const int y[] = {1, 0, 0};
  REQUIRE(vidcap_roc_auc(s, y, 3, &v) == VIDCAP_OK);
  CHECK(v == 100.0);

  const double a[] = {3, 4, 5}, b[] = {3, 4, 5};
  double p = 0;
  int sig = 1;
  REQUIRE(vidcap_significance(a, b, 3, 0.1, 0.8, 0.05, &p, &sig) == VIDCAP_OK);
  CHECK(p == 1.0);
  CHECK(sig == 0);
}

TEST_CASE("synth, corpus load and a baseline run") {
  const auto dir = temp_dir("run");
  const std::string cfg_json = R"({"synthetic": {"seed": 2, "num_videos": 6}, "splits": {"J": 2},
    "systems": ["cnst", "ret"], "output_dir": "out", "seed": 1})";
  vidcap_config* cfg = nullptr;
  REQUIRE(vidcap_config_parse(cfg_json.c_str(), dir.c_str(), nullptr, &cfg) == VIDCAP_OK);
  {
    Owned o;
    REQUIRE(vidcap_synth(cfg, (dir / "data").c_str(), 0, &o.s) == VIDCAP_OK);
  }
  vidcap_corpus* corpus = nullptr;
  REQUIRE(vidcap_corpus_load((dir / "data" / "corpus.jsonl").c_str(), (dir / "data" / "features").c_str(), &corpus) ==
          VIDCAP_OK);
  size_t nv = 0, ns = 0, fd = 0;
  REQUIRE(vidcap_corpus_counts(corpus, &nv, &ns, &fd) == VIDCAP_OK);
  CHECK(nv == 6);
  CHECK(ns == 30);
  CHECK(fd > 0);
  vidcap_corpus_free(corpus);
  {
    Owned o;
    REQUIRE(vidcap_run(cfg, 0, &o.s) == VIDCAP_OK);
    Owned od;
    REQUIRE(vidcap_config_output_dir(cfg, &od.s) == VIDCAP_OK);
    CHECK(fs::exists(fs::path(od.str()) / "summary.json"));
    Owned r;
    REQUIRE(vidcap_report(od.s, &r.s) == VIDCAP_OK);
    CHECK(r.str().find("ret") != std::string::npos);
  }
  vidcap_config_free(cfg);
  fs::remove_all(dir);
}
