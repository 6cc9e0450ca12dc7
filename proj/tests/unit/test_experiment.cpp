#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "vidcap/error.hpp"
#include "vidcap/experiment.hpp"

using namespace vidcap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json baseline_config(const fs::path& out) {
  return {{"synthetic", {{"seed", 2}, {"num_videos", 12}}},
          {"splits", {{"J", 2}, {"seed", 3}}},
          {"systems", {"cnst", "asc", "fasc", "ret"}},
          {"output_dir", out.string()},
          {"seed", 1}};
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config errors") {
  testutil::TempDir dir("cfg");
  CHECK_THROWS_AS(parse_config("{\"bogus\": 1}", dir.path), ConfigError);
  CHECK_THROWS_AS(parse_config("not json", dir.path), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"synthetic": {}, "systems": ["nope"]})", dir.path), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"synthetic": {}, "splits": {"J": 0}})", dir.path), ConfigError);

  const auto cfg = parse_config(R"({"corpus": "missing.jsonl", "systems": ["cnst"]})", dir.path);
  CHECK(cfg.corpus_path == dir.path / "missing.jsonl");
  try {
    check_inputs(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("missing.jsonl") != std::string::npos);
  }
}

TEST_CASE("overrides and profile") {
  testutil::TempDir dir("ovr");
  CliOverrides o;
  o.seed = 77;
  o.jobs = 3;
  o.profile = "paper";
  const auto cfg = parse_config(baseline_config(dir.path).dump(), dir.path, o);
  CHECK(cfg.seed == 77);
  CHECK(cfg.jobs == 3);
  CHECK(cfg.hparams.d_model == HyperParams::paper().d_model);
  CHECK(cfg.grid.cells(cfg.hparams).size() == 8);
}

TEST_CASE("dry run writes nothing") {
  testutil::TempDir dir("dry");
  const auto out = dir.path / "o";
  const auto cfg = parse_config(baseline_config(out).dump(), dir.path);
  CHECK_FALSE(cmd_run(cfg, true).empty());
  CHECK_FALSE(cmd_analyze(cfg, true).empty());
  CHECK_FALSE(fs::exists(out / "summary.json"));
}

TEST_CASE("baseline run, report and determinism") {
  testutil::TempDir dir("run");
  const auto cfg1 = parse_config(baseline_config(dir.path / "a").dump(), dir.path);
  const auto cfg2 = parse_config(baseline_config(dir.path / "b").dump(), dir.path);
  cmd_run(cfg1);
  cmd_run(cfg2);
  for (const char* f : {"summary.json", "folds.json", "diversity.json", "significance_rouge_l.json",
                        "predictions/ret.fold1.jsonl", "per_segment/fasc.fold0.csv"}) {
    INFO(f);
    REQUIRE(fs::exists(dir.path / "a" / f));
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
  const auto summary = json::parse(slurp(dir.path / "a" / "summary.json"));
  CHECK(summary["systems"].size() == 4);
  for (const auto& s : summary["systems"]) CHECK(s["per_fold"]["rouge_l"].size() == 2);

  const std::string md = cmd_report(dir.path / "a");
  CHECK(fs::exists(dir.path / "a" / "report.md"));
  for (const char* s : {"| cnst", "| asc", "| fasc", "| ret"}) CHECK(md.find(s) != std::string::npos);
}

TEST_CASE("report on an empty directory names what is missing") {
  testutil::TempDir dir("rep");
  try {
    cmd_report(dir.path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("summary.json") != std::string::npos);
  }
}

TEST_CASE("synth then ingest from a corpus file") {
  testutil::TempDir dir("syn");
  const auto cfg = parse_config(baseline_config(dir.path / "o").dump(), dir.path);
  cmd_synth(cfg, dir.path / "data");
  REQUIRE(fs::exists(dir.path / "data" / "corpus.jsonl"));
  const auto stats = json::parse(cmd_ingest(dir.path / "data" / "corpus.jsonl", dir.path / "data" / "features"));
  CHECK(stats["num_videos"] == 12);

  json c = baseline_config(dir.path / "o2");
  c.erase("synthetic");
  c["corpus"] = "data/corpus.jsonl";
  c["features_dir"] = "data/features";
  c["systems"] = {"cnst"};
  const auto from_file = parse_config(c.dump(), dir.path);
  cmd_run(from_file);
  const auto summary = json::parse(slurp(dir.path / "o2" / "summary.json"));
  CHECK(summary["systems"][0]["system"] == "cnst");
}

}  // TEST_SUITE
