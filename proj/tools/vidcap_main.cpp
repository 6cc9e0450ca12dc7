// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vidcap/vidcap.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUser = 2;

int exit_code(vidcap_status s) {
  switch (s) {
    case VIDCAP_OK: return kExitOk;
    case VIDCAP_ERR_INTERNAL:
    case VIDCAP_ERR_NUMERIC: return kExitInternal;
    default: return kExitUser;
  }
}

// One JSON object per line on stderr.
int report_error(const std::string& command, vidcap_status s, const std::string& message) {
  nlohmann::ordered_json j;
  j["level"] = "error";
  j["command"] = command;
  j["status"] = vidcap_status_name(s);
  j["exit_code"] = exit_code(s);
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return exit_code(s);
}

int finish(const std::string& command, vidcap_status s, char*& out) {
  if (s != VIDCAP_OK) return report_error(command, s, vidcap_last_error());
  if (out) {
    std::fputs(out, stdout);
    vidcap_string_free(out);
  }
  return kExitOk;
}

struct ConfigHandle {
  vidcap_config* p = nullptr;
  ~ConfigHandle() { vidcap_config_free(p); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vidcap: segment captioning experiments from ASR and frame features"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> profile;
  bool dry_run = false;
  bool quiet = false;
  bool verbose = false;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--profile", profile, "hyperparameter profile")->check(CLI::IsMember({"paper", "desk"}));
  app.add_flag("--dry-run", dry_run, "validate the config and print the plan");
  app.add_flag("-q,--quiet", quiet, "only log errors");
  app.add_flag("-v,--verbose", verbose, "debug logging");

  auto* run = app.add_subcommand("run", "cross-validated training, decoding and scoring");
  auto* sweep = app.add_subcommand("oracle-sweep", "oracle label fraction sweep on one fold");
  auto* analyze = app.add_subcommand("analyze", "per-word modality complementarity");
  auto* report = app.add_subcommand("report", "markdown tables from an output directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "output directory (default: the config's output_dir)");
  auto* synth = app.add_subcommand("synth", "write the synthetic corpus");
  std::string synth_out;
  synth->add_option("--out", synth_out, "destination directory")->required();
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  auto* ingest = app.add_subcommand("ingest", "validate a corpus file and its features");
  std::string ingest_corpus, ingest_features;
  ingest->add_option("corpus", ingest_corpus, "corpus JSON-lines file")->required();
  ingest->add_option("--features", ingest_features, "features directory (default: next to the corpus)");

  // Global flags may come before or after the verb.
  for (auto* sub : {run, sweep, analyze, report, synth, stats, ingest}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("", VIDCAP_ERR_ARGUMENT, e.what());
  }

  const std::string command = app.get_subcommands().front()->get_name();
  vidcap_set_log_level(quiet ? 3 : verbose ? 0 : 1);

  vidcap_overrides ov{};
  if (seed) {
    ov.has_seed = 1;
    ov.seed = *seed;
  }
  if (jobs) ov.jobs = *jobs;
  if (profile) ov.profile = profile->c_str();

  ConfigHandle cfg;
  if (!config_path.empty()) {
    const vidcap_status s = vidcap_config_load(config_path.c_str(), &ov, &cfg.p);
    if (s != VIDCAP_OK) return report_error(command, s, vidcap_last_error());
  }
  auto need_config = [&]() -> bool { return cfg.p != nullptr; };
  const int dry = dry_run ? 1 : 0;
  char* out = nullptr;

  if (command == "ingest") return finish(command, vidcap_ingest(ingest_corpus.c_str(),
                                                                ingest_features.empty() ? nullptr : ingest_features.c_str(),
                                                                dry, &out),
                                         out);
  if (command == "synth") return finish(command, vidcap_synth(cfg.p, synth_out.c_str(), dry, &out), out);
  if (command == "report") {
    if (report_dir.empty()) {
      if (!need_config()) return report_error(command, VIDCAP_ERR_CONFIG, "report needs a directory or --config");
      char* dir = nullptr;
      if (vidcap_config_output_dir(cfg.p, &dir) != VIDCAP_OK) return report_error(command, VIDCAP_ERR_INTERNAL, vidcap_last_error());
      report_dir = dir;
      vidcap_string_free(dir);
    }
    if (dry_run) {
      std::printf("report: render tables from %s\n", report_dir.c_str());
      return kExitOk;
    }
    return finish(command, vidcap_report(report_dir.c_str(), &out), out);
  }

  if (!need_config()) return report_error(command, VIDCAP_ERR_CONFIG, command + " needs --config PATH");
  if (command == "run") return finish(command, vidcap_run(cfg.p, dry, &out), out);
  if (command == "oracle-sweep") return finish(command, vidcap_oracle_sweep(cfg.p, dry, &out), out);
  if (command == "analyze") return finish(command, vidcap_analyze(cfg.p, dry, &out), out);
  if (command == "stats") return finish(command, vidcap_stats(cfg.p, dry, &out), out);
  return report_error(command, VIDCAP_ERR_INTERNAL, "unhandled command");
}
